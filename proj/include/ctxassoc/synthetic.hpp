#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "ctxassoc/corpus.hpp"

namespace ctxassoc {

/// Word planted inside every mention of a document's true context types.
/// Masking removes it from segments where the mention is not in focus, so
/// its presence in a segment is exactly the pair label.
inline constexpr const char* kSentinelWord = "zzsentinel";

struct SyntheticOptions {
  std::size_t documents = 200;
  std::size_t dev_documents = 6;
  std::size_t min_sentences = 12;
  std::size_t max_sentences = 30;
  std::size_t min_events = 3;
  std::size_t max_events = 7;
  std::size_t min_types = 3;
  std::size_t max_types = 7;
  std::size_t max_mentions_per_type = 4;
  std::size_t max_positive_types = 2;
  std::size_t filler_vocabulary = 300;
  std::uint64_t seed = 7;
};

/// Planted-signal corpus: each document has one or two "true" context types,
/// every event is annotated with exactly those, and their mentions carry
/// kSentinelWord.
Corpus make_synthetic_corpus(const SyntheticOptions& options);

}  // namespace ctxassoc
