#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ctxassoc/corpus.hpp"
#include "ctxassoc/encoder.hpp"
#include "ctxassoc/segmentation.hpp"
#include "ctxassoc/tokenizer.hpp"

namespace ctxassoc {

/// Classification embeddings of one candidate pair, ascending distance.
struct PairEvidence {
  std::string doc_id;
  std::string event_id;
  std::string grounding_id;
  bool label = false;
  std::size_t nearest_distance = 0;
  std::vector<ClassificationEmbedding> embeddings;
  std::vector<DroppedSegment> dropped;

  /// False when every evidence segment was dropped.
  [[nodiscard]] bool usable() const { return !embeddings.empty(); }
};

struct EvidencePipeline {
  const Corpus* corpus = nullptr;
  const SubwordTokenizer* tokenizer = nullptr;
  const Encoder* encoder = nullptr;
  SegmentOptions segment_options;
  MarkerPooling pooling = MarkerPooling::all_markers;
  std::size_t threads = 1;
  std::ostream* segment_dump = nullptr;  // optional debug dump
};

/// Segments, encodes and pools the k nearest mentions of every pair. The
/// encoder is frozen, so results can be reused for any k' <= k.
std::vector<PairEvidence> embed_pairs(const EvidencePipeline& pipeline, const std::vector<CandidatePair>& pairs,
                                      std::size_t k);

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace ctxassoc
