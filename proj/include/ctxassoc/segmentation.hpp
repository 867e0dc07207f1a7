#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "ctxassoc/corpus.hpp"
#include "ctxassoc/tokenizer.hpp"

namespace ctxassoc {

/// Indices of the four marker tokens, in the order
/// `<EVT>`, `</EVT>`, `<CON>`, `</CON>`.
using MarkerPositions = std::array<std::size_t, 4>;

namespace marker {
inline constexpr std::size_t kEventOpen = 0;
inline constexpr std::size_t kEventClose = 1;
inline constexpr std::size_t kContextOpen = 2;
inline constexpr std::size_t kContextClose = 3;
}  // namespace marker

/// Word-level segment with focus markers and masks applied.
struct MarkedText {
  std::vector<std::string> tokens;
  MarkerPositions markers{};  // word indices
  std::size_t first_sentence = 0;
  std::size_t last_sentence = 0;
};

/// Concatenates the sentences from the event to the mention (inclusive),
/// wraps the focus spans in markers and replaces every other mention span
/// with a single mask word.
///
/// Non-focus spans that overlap a focus span are left unmasked; overlapping
/// non-focus spans are merged and masked once, using the kind of the
/// leftmost span. Throws SegmentError when the focus spans overlap.
MarkedText build_marked_text(const Document& doc, const EventMention& event, const ContextMention& mention);

struct TokenizedText {
  std::vector<TokenId> ids;
  MarkerPositions markers{};  // subword indices
};

/// Subword ids with `<s>`/`</s>` framing when the tokenizer defines them.
TokenizedText tokenize(const MarkedText& marked, const SubwordTokenizer& tokenizer);

struct TruncationResult {
  std::vector<TokenId> ids;
  MarkerPositions markers{};
  bool truncated = false;
  bool shifted = false;  // cut moved away from the default midpoint
};

/// Keeps a prefix, one separator id and a suffix so the result has exactly
/// max_len ids. The default prefix length is max_len / 2; when a marked span
/// would straddle a cut, the prefix length is moved (nearest first) until
/// both marked spans sit wholly on one side. Throws SegmentError when no
/// such cut exists.
TruncationResult truncate(const std::vector<TokenId>& ids, const MarkerPositions& markers, std::size_t max_len,
                          TokenId separator_id);

struct EvidenceSegment {
  std::string doc_id;
  std::string event_id;
  std::string mention_id;
  std::vector<TokenId> ids;
  MarkerPositions markers{};
  std::size_t distance = 0;
  bool truncated = false;
};

struct SegmentOptions {
  std::size_t max_len = 512;
};

/// One segment per (event, mention) after marking, tokenizing and
/// truncating.
EvidenceSegment build_segment(const Document& doc, const EventMention& event, const ContextMention& mention,
                              std::size_t distance, const SubwordTokenizer& tokenizer, const SegmentOptions& options);

struct DroppedSegment {
  std::string mention_id;
  std::string reason;
};

struct SegmentBuild {
  std::vector<EvidenceSegment> segments;  // ascending distance
  std::vector<DroppedSegment> dropped;
};

/// Segments for the min(k, n_i) nearest evidence mentions of the pair.
/// Individual failures are reported in `dropped`; throws SegmentError if
/// none survive.
SegmentBuild build_segments(const Document& doc, const CandidatePair& pair, std::size_t k,
                            const SubwordTokenizer& tokenizer, const SegmentOptions& options);

/// Debug dump line: doc, event, mention, distance, truncated flag, text.
void write_segment_debug_line(std::ostream& out, const EvidenceSegment& segment, const SubwordTokenizer& tokenizer);

}  // namespace ctxassoc
