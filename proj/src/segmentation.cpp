#include "ctxassoc/segmentation.hpp"

#include <algorithm>
#include <optional>
#include <ostream>

#include <fmt/format.h>

#include "ctxassoc/errors.hpp"

namespace ctxassoc {

namespace {

struct MaskRegion {
  TokenSpan span;
  bool is_event = false;
};

}  // namespace

MarkedText build_marked_text(const Document& doc, const EventMention& event, const ContextMention& mention) {
  if (event.sentence_index >= doc.sentences.size() || mention.sentence_index >= doc.sentences.size())
    throw SegmentError(fmt::format("document {}: event {} / mention {} reference sentences outside the document",
                                   doc.doc_id, event.event_id, mention.mention_id));
  if (event.sentence_index == mention.sentence_index && event.span.overlaps(mention.span))
    throw SegmentError(fmt::format("document {}: event {} and context mention {} have overlapping spans", doc.doc_id,
                                   event.event_id, mention.mention_id));

  MarkedText out;
  out.first_sentence = std::min(event.sentence_index, mention.sentence_index);
  out.last_sentence = std::max(event.sentence_index, mention.sentence_index);

  for (std::size_t s = out.first_sentence; s <= out.last_sentence; ++s) {
    const auto& tokens = doc.sentences[s].tokens;
    const bool has_event = event.sentence_index == s;
    const bool has_mention = mention.sentence_index == s;

    auto hits_focus = [&](const TokenSpan& span) {
      return (has_event && span.overlaps(event.span)) || (has_mention && span.overlaps(mention.span));
    };
    std::vector<MaskRegion> masks;
    for (const auto& e : doc.event_mentions)
      if (e.sentence_index == s && e.event_id != event.event_id && !hits_focus(e.span)) masks.push_back({e.span, true});
    for (const auto& m : doc.context_mentions)
      if (m.sentence_index == s && m.mention_id != mention.mention_id && !hits_focus(m.span))
        masks.push_back({m.span, false});
    std::sort(masks.begin(), masks.end(), [](const MaskRegion& a, const MaskRegion& b) {
      if (a.span.start != b.span.start) return a.span.start < b.span.start;
      return a.span.end > b.span.end;
    });
    std::vector<MaskRegion> merged;
    for (const auto& m : masks) {
      if (!merged.empty() && m.span.start < merged.back().span.end)
        merged.back().span.end = std::max(merged.back().span.end, m.span.end);
      else
        merged.push_back(m);
    }

    auto next_mask = merged.begin();
    for (std::size_t i = 0; i < tokens.size();) {
      if (has_event && i == event.span.start) {
        out.markers[marker::kEventOpen] = out.tokens.size();
        out.tokens.emplace_back(special::kEventOpen);
        out.tokens.insert(out.tokens.end(), tokens.begin() + static_cast<std::ptrdiff_t>(event.span.start),
                          tokens.begin() + static_cast<std::ptrdiff_t>(event.span.end));
        out.markers[marker::kEventClose] = out.tokens.size();
        out.tokens.emplace_back(special::kEventClose);
        i = event.span.end;
        continue;
      }
      if (has_mention && i == mention.span.start) {
        out.markers[marker::kContextOpen] = out.tokens.size();
        out.tokens.emplace_back(special::kContextOpen);
        out.tokens.insert(out.tokens.end(), tokens.begin() + static_cast<std::ptrdiff_t>(mention.span.start),
                          tokens.begin() + static_cast<std::ptrdiff_t>(mention.span.end));
        out.markers[marker::kContextClose] = out.tokens.size();
        out.tokens.emplace_back(special::kContextClose);
        i = mention.span.end;
        continue;
      }
      while (next_mask != merged.end() && next_mask->span.end <= i) ++next_mask;
      if (next_mask != merged.end() && i == next_mask->span.start) {
        out.tokens.emplace_back(next_mask->is_event ? special::kEventMask : special::kContextMask);
        i = next_mask->span.end;
        ++next_mask;
        continue;
      }
      out.tokens.push_back(tokens[i]);
      ++i;
    }
  }
  return out;
}

TokenizedText tokenize(const MarkedText& marked, const SubwordTokenizer& tokenizer) {
  const MarkerPositions marker_ids = {
      static_cast<std::size_t>(tokenizer.require_special(special::kEventOpen)),
      static_cast<std::size_t>(tokenizer.require_special(special::kEventClose)),
      static_cast<std::size_t>(tokenizer.require_special(special::kContextOpen)),
      static_cast<std::size_t>(tokenizer.require_special(special::kContextClose))};
  for (auto t : special::kSegmentTokens) (void)tokenizer.require_special(t);

  TokenizedText out;
  if (auto bos = tokenizer.bos_id()) out.ids.push_back(*bos);
  for (std::size_t w = 0; w < marked.tokens.size(); ++w) {
    for (std::size_t m = 0; m < 4; ++m) {
      if (marked.markers[m] == w) {
        out.markers[m] = out.ids.size();
        out.ids.push_back(static_cast<TokenId>(marker_ids[m]));
      }
    }
    if (std::find(marked.markers.begin(), marked.markers.end(), w) != marked.markers.end()) continue;
    const auto sub = tokenizer.encode_word(marked.tokens[w]);
    out.ids.insert(out.ids.end(), sub.begin(), sub.end());
  }
  if (auto eos = tokenizer.eos_id()) out.ids.push_back(*eos);
  return out;
}

TruncationResult truncate(const std::vector<TokenId>& ids, const MarkerPositions& markers, std::size_t max_len,
                          TokenId separator_id) {
  for (auto p : markers)
    if (p >= ids.size()) throw SegmentError(fmt::format("marker position {} outside sequence of {}", p, ids.size()));
  if (ids.size() <= max_len) return {ids, markers, false, false};
  if (max_len < 3) throw SegmentError(fmt::format("max_len {} too small to truncate", max_len));

  const std::size_t len = ids.size();
  const std::size_t budget = max_len - 1;  // prefix + suffix
  const std::size_t default_head = max_len / 2;
  const TokenSpan spans[] = {{markers[marker::kEventOpen], markers[marker::kEventClose] + 1},
                             {markers[marker::kContextOpen], markers[marker::kContextClose] + 1}};

  auto feasible = [&](std::size_t head) {
    const std::size_t suffix_start = len - (budget - head);
    for (const auto& s : spans)
      if (!(s.end <= head || s.start >= suffix_start)) return false;
    return true;
  };

  std::optional<std::size_t> head;
  for (std::size_t delta = 0; delta <= budget && !head; ++delta) {
    if (default_head + delta <= budget && feasible(default_head + delta)) head = default_head + delta;
    else if (delta <= default_head && feasible(default_head - delta)) head = default_head - delta;
  }
  if (!head)
    throw SegmentError(fmt::format("cannot truncate {} ids to {} without splitting a marked span", len, max_len));

  TruncationResult out;
  out.truncated = true;
  out.shifted = *head != default_head;
  const std::size_t suffix_start = len - (budget - *head);
  out.ids.reserve(max_len);
  out.ids.insert(out.ids.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(*head));
  out.ids.push_back(separator_id);
  out.ids.insert(out.ids.end(), ids.begin() + static_cast<std::ptrdiff_t>(suffix_start), ids.end());
  for (std::size_t m = 0; m < 4; ++m)
    out.markers[m] = markers[m] < *head ? markers[m] : markers[m] - suffix_start + *head + 1;
  return out;
}

EvidenceSegment build_segment(const Document& doc, const EventMention& event, const ContextMention& mention,
                              std::size_t distance, const SubwordTokenizer& tokenizer, const SegmentOptions& options) {
  const auto marked = build_marked_text(doc, event, mention);
  const auto tokenized = tokenize(marked, tokenizer);
  auto truncated = truncate(tokenized.ids, tokenized.markers, options.max_len, tokenizer.separator_id());
  EvidenceSegment seg;
  seg.doc_id = doc.doc_id;
  seg.event_id = event.event_id;
  seg.mention_id = mention.mention_id;
  seg.ids = std::move(truncated.ids);
  seg.markers = truncated.markers;
  seg.distance = distance;
  seg.truncated = truncated.truncated;
  return seg;
}

SegmentBuild build_segments(const Document& doc, const CandidatePair& pair, std::size_t k,
                            const SubwordTokenizer& tokenizer, const SegmentOptions& options) {
  if (k == 0) throw ConfigError("k must be at least 1");
  SegmentBuild out;
  const auto n = std::min(k, pair.evidence.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ev = pair.evidence[i];
    try {
      out.segments.push_back(build_segment(doc, pair.event, ev.mention, ev.distance, tokenizer, options));
    } catch (const SegmentError& e) {
      out.dropped.push_back({ev.mention.mention_id, e.what()});
    }
  }
  if (out.segments.empty())
    throw SegmentError(fmt::format("document {}: pair ({}, {}) has no usable evidence segment", pair.doc_id,
                                   pair.event.event_id, pair.context_type.grounding_id));
  return out;
}

void write_segment_debug_line(std::ostream& out, const EvidenceSegment& segment, const SubwordTokenizer& tokenizer) {
  out << segment.doc_id << '\t' << segment.event_id << '\t' << segment.mention_id << '\t' << segment.distance << '\t'
      << (segment.truncated ? 1 : 0) << '\t' << tokenizer.decode(segment.ids) << '\n';
}

}  // namespace ctxassoc
