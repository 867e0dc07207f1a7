#include "ctxassoc/evidence.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "ctxassoc/errors.hpp"

namespace ctxassoc {

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  workers.clear();
  if (failure) std::rethrow_exception(failure);
}

std::vector<PairEvidence> embed_pairs(const EvidencePipeline& pipeline, const std::vector<CandidatePair>& pairs,
                                      std::size_t k) {
  if (!pipeline.corpus || !pipeline.tokenizer || !pipeline.encoder)
    throw ConfigError("evidence pipeline is missing its corpus, tokenizer or encoder");
  if (k == 0) throw ConfigError("k must be at least 1");

  std::vector<PairEvidence> out(pairs.size());
  std::vector<std::string> dumps(pipeline.segment_dump ? pairs.size() : 0);
  parallel_for(pairs.size(), pipeline.threads, [&](std::size_t i) {
    const auto& pair = pairs[i];
    auto& ev = out[i];
    ev.doc_id = pair.doc_id;
    ev.event_id = pair.event.event_id;
    ev.grounding_id = pair.context_type.grounding_id;
    ev.label = pair.label;
    ev.nearest_distance = pair.nearest_distance();

    const auto& doc = pipeline.corpus->at(pair.doc_id);
    SegmentBuild build;
    try {
      build = build_segments(doc, pair, k, *pipeline.tokenizer, pipeline.segment_options);
    } catch (const SegmentError& e) {
      for (std::size_t j = 0; j < std::min(k, pair.evidence.size()); ++j)
        ev.dropped.push_back({pair.evidence[j].mention.mention_id, e.what()});
      return;
    }
    ev.dropped = std::move(build.dropped);
    std::ostringstream dump;
    for (const auto& seg : build.segments) {
      const auto hidden = pipeline.encoder->encode(seg);
      ev.embeddings.push_back(classification_embedding(hidden, seg, pipeline.pooling));
      if (pipeline.segment_dump) write_segment_debug_line(dump, seg, *pipeline.tokenizer);
    }
    if (pipeline.segment_dump) dumps[i] = dump.str();
  });
  if (pipeline.segment_dump)
    for (const auto& d : dumps) *pipeline.segment_dump << d;
  return out;
}

}  // namespace ctxassoc
