#include "ctxassoc/synthetic.hpp"

#include <algorithm>
#include <random>

#include <fmt/format.h>

namespace ctxassoc {

namespace {

std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

constexpr ContextCategory kCategories[] = {ContextCategory::species, ContextCategory::organ, ContextCategory::tissue,
                                           ContextCategory::cell_type, ContextCategory::cell_line};

// Mention placement: sentence slot spans never overlap inside a sentence.
struct Slot {
  std::size_t sentence;
  std::size_t position;  // index in the sentence's planned item list
};

}  // namespace

Corpus make_synthetic_corpus(const SyntheticOptions& options) {
  std::mt19937_64 rng(options.seed);
  Corpus corpus;

  for (std::size_t d = 0; d < options.documents; ++d) {
    Document doc;
    doc.doc_id = fmt::format("SYN{:04d}", d);

    const auto n_sentences = uniform(rng, options.min_sentences, options.max_sentences);
    const auto n_events = uniform(rng, options.min_events, options.max_events);
    const auto n_types = uniform(rng, options.min_types, options.max_types);
    const auto n_positive = uniform(rng, 1, std::min(options.max_positive_types, n_types));

    // Each sentence is a list of items: filler words or mentions.
    enum class Kind { filler, event, context };
    struct Item {
      Kind kind = Kind::filler;
      std::size_t ref = 0;  // event index or context type index
    };
    std::vector<std::vector<Item>> plan(n_sentences);
    for (auto& s : plan) {
      const auto n = uniform(rng, 5, 12);
      s.assign(n, Item{});
    }
    auto insert_item = [&](Item item) {
      const auto s = uniform(rng, 0, n_sentences - 1);
      const auto pos = uniform(rng, 0, plan[s].size());
      // Keep a filler between mentions so spans stay distinct words.
      plan[s].insert(plan[s].begin() + static_cast<std::ptrdiff_t>(pos), {item, Item{}});
    };
    for (std::size_t e = 0; e < n_events; ++e) insert_item({Kind::event, e});
    for (std::size_t t = 0; t < n_types; ++t) {
      const auto mentions = uniform(rng, 1, options.max_mentions_per_type);
      for (std::size_t m = 0; m < mentions; ++m) insert_item({Kind::context, t});
    }

    // Types [0, n_positive) are the document's true context.
    std::vector<ContextTypeId> types;
    const auto type_offset = uniform(rng, 0, 40);
    for (std::size_t t = 0; t < n_types; ++t) {
      const auto global = type_offset + t;
      types.push_back({fmt::format("synth:T{:03d}", global), kCategories[global % 5]});
    }

    std::size_t mention_counter = 0;
    for (std::size_t s = 0; s < n_sentences; ++s) {
      Sentence sentence;
      sentence.index = s;
      for (const auto& item : plan[s]) {
        const auto start = sentence.tokens.size();
        switch (item.kind) {
          case Kind::filler:
            sentence.tokens.push_back(fmt::format("w{}", uniform(rng, 0, options.filler_vocabulary - 1)));
            break;
          case Kind::event:
            sentence.tokens.push_back(fmt::format("protein{}", uniform(rng, 0, 50)));
            sentence.tokens.push_back("phosphorylates");
            sentence.tokens.push_back(fmt::format("protein{}", uniform(rng, 0, 50)));
            doc.event_mentions.push_back({fmt::format("E{}", item.ref), s, {start, sentence.tokens.size()},
                                          "phosphorylation"});
            break;
          case Kind::context:
            sentence.tokens.push_back(fmt::format("ctx{}", types[item.ref].grounding_id.substr(7)));
            sentence.tokens.push_back(item.ref < n_positive ? kSentinelWord : "cells");
            doc.context_mentions.push_back({fmt::format("C{}", mention_counter++), s,
                                            {start, sentence.tokens.size()}, types[item.ref]});
            break;
        }
      }
      doc.sentences.push_back(std::move(sentence));
    }
    std::sort(doc.event_mentions.begin(), doc.event_mentions.end(),
              [](const EventMention& a, const EventMention& b) { return a.event_id < b.event_id; });

    for (const auto& e : doc.event_mentions)
      for (std::size_t t = 0; t < n_positive; ++t) doc.annotations.push_back({e.event_id, types[t]});

    (d < options.dev_documents ? corpus.dev_doc_ids : corpus.cv_doc_ids).push_back(doc.doc_id);
    corpus.documents.push_back(std::move(doc));
  }
  finalize_corpus(corpus);
  return corpus;
}

}  // namespace ctxassoc
