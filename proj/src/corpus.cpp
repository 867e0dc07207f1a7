#include "ctxassoc/corpus.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "ctxassoc/errors.hpp"

namespace ctxassoc {

std::string_view to_string(ContextCategory category) {
  switch (category) {
    case ContextCategory::species: return "species";
    case ContextCategory::organ: return "organ";
    case ContextCategory::tissue: return "tissue";
    case ContextCategory::cell_type: return "cell_type";
    case ContextCategory::cell_line: return "cell_line";
  }
  return "species";
}

ContextCategory parse_context_category(std::string_view text) {
  for (auto c : {ContextCategory::species, ContextCategory::organ, ContextCategory::tissue,
                 ContextCategory::cell_type, ContextCategory::cell_line}) {
    if (to_string(c) == text) return c;
  }
  throw ParseError(fmt::format("unknown context category '{}'", text));
}

std::optional<ContextCategory> infer_context_category(std::string_view grounding_id) {
  const auto colon = grounding_id.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  std::string ns(grounding_id.substr(0, colon));
  std::transform(ns.begin(), ns.end(), ns.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (ns == "taxonomy" || ns == "ncbitaxon" || ns == "species") return ContextCategory::species;
  if (ns == "uberon" || ns == "organ") return ContextCategory::organ;
  if (ns == "tissuelist" || ns == "tissue" || ns == "bto") return ContextCategory::tissue;
  if (ns == "cl" || ns == "celltype" || ns == "cell_type") return ContextCategory::cell_type;
  if (ns == "cellosaurus" || ns == "cvcl" || ns == "atcc" || ns == "cellline" ||
      ns == "cell_line" || ns == "efo")
    return ContextCategory::cell_line;
  return std::nullopt;
}

const EventMention* Document::find_event(std::string_view event_id) const {
  for (const auto& e : event_mentions)
    if (e.event_id == event_id) return &e;
  return nullptr;
}

const ContextMention* Document::find_mention(std::string_view mention_id) const {
  for (const auto& m : context_mentions)
    if (m.mention_id == mention_id) return &m;
  return nullptr;
}

std::vector<ContextTypeId> Document::context_types() const {
  std::vector<ContextTypeId> types;
  for (const auto& m : context_mentions) types.push_back(m.context_type);
  std::sort(types.begin(), types.end());
  types.erase(std::unique(types.begin(), types.end()), types.end());
  return types;
}

namespace {

void check_span(const Document& doc, std::string_view kind, const std::string& id,
                std::size_t sentence_index, const TokenSpan& span) {
  if (sentence_index >= doc.sentences.size())
    throw ValidationError(fmt::format("document {}: {} {} references sentence {} but the document has {}",
                                      doc.doc_id, kind, id, sentence_index, doc.sentences.size()));
  const auto n = doc.sentences[sentence_index].tokens.size();
  if (span.start >= span.end || span.end > n)
    throw ValidationError(fmt::format("document {}: {} {} has span [{}, {}) outside sentence {} of {} tokens",
                                      doc.doc_id, kind, id, span.start, span.end, sentence_index, n));
}

}  // namespace

void validate_document(const Document& doc) {
  if (doc.doc_id.empty()) throw ValidationError("document with empty doc_id");
  for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
    if (doc.sentences[i].index != i)
      throw ValidationError(fmt::format("document {}: sentence indices are not contiguous at {}", doc.doc_id, i));
    if (doc.sentences[i].tokens.empty())
      throw ValidationError(fmt::format("document {}: sentence {} has no tokens", doc.doc_id, i));
  }

  std::unordered_set<std::string> event_ids;
  for (const auto& e : doc.event_mentions) {
    if (!event_ids.insert(e.event_id).second)
      throw ValidationError(fmt::format("document {}: duplicate event id {}", doc.doc_id, e.event_id));
    check_span(doc, "event", e.event_id, e.sentence_index, e.span);
  }

  std::unordered_set<std::string> mention_ids;
  std::unordered_set<std::string> groundings;
  for (const auto& m : doc.context_mentions) {
    if (!mention_ids.insert(m.mention_id).second)
      throw ValidationError(fmt::format("document {}: duplicate context mention id {}", doc.doc_id, m.mention_id));
    if (m.context_type.grounding_id.empty())
      throw ValidationError(fmt::format("document {}: context mention {} has an empty grounding id", doc.doc_id,
                                        m.mention_id));
    check_span(doc, "context mention", m.mention_id, m.sentence_index, m.span);
    groundings.insert(m.context_type.grounding_id);
  }

  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& a : doc.annotations) {
    if (!event_ids.contains(a.event_id))
      throw ValidationError(fmt::format("document {}: annotation references unknown event {}", doc.doc_id,
                                        a.event_id));
    if (!groundings.contains(a.context_type.grounding_id))
      throw ValidationError(fmt::format("document {}: annotation of event {} references context type {} with no "
                                        "mention in the document",
                                        doc.doc_id, a.event_id, a.context_type.grounding_id));
    if (!seen.emplace(a.event_id, a.context_type.grounding_id).second)
      throw ValidationError(fmt::format("document {}: duplicate annotation ({}, {})", doc.doc_id, a.event_id,
                                        a.context_type.grounding_id));
  }
}

const Document* Corpus::find(std::string_view doc_id) const {
  auto it = std::lower_bound(documents.begin(), documents.end(), doc_id,
                             [](const Document& d, std::string_view id) { return d.doc_id < id; });
  if (it == documents.end() || it->doc_id != doc_id) return nullptr;
  return &*it;
}

const Document& Corpus::at(std::string_view doc_id) const {
  if (const auto* doc = find(doc_id)) return *doc;
  throw ValidationError(fmt::format("document {} not in corpus", doc_id));
}

std::vector<std::string> Corpus::doc_ids() const {
  std::vector<std::string> ids;
  ids.reserve(documents.size());
  for (const auto& d : documents) ids.push_back(d.doc_id);
  return ids;
}

void finalize_corpus(Corpus& corpus) {
  std::sort(corpus.documents.begin(), corpus.documents.end(),
            [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
  for (std::size_t i = 1; i < corpus.documents.size(); ++i)
    if (corpus.documents[i].doc_id == corpus.documents[i - 1].doc_id)
      throw ValidationError(fmt::format("duplicate document id {}", corpus.documents[i].doc_id));

  std::unordered_map<std::string, ContextCategory> categories;
  for (const auto& doc : corpus.documents) {
    validate_document(doc);
    for (const auto& m : doc.context_mentions) {
      auto [it, inserted] = categories.emplace(m.context_type.grounding_id, m.context_type.category);
      if (!inserted && it->second != m.context_type.category)
        throw ValidationError(fmt::format("document {}: context mention {} assigns grounding {} to category {} but "
                                          "it was already seen as {}",
                                          doc.doc_id, m.mention_id, m.context_type.grounding_id,
                                          to_string(m.context_type.category), to_string(it->second)));
    }
  }
  for (const auto* list : {&corpus.dev_doc_ids, &corpus.cv_doc_ids})
    for (const auto& id : *list)
      if (!corpus.find(id)) throw ValidationError(fmt::format("manifest lists unknown document {}", id));
}

std::size_t sentence_distance(const EventMention& event, const ContextMention& mention) {
  return event.sentence_index > mention.sentence_index ? event.sentence_index - mention.sentence_index
                                                        : mention.sentence_index - event.sentence_index;
}

std::vector<CandidatePair> generate_candidates(const Document& doc) {
  std::set<std::pair<std::string, std::string>> annotated;
  for (const auto& a : doc.annotations) annotated.emplace(a.event_id, a.context_type.grounding_id);

  const auto types = doc.context_types();
  std::vector<CandidatePair> pairs;
  pairs.reserve(doc.event_mentions.size() * types.size());
  for (const auto& event : doc.event_mentions) {
    for (const auto& type : types) {
      CandidatePair pair;
      pair.doc_id = doc.doc_id;
      pair.event = event;
      pair.context_type = type;
      pair.label = annotated.contains({event.event_id, type.grounding_id});
      for (const auto& m : doc.context_mentions)
        if (m.context_type == type) pair.evidence.push_back({m, sentence_distance(event, m)});
      std::sort(pair.evidence.begin(), pair.evidence.end(), [](const Evidence& a, const Evidence& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        if (a.mention.sentence_index != b.mention.sentence_index)
          return a.mention.sentence_index < b.mention.sentence_index;
        if (a.mention.span.start != b.mention.span.start) return a.mention.span.start < b.mention.span.start;
        return a.mention.mention_id < b.mention.mention_id;
      });
      pairs.push_back(std::move(pair));
    }
  }
  return pairs;
}

std::vector<CandidatePair> generate_candidates(const Corpus& corpus) {
  std::vector<CandidatePair> all;
  for (const auto& doc : corpus.documents) {
    auto pairs = generate_candidates(doc);
    all.insert(all.end(), std::make_move_iterator(pairs.begin()), std::make_move_iterator(pairs.end()));
  }
  return all;
}

DistanceStats corpus_distance_stats(const Corpus& corpus) {
  std::vector<std::size_t> distances;
  for (const auto& doc : corpus.documents)
    for (const auto& pair : generate_candidates(doc))
      if (pair.label && pair.nearest_distance() > 0) distances.push_back(pair.nearest_distance());

  DistanceStats stats;
  stats.count = distances.size();
  if (distances.empty()) return stats;
  std::sort(distances.begin(), distances.end());
  for (auto d : distances) ++stats.histogram[d];
  const double sum = std::accumulate(distances.begin(), distances.end(), 0.0);
  stats.mean = sum / static_cast<double>(distances.size());
  const auto n = distances.size();
  stats.median = n % 2 == 1 ? static_cast<double>(distances[n / 2])
                            : 0.5 * static_cast<double>(distances[n / 2 - 1] + distances[n / 2]);
  stats.max = distances.back();
  return stats;
}

DetectionSummary detections_per_type(const Corpus& corpus) {
  DetectionSummary summary;
  for (const auto& doc : corpus.documents) {
    std::map<ContextTypeId, std::size_t> counts;
    for (const auto& m : doc.context_mentions) ++counts[m.context_type];
    for (const auto& [type, n] : counts) summary.entries.push_back({doc.doc_id, type, n});
  }
  std::size_t two_or_more = 0;
  for (const auto& e : summary.entries) {
    ++summary.distribution[e.count];
    if (e.count >= 2) ++two_or_more;
  }
  if (!summary.entries.empty())
    summary.fraction_two_or_more = static_cast<double>(two_or_more) / static_cast<double>(summary.entries.size());
  return summary;
}

std::vector<Fold> partition_documents(const Corpus& corpus, std::vector<std::string> doc_ids,
                                      std::size_t fold_size, std::uint64_t seed) {
  if (fold_size == 0) throw ConfigError("fold_size must be at least 1");
  std::sort(doc_ids.begin(), doc_ids.end());
  std::mt19937_64 rng(seed);
  std::shuffle(doc_ids.begin(), doc_ids.end(), rng);

  std::vector<Fold> folds;
  for (std::size_t i = 0; i < doc_ids.size(); i += fold_size) {
    Fold fold;
    for (std::size_t j = i; j < std::min(i + fold_size, doc_ids.size()); ++j) {
      fold.doc_ids.push_back(doc_ids[j]);
      auto pairs = generate_candidates(corpus.at(doc_ids[j]));
      fold.pairs.insert(fold.pairs.end(), std::make_move_iterator(pairs.begin()),
                        std::make_move_iterator(pairs.end()));
    }
    folds.push_back(std::move(fold));
  }
  return folds;
}

FoldSplit split_folds(const Corpus& corpus, const std::set<std::string>& dev_doc_ids, std::size_t fold_size,
                      std::uint64_t seed) {
  if (fold_size == 0) throw ConfigError("fold_size must be at least 1");
  for (const auto& id : dev_doc_ids)
    if (!corpus.find(id)) throw ValidationError(fmt::format("dev document {} not found in corpus", id));

  FoldSplit split;
  std::vector<std::string> pool;
  for (const auto& doc : corpus.documents) {
    if (dev_doc_ids.contains(doc.doc_id)) {
      split.dev.doc_ids.push_back(doc.doc_id);
      auto pairs = generate_candidates(doc);
      split.dev.pairs.insert(split.dev.pairs.end(), std::make_move_iterator(pairs.begin()),
                             std::make_move_iterator(pairs.end()));
    } else {
      pool.push_back(doc.doc_id);
    }
  }
  split.folds = partition_documents(corpus, std::move(pool), fold_size, seed);
  return split;
}

CorpusTotals corpus_totals(const Corpus& corpus) { return corpus_totals(corpus, corpus.doc_ids()); }

CorpusTotals corpus_totals(const Corpus& corpus, const std::vector<std::string>& doc_ids) {
  CorpusTotals t;
  for (const auto& id : doc_ids) {
    const auto& doc = corpus.at(id);
    ++t.documents;
    t.event_mentions += doc.event_mentions.size();
    t.context_mentions += doc.context_mentions.size();
    t.annotations += doc.annotations.size();
  }
  return t;
}

}  // namespace ctxassoc
