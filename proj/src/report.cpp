#include "ctxassoc/report.hpp"

#include <fmt/format.h>

namespace ctxassoc {

using nlohmann::json;

json to_json(const Metrics& m) {
  return {{"tp", m.tp},
          {"fp", m.fp},
          {"fn", m.fn},
          {"tn", m.tn},
          {"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1},
          {"precision_undefined", m.precision_undefined},
          {"recall_undefined", m.recall_undefined}};
}

json to_json(const DistanceStats& s) {
  json hist = json::object();
  for (const auto& [d, n] : s.histogram) hist[std::to_string(d)] = n;
  return {{"count", s.count},
          {"mean", s.mean ? json(*s.mean) : json(nullptr)},
          {"median", s.median ? json(*s.median) : json(nullptr)},
          {"max", s.max ? json(*s.max) : json(nullptr)},
          {"histogram", hist}};
}

json to_json(const DetectionSummary& s, bool include_entries) {
  json dist = json::object();
  for (const auto& [n, c] : s.distribution) dist[std::to_string(n)] = c;
  json j = {{"distribution", dist}, {"fraction_two_or_more", s.fraction_two_or_more}, {"types", s.entries.size()}};
  if (include_entries) {
    json entries = json::array();
    for (const auto& e : s.entries)
      entries.push_back({{"doc_id", e.doc_id}, {"grounding_id", e.context_type.grounding_id}, {"count", e.count}});
    j["entries"] = entries;
  }
  return j;
}

json to_json(const CorpusTotals& t) {
  return {{"documents", t.documents},
          {"event_mentions", t.event_mentions},
          {"context_mentions", t.context_mentions},
          {"annotations", t.annotations}};
}

json to_json(const TrainConfig& c) {
  return {{"head", {{"mode", std::string(to_string(c.head.mode))},
                    {"function", std::string(to_string(c.head.function))},
                    {"k", c.head.k}}},
          {"head_learning_rate", c.head_learning_rate},
          {"encoder_learning_rate", c.encoder_learning_rate},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"positive_weight", c.positive_weight ? json(*c.positive_weight) : json(nullptr)},
          {"seed", c.seed},
          {"freeze_encoder", c.freeze_encoder},
          {"patience", c.patience},
          {"hidden_dim", c.hidden_dim},
          {"dropout", c.dropout}};
}

json to_json(const Prediction& p) {
  json decisions = json::array();
  for (const auto& d : p.segment_decisions)
    decisions.push_back({{"label", d.label}, {"probability", d.probability}, {"distance", d.distance}});
  return {{"doc_id", p.doc_id},
          {"event_id", p.event_id},
          {"grounding_id", p.grounding_id},
          {"gold", p.gold},
          {"predicted", p.final_label},
          {"function", std::string(to_string(p.function))},
          {"nearest_distance", p.nearest_distance},
          {"segment_decisions", decisions},
          {"weights", p.weights},
          {"probability", p.probability ? json(*p.probability) : json(nullptr)}};
}

json to_json(const CvReport& r) {
  json folds = json::array();
  for (const auto& f : r.folds) {
    json history = json::array();
    for (const auto& e : f.history)
      history.push_back({{"epoch", e.epoch},
                         {"train_loss", e.train_loss},
                         {"dev_f1", e.dev_f1 ? json(*e.dev_f1) : json(nullptr)}});
    folds.push_back({{"index", f.index},
                     {"test_doc_ids", f.test_doc_ids},
                     {"train_pairs", f.train_pairs},
                     {"test_pairs", f.test_pairs},
                     {"metrics", to_json(f.metrics)},
                     {"heuristic_metrics", to_json(f.heuristic_metrics)},
                     {"best_epoch", f.best_epoch},
                     {"history", history}});
  }
  json buckets = json::array();
  for (const auto& b : r.by_distance) buckets.push_back({{"distance", b.label}, {"metrics", to_json(b.metrics)}});
  json predictions = json::array();
  for (const auto& p : r.predictions) predictions.push_back(to_json(p));
  return {{"train_config", to_json(r.train_config)},
          {"fold_size", r.fold_size},
          {"split_seed", r.split_seed},
          {"dev_doc_ids", r.dev_doc_ids},
          {"folds", folds},
          {"pooled", to_json(r.pooled)},
          {"by_distance", buckets},
          {"heuristic", {{"window", r.heuristic_window}, {"pooled", to_json(r.heuristic_pooled)}}},
          {"p_value_vs_heuristic", r.p_value_vs_heuristic},
          {"significant_vs_heuristic", r.significant_vs_heuristic},
          {"unusable_pairs", r.unusable_pairs},
          {"dropped_segments", r.dropped_segments},
          {"predictions", predictions}};
}

json to_json(std::span<const SweepRecord> sweep) {
  json out = json::array();
  for (const auto& s : sweep) out.push_back({{"k", s.k}, {"metrics", to_json(s.metrics)}});
  return out;
}

std::string render_method_table(std::span<const TableRow> rows) {
  std::string out = "| Method | Precision | Recall | F1 |\n|---|---|---|---|\n";
  for (const auto& r : rows)
    out += fmt::format("| {}{} | {:.3f} | {:.3f} | {:.3f} |\n", r.method, r.significant ? "*" : "",
                       r.metrics.precision, r.metrics.recall, r.metrics.f1);
  return out;
}

std::string render_distance_table(const std::array<BucketMetrics, kDistanceBuckets>& buckets) {
  std::string out = "| Distance | Support | Precision | Recall | F1 |\n|---|---|---|---|---|\n";
  for (const auto& b : buckets)
    out += fmt::format("| {} | {} | {:.3f} | {:.3f} | {:.3f} |\n", b.label, b.metrics.support(),
                       b.metrics.precision, b.metrics.recall, b.metrics.f1);
  return out;
}

std::string render_sweep_table(std::span<const SweepRecord> sweep) {
  std::string out = "| k | Precision | Recall | F1 |\n|---|---|---|---|\n";
  for (const auto& s : sweep)
    out += fmt::format("| {} | {:.3f} | {:.3f} | {:.3f} |\n", s.k, s.metrics.precision, s.metrics.recall,
                       s.metrics.f1);
  return out;
}

}  // namespace ctxassoc
