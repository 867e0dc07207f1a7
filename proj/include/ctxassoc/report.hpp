#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctxassoc/corpus.hpp"
#include "ctxassoc/crossval.hpp"
#include "ctxassoc/metrics.hpp"

namespace ctxassoc {

nlohmann::json to_json(const Metrics& m);
nlohmann::json to_json(const DistanceStats& stats);
nlohmann::json to_json(const DetectionSummary& summary, bool include_entries = false);
nlohmann::json to_json(const CorpusTotals& totals);
nlohmann::json to_json(const TrainConfig& config);
nlohmann::json to_json(const Prediction& p);
nlohmann::json to_json(const CvReport& report);
nlohmann::json to_json(std::span<const SweepRecord> sweep);

/// One row of the comparison table.
struct TableRow {
  std::string method;
  Metrics metrics;
  bool significant = false;  // rendered with a trailing '*'
};

/// Markdown table: Method | Precision | Recall | F1.
std::string render_method_table(std::span<const TableRow> rows);
/// Markdown table of precision/recall/F1 per nearest-distance bucket.
std::string render_distance_table(const std::array<BucketMetrics, kDistanceBuckets>& buckets);
std::string render_sweep_table(std::span<const SweepRecord> sweep);

}  // namespace ctxassoc
