#include "ctxassoc/metrics.hpp"

#include <fmt/format.h>

#include "ctxassoc/errors.hpp"

namespace ctxassoc {

Metrics Metrics::from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.tn = tn;
  m.precision_undefined = tp + fp == 0;
  m.recall_undefined = tp + fn == 0;
  m.precision = m.precision_undefined ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  m.recall = m.recall_undefined ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

Metrics& Metrics::operator+=(const Metrics& other) {
  *this = from_counts(tp + other.tp, fp + other.fp, fn + other.fn, tn + other.tn);
  return *this;
}

Metrics compute_metrics(std::span<const bool> gold, std::span<const bool> predicted) {
  if (gold.size() != predicted.size())
    throw DimensionError(fmt::format("{} gold labels but {} predictions", gold.size(), predicted.size()));
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i]) (predicted[i] ? tp : fn)++;
    else (predicted[i] ? fp : tn)++;
  }
  return Metrics::from_counts(tp, fp, fn, tn);
}

Metrics evaluate_predictions(std::span<const Prediction> predictions) {
  if (predictions.empty()) throw DimensionError("cannot evaluate an empty prediction list");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (const auto& p : predictions) {
    if (p.gold) (p.final_label ? tp : fn)++;
    else (p.final_label ? fp : tn)++;
  }
  return Metrics::from_counts(tp, fp, fn, tn);
}

std::size_t distance_bucket(std::size_t distance) { return distance < 5 ? distance : 5; }

std::string distance_bucket_label(std::size_t bucket) { return bucket < 5 ? std::to_string(bucket) : "5+"; }

std::array<BucketMetrics, kDistanceBuckets> stratify_by_distance(std::span<const Prediction> predictions) {
  std::array<std::array<std::size_t, 4>, kDistanceBuckets> counts{};
  for (const auto& p : predictions) {
    auto& c = counts[distance_bucket(p.nearest_distance)];
    if (p.gold) ++c[p.final_label ? 0 : 2];
    else ++c[p.final_label ? 1 : 3];
  }
  std::array<BucketMetrics, kDistanceBuckets> out;
  for (std::size_t b = 0; b < kDistanceBuckets; ++b)
    out[b] = {distance_bucket_label(b), Metrics::from_counts(counts[b][0], counts[b][1], counts[b][2], counts[b][3])};
  return out;
}

}  // namespace ctxassoc
