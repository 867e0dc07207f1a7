#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ctxassoc/heads.hpp"

namespace ctxassoc {

/// Positive-class precision / recall / F1. A metric whose denominator is
/// zero is reported as 0 and flagged.
struct Metrics {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;

  [[nodiscard]] std::size_t support() const { return tp + fn; }
  [[nodiscard]] std::size_t total() const { return tp + fp + fn + tn; }

  static Metrics from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);
  Metrics& operator+=(const Metrics& other);  // adds counts, recomputes scores
};

Metrics compute_metrics(std::span<const bool> gold, std::span<const bool> predicted);
/// Throws DimensionError on an empty list.
Metrics evaluate_predictions(std::span<const Prediction> predictions);

/// Buckets by nearest-evidence distance: 0, 1, 2, 3, 4, 5+.
inline constexpr std::size_t kDistanceBuckets = 6;
std::string distance_bucket_label(std::size_t bucket);
std::size_t distance_bucket(std::size_t distance);

struct BucketMetrics {
  std::string label;
  Metrics metrics;
};

std::array<BucketMetrics, kDistanceBuckets> stratify_by_distance(std::span<const Prediction> predictions);

}  // namespace ctxassoc
