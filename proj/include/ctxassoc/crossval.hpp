#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ctxassoc/corpus.hpp"
#include "ctxassoc/evidence.hpp"
#include "ctxassoc/metrics.hpp"
#include "ctxassoc/training.hpp"

namespace ctxassoc {

/// Positive iff the nearest evidence mention lies within `window` sentences.
bool heuristic_baseline(const CandidatePair& pair, std::size_t window);
bool heuristic_baseline(std::size_t nearest_distance, std::size_t window);

struct HeuristicChoice {
  std::size_t window = 0;
  Metrics dev_metrics;
};

/// Window in `windows` maximizing F1 on `pairs`; ties pick the smaller window.
HeuristicChoice choose_heuristic_window(std::span<const PairEvidence> pairs, std::span<const std::size_t> windows);

std::vector<Prediction> heuristic_predictions(std::span<const PairEvidence> pairs, std::size_t window);

inline constexpr std::size_t kBootstrapResamples = 10000;

/// Paired bootstrap over folds: resamples fold indices with replacement and
/// returns the fraction of resamples whose mean(a - b) <= 0, i.e. a
/// one-sided p-value for "a beats b".
double significance_test(std::span<const double> scores_a, std::span<const double> scores_b, std::uint64_t seed,
                         std::size_t resamples = kBootstrapResamples);

struct CvOptions {
  std::set<std::string> dev_doc_ids;
  std::size_t fold_size = 3;
  std::uint64_t split_seed = 1;
  std::size_t fold_threads = 1;
  std::vector<std::size_t> heuristic_windows = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::size_t bootstrap_resamples = kBootstrapResamples;
  double significance_level = 0.05;
  bool keep_predictions = true;
};

struct FoldResult {
  std::size_t index = 0;
  std::vector<std::string> test_doc_ids;
  std::size_t train_pairs = 0;
  std::size_t test_pairs = 0;
  Metrics metrics;
  Metrics heuristic_metrics;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> history;
};

struct CvReport {
  TrainConfig train_config;
  std::size_t fold_size = 3;
  std::uint64_t split_seed = 1;
  std::vector<std::string> dev_doc_ids;
  std::vector<FoldResult> folds;
  Metrics pooled;
  std::array<BucketMetrics, kDistanceBuckets> by_distance;
  std::size_t heuristic_window = 0;
  Metrics heuristic_pooled;
  double p_value_vs_heuristic = 1.0;
  bool significant_vs_heuristic = false;
  std::size_t unusable_pairs = 0;
  std::size_t dropped_segments = 0;
  std::vector<Prediction> predictions;
  std::vector<HeadModel> fold_models;
};

/// Trains on every other fold plus the dev documents (which also drive
/// early stopping) and tests on each fold in turn. Pooled metrics cover the
/// concatenated fold predictions.
CvReport cross_validate(const EvidencePipeline& pipeline, const TrainConfig& config, const CvOptions& options);

struct SweepRecord {
  std::size_t k = 0;
  Metrics metrics;
};

/// Retrains for every k with grouped folds over the dev documents only.
std::vector<SweepRecord> sweep_k(const EvidencePipeline& pipeline, const TrainConfig& config,
                                 const std::vector<std::string>& dev_doc_ids, std::span<const std::size_t> k_range,
                                 std::size_t fold_size, std::uint64_t split_seed, std::size_t fold_threads = 1);

}  // namespace ctxassoc
