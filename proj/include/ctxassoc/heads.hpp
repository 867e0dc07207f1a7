#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ctxassoc/encoder.hpp"
#include "ctxassoc/mlp.hpp"

namespace ctxassoc {

enum class HeadMode { aggregation, voting };

enum class HeadFunction {
  nearest,
  average,
  inverse_distance,
  parameterized,
  one_hit,
  majority,
  post_inverse_distance,
  confidence,
};

std::string_view to_string(HeadMode mode);
std::string_view to_string(HeadFunction function);
HeadMode parse_head_mode(std::string_view text);
HeadFunction parse_head_function(std::string_view text);
HeadMode mode_of(HeadFunction function);

struct HeadConfig {
  HeadMode mode = HeadMode::voting;
  HeadFunction function = HeadFunction::majority;
  std::size_t k = 3;

  /// Throws ConfigError on k == 0 or a function that does not belong to mode.
  void validate() const;
  static HeadConfig for_function(HeadFunction function, std::size_t k);
};

/// Probability threshold; p >= 0.5 is positive.
inline constexpr double kDecisionThreshold = 0.5;

struct SegmentDecision {
  bool label = false;
  double probability = 0.5;  // positive-class probability
  double logit = 0.0;
  std::size_t distance = 0;
};

/// Normalized inverse distances on shifted distances d + 1.
std::vector<double> inverse_distance_weights(std::span<const std::size_t> distances);

struct Aggregate {
  Eigen::VectorXd vector;
  std::vector<double> weights;  // empty for the parameterized map
};

Aggregate aggregate_nearest(std::span<const ClassificationEmbedding> embeddings);
Aggregate aggregate_average(std::span<const ClassificationEmbedding> embeddings);
Aggregate aggregate_inverse_distance(std::span<const ClassificationEmbedding> embeddings,
                                     std::span<const std::size_t> distances);
/// Distances are taken from the embeddings' provenance.
Aggregate aggregate_inverse_distance(std::span<const ClassificationEmbedding> embeddings);
Aggregate aggregate_parameterized(std::span<const ClassificationEmbedding> embeddings,
                                  const ParameterizedAggregator& params);

SegmentDecision classify(const Eigen::VectorXd& embedding, const MlpClassifier& mlp, std::size_t distance = 0);

bool vote_one_hit(std::span<const SegmentDecision> decisions);
/// Ties (exactly half positive) resolve positive.
bool vote_majority(std::span<const SegmentDecision> decisions);
/// Ties resolve negative.
bool vote_post_inverse_distance(std::span<const SegmentDecision> decisions, std::span<const std::size_t> distances);
bool vote_post_inverse_distance(std::span<const SegmentDecision> decisions);
/// Each decision votes for its label with weight p(label) / sum_j p(label_j).
/// Ties resolve negative.
bool vote_confidence(std::span<const SegmentDecision> decisions);
std::vector<double> confidence_weights(std::span<const SegmentDecision> decisions);

/// Trained head: shared MLP plus the parameterized map when used.
struct HeadModel {
  HeadConfig config;
  MlpClassifier mlp;
  std::optional<ParameterizedAggregator> aggregator;
};

struct Prediction {
  std::string doc_id;
  std::string event_id;
  std::string grounding_id;
  bool gold = false;
  bool final_label = false;
  HeadFunction function = HeadFunction::majority;
  std::size_t nearest_distance = 0;
  std::vector<SegmentDecision> segment_decisions;  // voting mode
  std::vector<double> weights;                     // aggregation or vote weights
  std::optional<double> probability;               // aggregation mode
};

/// Combines up to k embeddings (ascending distance) into a decision.
Prediction predict(std::span<const ClassificationEmbedding> embeddings, const HeadModel& model);

}  // namespace ctxassoc
