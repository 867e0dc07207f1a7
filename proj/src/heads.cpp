#include "ctxassoc/heads.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "ctxassoc/errors.hpp"

namespace ctxassoc {

namespace {

constexpr HeadFunction kFunctions[] = {HeadFunction::nearest,          HeadFunction::average,
                                       HeadFunction::inverse_distance, HeadFunction::parameterized,
                                       HeadFunction::one_hit,          HeadFunction::majority,
                                       HeadFunction::post_inverse_distance, HeadFunction::confidence};

void require_nonempty(std::size_t n, std::string_view what) {
  if (n == 0) throw DimensionError(fmt::format("{} needs at least one input", what));
}

std::vector<std::size_t> distances_of(std::span<const ClassificationEmbedding> embeddings) {
  std::vector<std::size_t> d;
  d.reserve(embeddings.size());
  for (const auto& e : embeddings) d.push_back(e.distance);
  return d;
}

std::vector<std::size_t> distances_of(std::span<const SegmentDecision> decisions) {
  std::vector<std::size_t> d;
  d.reserve(decisions.size());
  for (const auto& e : decisions) d.push_back(e.distance);
  return d;
}

Aggregate weighted_sum(std::span<const ClassificationEmbedding> embeddings, std::vector<double> weights) {
  Aggregate out;
  out.vector = Eigen::VectorXd::Zero(embeddings.front().vector.size());
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    if (embeddings[i].vector.size() != out.vector.size())
      throw DimensionError("embeddings within one pair have different dimensions");
    out.vector += weights[i] * embeddings[i].vector;
  }
  out.weights = std::move(weights);
  return out;
}

}  // namespace

std::string_view to_string(HeadMode mode) { return mode == HeadMode::aggregation ? "aggregation" : "voting"; }

std::string_view to_string(HeadFunction function) {
  switch (function) {
    case HeadFunction::nearest: return "nearest";
    case HeadFunction::average: return "average";
    case HeadFunction::inverse_distance: return "inverse_distance";
    case HeadFunction::parameterized: return "parameterized";
    case HeadFunction::one_hit: return "one_hit";
    case HeadFunction::majority: return "majority";
    case HeadFunction::post_inverse_distance: return "post_inverse_distance";
    case HeadFunction::confidence: return "confidence";
  }
  return "majority";
}

HeadMode parse_head_mode(std::string_view text) {
  if (text == "aggregation") return HeadMode::aggregation;
  if (text == "voting") return HeadMode::voting;
  throw ConfigError(fmt::format("unknown head mode '{}'", text));
}

HeadFunction parse_head_function(std::string_view text) {
  for (auto f : kFunctions)
    if (to_string(f) == text) return f;
  throw ConfigError(fmt::format("unknown head function '{}'", text));
}

HeadMode mode_of(HeadFunction function) {
  switch (function) {
    case HeadFunction::nearest:
    case HeadFunction::average:
    case HeadFunction::inverse_distance:
    case HeadFunction::parameterized: return HeadMode::aggregation;
    default: return HeadMode::voting;
  }
}

void HeadConfig::validate() const {
  if (k == 0) throw ConfigError("k must be at least 1");
  if (mode_of(function) != mode)
    throw ConfigError(fmt::format("head function {} is not a {} function", to_string(function), to_string(mode)));
}

HeadConfig HeadConfig::for_function(HeadFunction function, std::size_t k) {
  HeadConfig c{mode_of(function), function, k};
  c.validate();
  return c;
}

std::vector<double> inverse_distance_weights(std::span<const std::size_t> distances) {
  require_nonempty(distances.size(), "inverse distance weighting");
  std::vector<double> w;
  w.reserve(distances.size());
  double total = 0.0;
  for (auto d : distances) {
    w.push_back(1.0 / (static_cast<double>(d) + 1.0));
    total += w.back();
  }
  for (auto& x : w) x /= total;
  return w;
}

Aggregate aggregate_nearest(std::span<const ClassificationEmbedding> embeddings) {
  require_nonempty(embeddings.size(), "nearest aggregation");
  std::vector<double> weights(embeddings.size(), 0.0);
  weights[0] = 1.0;
  return {embeddings.front().vector, std::move(weights)};
}

Aggregate aggregate_average(std::span<const ClassificationEmbedding> embeddings) {
  require_nonempty(embeddings.size(), "average aggregation");
  return weighted_sum(embeddings, std::vector<double>(embeddings.size(), 1.0 / static_cast<double>(embeddings.size())));
}

Aggregate aggregate_inverse_distance(std::span<const ClassificationEmbedding> embeddings,
                                     std::span<const std::size_t> distances) {
  if (embeddings.size() != distances.size())
    throw DimensionError(fmt::format("{} embeddings but {} distances", embeddings.size(), distances.size()));
  require_nonempty(embeddings.size(), "inverse distance aggregation");
  return weighted_sum(embeddings, inverse_distance_weights(distances));
}

Aggregate aggregate_inverse_distance(std::span<const ClassificationEmbedding> embeddings) {
  const auto d = distances_of(embeddings);
  return aggregate_inverse_distance(embeddings, d);
}

Aggregate aggregate_parameterized(std::span<const ClassificationEmbedding> embeddings,
                                  const ParameterizedAggregator& params) {
  require_nonempty(embeddings.size(), "parameterized aggregation");
  std::vector<Eigen::VectorXd> vectors;
  vectors.reserve(embeddings.size());
  for (const auto& e : embeddings) vectors.push_back(e.vector);
  return {params.forward(params.concatenate(vectors)), {}};
}

SegmentDecision classify(const Eigen::VectorXd& embedding, const MlpClassifier& mlp, std::size_t distance) {
  SegmentDecision d;
  d.logit = mlp.logit(embedding);
  d.probability = sigmoid(d.logit);
  d.label = d.probability >= kDecisionThreshold;
  d.distance = distance;
  return d;
}

bool vote_one_hit(std::span<const SegmentDecision> decisions) {
  require_nonempty(decisions.size(), "one-hit vote");
  return std::any_of(decisions.begin(), decisions.end(), [](const SegmentDecision& d) { return d.label; });
}

bool vote_majority(std::span<const SegmentDecision> decisions) {
  require_nonempty(decisions.size(), "majority vote");
  const auto positive =
      static_cast<std::size_t>(std::count_if(decisions.begin(), decisions.end(), [](const auto& d) { return d.label; }));
  return 2 * positive >= decisions.size();
}

bool vote_post_inverse_distance(std::span<const SegmentDecision> decisions, std::span<const std::size_t> distances) {
  if (decisions.size() != distances.size())
    throw DimensionError(fmt::format("{} decisions but {} distances", decisions.size(), distances.size()));
  require_nonempty(decisions.size(), "post inverse distance vote");
  const auto w = inverse_distance_weights(distances);
  double pos = 0.0, neg = 0.0;
  for (std::size_t i = 0; i < decisions.size(); ++i) (decisions[i].label ? pos : neg) += w[i];
  return pos > neg;
}

bool vote_post_inverse_distance(std::span<const SegmentDecision> decisions) {
  const auto d = distances_of(decisions);
  return vote_post_inverse_distance(decisions, d);
}

std::vector<double> confidence_weights(std::span<const SegmentDecision> decisions) {
  require_nonempty(decisions.size(), "confidence vote");
  std::vector<double> w;
  w.reserve(decisions.size());
  double total = 0.0;
  for (const auto& d : decisions) {
    w.push_back(d.label ? d.probability : 1.0 - d.probability);
    total += w.back();
  }
  for (auto& x : w) x /= total;
  return w;
}

bool vote_confidence(std::span<const SegmentDecision> decisions) {
  const auto w = confidence_weights(decisions);
  double pos = 0.0, neg = 0.0;
  for (std::size_t i = 0; i < decisions.size(); ++i) (decisions[i].label ? pos : neg) += w[i];
  return pos > neg;
}

Prediction predict(std::span<const ClassificationEmbedding> embeddings, const HeadModel& model) {
  model.config.validate();
  require_nonempty(embeddings.size(), "prediction");
  const auto used = embeddings.first(std::min(model.config.k, embeddings.size()));

  Prediction p;
  p.doc_id = used.front().doc_id;
  p.event_id = used.front().event_id;
  p.function = model.config.function;
  p.nearest_distance = used.front().distance;

  if (model.config.mode == HeadMode::aggregation) {
    Aggregate agg;
    switch (model.config.function) {
      case HeadFunction::nearest: agg = aggregate_nearest(used); break;
      case HeadFunction::average: agg = aggregate_average(used); break;
      case HeadFunction::inverse_distance: agg = aggregate_inverse_distance(used); break;
      case HeadFunction::parameterized:
        if (!model.aggregator) throw ConfigError("parameterized head has no trained aggregation map");
        agg = aggregate_parameterized(used, *model.aggregator);
        break;
      default: throw ConfigError("voting function configured in aggregation mode");
    }
    const auto decision = classify(agg.vector, model.mlp, p.nearest_distance);
    p.final_label = decision.label;
    p.probability = decision.probability;
    p.weights = std::move(agg.weights);
    return p;
  }

  for (const auto& e : used) p.segment_decisions.push_back(classify(e.vector, model.mlp, e.distance));
  switch (model.config.function) {
    case HeadFunction::one_hit: p.final_label = vote_one_hit(p.segment_decisions); break;
    case HeadFunction::majority: p.final_label = vote_majority(p.segment_decisions); break;
    case HeadFunction::post_inverse_distance: {
      p.final_label = vote_post_inverse_distance(p.segment_decisions);
      const auto d = distances_of(p.segment_decisions);
      p.weights = inverse_distance_weights(d);
      break;
    }
    case HeadFunction::confidence:
      p.final_label = vote_confidence(p.segment_decisions);
      p.weights = confidence_weights(p.segment_decisions);
      break;
    default: throw ConfigError("aggregation function configured in voting mode");
  }
  return p;
}

}  // namespace ctxassoc
