#include "ctxassoc/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "ctxassoc/errors.hpp"

namespace ctxassoc {

void TrainConfig::validate() const {
  head.validate();
  if (head_learning_rate <= 0.0 || encoder_learning_rate <= 0.0) throw ConfigError("learning rates must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (positive_weight && *positive_weight <= 0.0) throw ConfigError("positive_weight must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
  if (!freeze_encoder)
    throw ConfigError("encoder fine-tuning is not available in this build; set freeze_encoder to true");
}

LossValue weighted_bce(double logit, bool label, double positive_weight) {
  // softplus(-x) for positives, softplus(x) for negatives.
  auto softplus = [](double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); };
  const double w = label ? positive_weight : 1.0;
  const double y = label ? 1.0 : 0.0;
  return {w * (label ? softplus(-logit) : softplus(logit)), w * (sigmoid(logit) - y)};
}

HeadModel init_head_model(const TrainConfig& config, std::size_t embedding_dim) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  HeadModel model;
  model.config = config.head;
  model.mlp = MlpClassifier::init(embedding_dim, config.hidden_dim ? config.hidden_dim : embedding_dim, rng,
                                  config.dropout);
  if (config.head.function == HeadFunction::parameterized)
    model.aggregator = ParameterizedAggregator::init(embedding_dim, config.head.k, rng);
  return model;
}

std::vector<Prediction> predict_all(std::span<const PairEvidence> pairs, const HeadModel& model) {
  std::vector<Prediction> out;
  out.reserve(pairs.size());
  for (const auto& ev : pairs) {
    Prediction p;
    if (ev.usable()) {
      p = predict(ev.embeddings, model);
    } else {
      p.doc_id = ev.doc_id;
      p.event_id = ev.event_id;
      p.function = model.config.function;
      p.final_label = false;
    }
    p.grounding_id = ev.grounding_id;
    p.gold = ev.label;
    p.nearest_distance = ev.nearest_distance;
    out.push_back(std::move(p));
  }
  return out;
}

Metrics evaluate(const HeadModel& model, std::span<const PairEvidence> pairs) {
  const auto predictions = predict_all(pairs, model);
  return evaluate_predictions(predictions);
}

namespace {

ParamViews all_parameters(HeadModel& m) {
  auto views = m.mlp.parameters();
  if (m.aggregator) {
    auto more = m.aggregator->parameters();
    views.insert(views.end(), more.begin(), more.end());
  }
  return views;
}

struct Gradients {
  MlpClassifier mlp;
  std::optional<ParameterizedAggregator> aggregator;

  explicit Gradients(const HeadModel& m) : mlp(m.mlp.zeros_like()) {
    if (m.aggregator) aggregator = m.aggregator->zeros_like();
  }
  ParamViews views() {
    auto v = mlp.parameters();
    if (aggregator) {
      auto more = aggregator->parameters();
      v.insert(v.end(), more.begin(), more.end());
    }
    return v;
  }
  void scale(double s) {
    for (auto view : views())
      for (auto& x : view) x *= s;
  }
};

// Adds the gradient of one pair's loss to `grad`; returns (loss, instances).
std::pair<double, std::size_t> accumulate_pair(const HeadModel& model, const PairEvidence& ev, double pos_weight,
                                               Gradients& grad, std::mt19937_64& rng) {
  const auto used = std::span(ev.embeddings).first(std::min(model.config.k, ev.embeddings.size()));
  MlpClassifier::Cache cache;

  if (model.config.mode == HeadMode::voting) {
    double loss = 0.0;
    for (const auto& e : used) {
      const double logit = model.mlp.forward(e.vector, cache, &rng);
      const auto l = weighted_bce(logit, ev.label, pos_weight);
      loss += l.loss;
      model.mlp.backward(cache, l.dlogit, grad.mlp);
    }
    return {loss, used.size()};
  }

  Eigen::VectorXd input;
  Eigen::VectorXd concatenated;
  std::vector<double> weights;
  switch (model.config.function) {
    case HeadFunction::nearest:
    case HeadFunction::average:
    case HeadFunction::inverse_distance: {
      const auto agg = model.config.function == HeadFunction::nearest   ? aggregate_nearest(used)
                       : model.config.function == HeadFunction::average ? aggregate_average(used)
                                                                        : aggregate_inverse_distance(used);
      input = agg.vector;
      break;
    }
    case HeadFunction::parameterized: {
      std::vector<Eigen::VectorXd> vectors;
      for (const auto& e : used) vectors.push_back(e.vector);
      concatenated = model.aggregator->concatenate(vectors);
      input = model.aggregator->forward(concatenated);
      break;
    }
    default: throw ConfigError("voting function configured in aggregation mode");
  }
  const double logit = model.mlp.forward(input, cache, &rng);
  const auto l = weighted_bce(logit, ev.label, pos_weight);
  const Eigen::VectorXd dinput = model.mlp.backward(cache, l.dlogit, grad.mlp);
  if (model.config.function == HeadFunction::parameterized)
    model.aggregator->backward(concatenated, dinput, *grad.aggregator);
  return {l.loss, 1};
}

}  // namespace

TrainResult train(std::span<const PairEvidence> train_pairs, const TrainConfig& config,
                  std::span<const PairEvidence> dev_pairs) {
  config.validate();
  std::vector<const PairEvidence*> items;
  for (const auto& ev : train_pairs)
    if (ev.usable()) items.push_back(&ev);
  if (items.empty()) throw ValidationError("no usable training pairs");
  const auto positives =
      static_cast<std::size_t>(std::count_if(items.begin(), items.end(), [](const auto* e) { return e->label; }));
  if (positives == 0) throw ValidationError("training pairs contain no positive example");
  const auto negatives = items.size() - positives;

  TrainResult result;
  result.positive_weight = config.positive_weight.value_or(
      negatives == 0 ? 1.0 : static_cast<double>(negatives) / static_cast<double>(positives));
  const auto dim = static_cast<std::size_t>(items.front()->embeddings.front().vector.size());
  result.model = init_head_model(config, dim);

  // Offset so the shuffling stream differs from the initialization stream.
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  Adam optimizer(config.head_learning_rate);
  HeadModel best = result.model;
  std::optional<double> best_f1;
  std::size_t since_best = 0;

  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t epoch_instances = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      Gradients grad(result.model);
      double batch_loss = 0.0;
      std::size_t instances = 0;
      for (std::size_t j = start; j < std::min(start + config.batch_size, order.size()); ++j) {
        const auto [loss, n] = accumulate_pair(result.model, *items[order[j]], result.positive_weight, grad, rng);
        batch_loss += loss;
        instances += n;
      }
      grad.scale(1.0 / static_cast<double>(instances));
      optimizer.step(all_parameters(result.model), grad.views());
      epoch_loss += batch_loss;
      epoch_instances += instances;
    }

    EpochRecord record{epoch, epoch_loss / static_cast<double>(epoch_instances), std::nullopt};
    if (!dev_pairs.empty()) {
      record.dev_f1 = evaluate(result.model, dev_pairs).f1;
      if (!best_f1 || *record.dev_f1 > *best_f1) {
        best_f1 = record.dev_f1;
        best = result.model;
        result.best_epoch = epoch;
        since_best = 0;
      } else {
        ++since_best;
      }
    }
    result.history.push_back(record);
    if (!dev_pairs.empty() && config.patience > 0 && since_best >= config.patience) break;
  }

  if (!dev_pairs.empty() && best_f1) result.model = std::move(best);
  else result.best_epoch = result.history.empty() ? 0 : result.history.back().epoch;
  return result;
}

}  // namespace ctxassoc
