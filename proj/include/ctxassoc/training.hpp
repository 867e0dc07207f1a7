#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ctxassoc/evidence.hpp"
#include "ctxassoc/heads.hpp"
#include "ctxassoc/metrics.hpp"

namespace ctxassoc {

/// Hyperparameters of head training. None of the defaults come from
/// published values; all are overridable.
struct TrainConfig {
  HeadConfig head;
  double head_learning_rate = 1e-3;
  double encoder_learning_rate = 2e-5;  // recorded; encoders are frozen
  std::size_t batch_size = 16;
  std::size_t epochs = 20;
  std::optional<double> positive_weight;  // default: #neg / #pos of the training split
  std::uint64_t seed = 13;
  bool freeze_encoder = true;
  std::size_t patience = 3;  // 0 disables early stopping
  std::size_t hidden_dim = 0;  // 0: same as the embedding dimension
  double dropout = 0.1;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> dev_f1;
};

struct TrainResult {
  HeadModel model;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 0: initialization
  double positive_weight = 1.0;
};

/// Fresh parameters for the configured head.
HeadModel init_head_model(const TrainConfig& config, std::size_t embedding_dim);

/// Class-weighted binary cross-entropy with Adam. Aggregation heads are
/// trained on the pair-level decision; voting heads on every segment with
/// the pair label, voting applied at inference only. Early-stops on dev F1
/// and returns the best dev epoch's parameters.
TrainResult train(std::span<const PairEvidence> train_pairs, const TrainConfig& config,
                  std::span<const PairEvidence> dev_pairs = {});

/// Weighted BCE of one logit and its derivative.
struct LossValue {
  double loss = 0.0;
  double dlogit = 0.0;
};
LossValue weighted_bce(double logit, bool label, double positive_weight);

/// Predicts every pair; pairs without usable evidence are predicted negative.
std::vector<Prediction> predict_all(std::span<const PairEvidence> pairs, const HeadModel& model);

/// Positive-class metrics of `model` on `pairs`. Throws on an empty list.
Metrics evaluate(const HeadModel& model, std::span<const PairEvidence> pairs);

}  // namespace ctxassoc
