#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace ctxassoc {

using ParamViews = std::vector<std::span<double>>;

double gelu(double x);
double gelu_derivative(double x);
double sigmoid(double x);

/// Positive-class scorer: input -> dense(hidden) -> GELU -> dropout ->
/// dense(1). The same struct type holds gradients.
struct MlpClassifier {
  Eigen::MatrixXd w1;  // [hidden, input]
  Eigen::VectorXd b1;
  Eigen::VectorXd w2;  // [hidden]
  Eigen::VectorXd b2;  // [1]
  double dropout = 0.1;

  static MlpClassifier init(std::size_t input_dim, std::size_t hidden_dim, std::mt19937_64& rng,
                            double dropout = 0.1);
  [[nodiscard]] MlpClassifier zeros_like() const;

  [[nodiscard]] std::size_t input_dim() const { return static_cast<std::size_t>(w1.cols()); }
  [[nodiscard]] std::size_t hidden_dim() const { return static_cast<std::size_t>(w1.rows()); }

  struct Cache {
    Eigen::VectorXd input;
    Eigen::VectorXd pre;
    Eigen::VectorXd mask;  // dropout scale per hidden unit (1 in eval mode)
  };

  /// Eval-mode logit (no dropout).
  [[nodiscard]] double logit(const Eigen::VectorXd& x) const;
  /// Training forward pass; pass rng == nullptr for eval mode.
  double forward(const Eigen::VectorXd& x, Cache& cache, std::mt19937_64* rng) const;
  /// Accumulates parameter gradients into `grad`; returns d logit / d input.
  Eigen::VectorXd backward(const Cache& cache, double dlogit, MlpClassifier& grad) const;

  ParamViews parameters();
};

/// Learned map from k concatenated embeddings (zero padded, ascending
/// distance) to one embedding: y = W x + b.
struct ParameterizedAggregator {
  Eigen::MatrixXd w;  // [dim, k * dim]
  Eigen::VectorXd b;
  std::size_t k = 1;

  static ParameterizedAggregator init(std::size_t dim, std::size_t k, std::mt19937_64& rng);
  /// W = [I 0 ... 0], b = 0: reproduces the nearest embedding.
  static ParameterizedAggregator identity_on_first(std::size_t dim, std::size_t k);
  [[nodiscard]] ParameterizedAggregator zeros_like() const;

  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(w.rows()); }

  /// Throws DimensionError when more than k embeddings are given.
  [[nodiscard]] Eigen::VectorXd concatenate(std::span<const Eigen::VectorXd> embeddings) const;
  [[nodiscard]] Eigen::VectorXd forward(const Eigen::VectorXd& concatenated) const;
  /// Accumulates gradients; returns d loss / d concatenated input.
  Eigen::VectorXd backward(const Eigen::VectorXd& concatenated, const Eigen::VectorXd& dout,
                           ParameterizedAggregator& grad) const;

  ParamViews parameters();
};

/// Adam with bias correction; state is keyed by parameter order.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8, double weight_decay = 0.0);
  void step(const ParamViews& params, const ParamViews& grads);

 private:
  double lr_, beta1_, beta2_, eps_, weight_decay_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace ctxassoc
