#include "ctxassoc/mlp.hpp"

#include <cmath>

#include <fmt/format.h>

#include "ctxassoc/errors.hpp"

namespace ctxassoc {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

std::span<double> view(Eigen::MatrixXd& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> view(Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

// Xavier-uniform style init.
Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = dist(rng);
  return m;
}

}  // namespace

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_derivative(double x) {
  return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

MlpClassifier MlpClassifier::init(std::size_t input_dim, std::size_t hidden_dim, std::mt19937_64& rng,
                                  double dropout) {
  if (input_dim == 0 || hidden_dim == 0) throw ConfigError("MLP dimensions must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
  MlpClassifier m;
  const auto in = static_cast<Eigen::Index>(input_dim);
  const auto hid = static_cast<Eigen::Index>(hidden_dim);
  m.w1 = random_matrix(hid, in, rng);
  m.b1 = Eigen::VectorXd::Zero(hid);
  m.w2 = random_matrix(hid, 1, rng).col(0);
  m.b2 = Eigen::VectorXd::Zero(1);
  m.dropout = dropout;
  return m;
}

MlpClassifier MlpClassifier::zeros_like() const {
  MlpClassifier g;
  g.w1 = Eigen::MatrixXd::Zero(w1.rows(), w1.cols());
  g.b1 = Eigen::VectorXd::Zero(b1.size());
  g.w2 = Eigen::VectorXd::Zero(w2.size());
  g.b2 = Eigen::VectorXd::Zero(1);
  g.dropout = dropout;
  return g;
}

double MlpClassifier::logit(const Eigen::VectorXd& x) const {
  Cache cache;
  return forward(x, cache, nullptr);
}

double MlpClassifier::forward(const Eigen::VectorXd& x, Cache& cache, std::mt19937_64* rng) const {
  if (x.size() != w1.cols())
    throw DimensionError(fmt::format("MLP expects input of size {}, got {}", w1.cols(), x.size()));
  cache.input = x;
  cache.pre = w1 * x + b1;
  cache.mask = Eigen::VectorXd::Ones(cache.pre.size());
  if (rng && dropout > 0.0) {
    std::bernoulli_distribution keep(1.0 - dropout);
    for (Eigen::Index i = 0; i < cache.mask.size(); ++i) cache.mask[i] = keep(*rng) ? 1.0 / (1.0 - dropout) : 0.0;
  }
  const Eigen::VectorXd act = cache.pre.unaryExpr(&gelu).cwiseProduct(cache.mask);
  return w2.dot(act) + b2[0];
}

Eigen::VectorXd MlpClassifier::backward(const Cache& cache, double dlogit, MlpClassifier& grad) const {
  const Eigen::VectorXd act = cache.pre.unaryExpr(&gelu).cwiseProduct(cache.mask);
  grad.w2 += dlogit * act;
  grad.b2[0] += dlogit;
  const Eigen::VectorXd dpre =
      (dlogit * w2).cwiseProduct(cache.mask).cwiseProduct(cache.pre.unaryExpr(&gelu_derivative));
  grad.w1 += dpre * cache.input.transpose();
  grad.b1 += dpre;
  return w1.transpose() * dpre;
}

ParamViews MlpClassifier::parameters() { return {view(w1), view(b1), view(w2), view(b2)}; }

ParameterizedAggregator ParameterizedAggregator::init(std::size_t dim, std::size_t k, std::mt19937_64& rng) {
  if (dim == 0 || k == 0) throw ConfigError("aggregator dimensions must be positive");
  ParameterizedAggregator a;
  a.k = k;
  a.w = random_matrix(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim * k), rng);
  a.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  return a;
}

ParameterizedAggregator ParameterizedAggregator::identity_on_first(std::size_t dim, std::size_t k) {
  ParameterizedAggregator a;
  a.k = k;
  const auto d = static_cast<Eigen::Index>(dim);
  a.w = Eigen::MatrixXd::Zero(d, d * static_cast<Eigen::Index>(k));
  a.w.leftCols(d).setIdentity();
  a.b = Eigen::VectorXd::Zero(d);
  return a;
}

ParameterizedAggregator ParameterizedAggregator::zeros_like() const {
  ParameterizedAggregator g;
  g.k = k;
  g.w = Eigen::MatrixXd::Zero(w.rows(), w.cols());
  g.b = Eigen::VectorXd::Zero(b.size());
  return g;
}

Eigen::VectorXd ParameterizedAggregator::concatenate(std::span<const Eigen::VectorXd> embeddings) const {
  if (embeddings.empty()) throw DimensionError("parameterized aggregation needs at least one embedding");
  if (embeddings.size() > k)
    throw DimensionError(fmt::format("parameterized aggregation trained for k={} got {} embeddings", k,
                                     embeddings.size()));
  const auto d = w.rows();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d * static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    if (embeddings[i].size() != d)
      throw DimensionError(fmt::format("embedding {} has size {}, expected {}", i, embeddings[i].size(), d));
    x.segment(static_cast<Eigen::Index>(i) * d, d) = embeddings[i];
  }
  return x;
}

Eigen::VectorXd ParameterizedAggregator::forward(const Eigen::VectorXd& concatenated) const {
  if (concatenated.size() != w.cols())
    throw DimensionError(fmt::format("aggregator expects {} inputs, got {}", w.cols(), concatenated.size()));
  return w * concatenated + b;
}

Eigen::VectorXd ParameterizedAggregator::backward(const Eigen::VectorXd& concatenated, const Eigen::VectorXd& dout,
                                                  ParameterizedAggregator& grad) const {
  grad.w += dout * concatenated.transpose();
  grad.b += dout;
  return w.transpose() * dout;
}

ParamViews ParameterizedAggregator::parameters() { return {view(w), view(b)}; }

Adam::Adam(double lr, double beta1, double beta2, double eps, double weight_decay)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {
  if (lr <= 0.0) throw ConfigError("learning rate must be positive");
}

void Adam::step(const ParamViews& params, const ParamViews& grads) {
  if (params.size() != grads.size()) throw DimensionError("parameter and gradient lists differ in length");
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i];
    auto g = grads[i];
    if (p.size() != g.size() || p.size() != m_[i].size()) throw DimensionError("parameter shape changed between steps");
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g[j] + weight_decay_ * p[j];
      m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * gj;
      v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * gj * gj;
      p[j] -= lr_ * (m_[i][j] / c1) / (std::sqrt(v_[i][j] / c2) + eps_);
    }
  }
}

}  // namespace ctxassoc
