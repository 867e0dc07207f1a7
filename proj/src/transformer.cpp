#include "ctxassoc/transformer.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

#include "ctxassoc/errors.hpp"
#include "ctxassoc/safetensors.hpp"

namespace ctxassoc {

RobertaConfig RobertaConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(fmt::format("{}: cannot open encoder configuration", file.string()));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("{}: {}", file.string(), e.what()));
  }
  RobertaConfig c;
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.hidden_size = j.value("hidden_size", c.hidden_size);
  c.num_layers = j.value("num_hidden_layers", c.num_layers);
  c.num_heads = j.value("num_attention_heads", c.num_heads);
  c.intermediate_size = j.value("intermediate_size", c.intermediate_size);
  c.max_position_embeddings = j.value("max_position_embeddings", c.max_position_embeddings);
  c.type_vocab_size = j.value("type_vocab_size", c.type_vocab_size);
  c.pad_token_id = j.value("pad_token_id", c.pad_token_id);
  c.layer_norm_eps = j.value("layer_norm_eps", c.layer_norm_eps);
  c.initializer_range = j.value("initializer_range", c.initializer_range);
  const auto act = j.value("hidden_act", std::string("gelu"));
  if (act != "gelu") throw ConfigError(fmt::format("{}: unsupported hidden_act '{}'", file.string(), act));
  if (c.hidden_size % c.num_heads != 0) throw ConfigError("hidden_size is not divisible by num_attention_heads");
  return c;
}

namespace {

class WeightTable {
 public:
  WeightTable(std::map<std::string, Tensor> tensors, std::filesystem::path source)
      : tensors_(std::move(tensors)), source_(std::move(source)) {
    for (const auto* prefix : {"roberta.", ""}) {
      if (tensors_.contains(std::string(prefix) + "embeddings.word_embeddings.weight")) {
        prefix_ = prefix;
        return;
      }
    }
    throw ConfigError(fmt::format("{}: no RoBERTa embedding weights found", source_.string()));
  }

  const Tensor& get(const std::string& name, std::vector<std::int64_t> shape) const {
    auto it = tensors_.find(prefix_ + name);
    if (it == tensors_.end()) throw ConfigError(fmt::format("{}: missing tensor {}{}", source_.string(), prefix_, name));
    if (it->second.shape != shape)
      throw DimensionError(fmt::format("{}: tensor {}{} has unexpected shape", source_.string(), prefix_, name));
    return it->second;
  }

 private:
  std::map<std::string, Tensor> tensors_;
  std::filesystem::path source_;
  std::string prefix_;
};

template <class M>
M to_matrix(const Tensor& t) {
  const auto rows = t.shape.size() == 2 ? t.shape[0] : 1;
  const auto cols = t.shape.size() == 2 ? t.shape[1] : t.shape[0];
  M m(rows, cols);
  std::copy(t.data.begin(), t.data.end(), m.data());
  return m;
}

Eigen::RowVectorXf to_row(const Tensor& t) {
  Eigen::RowVectorXf v(static_cast<Eigen::Index>(t.data.size()));
  std::copy(t.data.begin(), t.data.end(), v.data());
  return v;
}

}  // namespace

RobertaEncoder RobertaEncoder::load(const std::filesystem::path& checkpoint_dir, std::size_t vocab_size,
                                    std::uint64_t seed) {
  RobertaEncoder enc;
  enc.config_ = RobertaConfig::load(checkpoint_dir / "config.json");
  const auto& c = enc.config_;
  const WeightTable w(load_safetensors(checkpoint_dir / "model.safetensors"), checkpoint_dir / "model.safetensors");
  const auto h = static_cast<std::int64_t>(c.hidden_size);
  const auto inter = static_cast<std::int64_t>(c.intermediate_size);

  enc.word_embeddings_ = to_matrix<RowMatrix>(
      w.get("embeddings.word_embeddings.weight", {static_cast<std::int64_t>(c.vocab_size), h}));
  enc.position_embeddings_ = to_matrix<RowMatrix>(
      w.get("embeddings.position_embeddings.weight", {static_cast<std::int64_t>(c.max_position_embeddings), h}));
  enc.token_type_embeddings_ = to_matrix<RowMatrix>(
      w.get("embeddings.token_type_embeddings.weight", {static_cast<std::int64_t>(c.type_vocab_size), h}));
  enc.embedding_norm_ = {to_row(w.get("embeddings.LayerNorm.weight", {h})),
                         to_row(w.get("embeddings.LayerNorm.bias", {h}))};

  auto linear = [&](const std::string& base, std::int64_t out, std::int64_t in) {
    return Linear{to_matrix<RowMatrix>(w.get(base + ".weight", {out, in})), to_row(w.get(base + ".bias", {out}))};
  };
  auto norm = [&](const std::string& base) {
    return LayerNorm{to_row(w.get(base + ".weight", {h})), to_row(w.get(base + ".bias", {h}))};
  };
  for (std::size_t i = 0; i < c.num_layers; ++i) {
    const auto p = fmt::format("encoder.layer.{}.", i);
    enc.layers_.push_back({linear(p + "attention.self.query", h, h), linear(p + "attention.self.key", h, h),
                           linear(p + "attention.self.value", h, h), linear(p + "attention.output.dense", h, h),
                           norm(p + "attention.output.LayerNorm"), linear(p + "intermediate.dense", inter, h),
                           linear(p + "output.dense", h, inter), norm(p + "output.LayerNorm")});
  }

  if (vocab_size > c.vocab_size) {
    const auto old_rows = enc.word_embeddings_.rows();
    enc.word_embeddings_.conservativeResize(static_cast<Eigen::Index>(vocab_size), h);
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> normal(0.0f, static_cast<float>(c.initializer_range));
    for (Eigen::Index r = old_rows; r < enc.word_embeddings_.rows(); ++r)
      for (Eigen::Index col = 0; col < h; ++col) enc.word_embeddings_(r, col) = normal(rng);
  }
  return enc;
}

RobertaEncoder::RowMatrix RobertaEncoder::linear(const RowMatrix& x, const Linear& l) const {
  RowMatrix y = x * l.weight.transpose();
  y.rowwise() += l.bias;
  return y;
}

RobertaEncoder::RowMatrix RobertaEncoder::layer_norm(const RowMatrix& x, const LayerNorm& n) const {
  RowMatrix y(x.rows(), x.cols());
  const auto eps = static_cast<float>(config_.layer_norm_eps);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const float mean = x.row(r).mean();
    const float var = (x.row(r).array() - mean).square().mean();
    y.row(r) = ((x.row(r).array() - mean) / std::sqrt(var + eps)).matrix();
  }
  y.array().rowwise() *= n.gamma.array();
  y.rowwise() += n.beta;
  return y;
}

HiddenStates RobertaEncoder::encode_impl(std::span<const TokenId> ids) const {
  const auto n = static_cast<Eigen::Index>(ids.size());
  const auto h = static_cast<Eigen::Index>(config_.hidden_size);
  RowMatrix x(n, h);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto id = ids[static_cast<std::size_t>(i)];
    if (id < 0 || id >= word_embeddings_.rows())
      throw DimensionError(fmt::format("token id {} outside the embedding table", id));
    // RoBERTa positions start after the padding index.
    const auto pos = static_cast<Eigen::Index>(config_.pad_token_id) + 1 + i;
    x.row(i) = word_embeddings_.row(id) + position_embeddings_.row(pos) + token_type_embeddings_.row(0);
  }
  x = layer_norm(x, embedding_norm_);

  const auto heads = static_cast<Eigen::Index>(config_.num_heads);
  const auto dh = h / heads;
  const float scale = 1.0f / std::sqrt(static_cast<float>(dh));
  for (const auto& layer : layers_) {
    const RowMatrix q = linear(x, layer.query);
    const RowMatrix k = linear(x, layer.key);
    const RowMatrix v = linear(x, layer.value);
    RowMatrix context(n, h);
    for (Eigen::Index hd = 0; hd < heads; ++hd) {
      RowMatrix scores = (q.middleCols(hd * dh, dh) * k.middleCols(hd * dh, dh).transpose()) * scale;
      for (Eigen::Index r = 0; r < n; ++r) {
        const float mx = scores.row(r).maxCoeff();
        scores.row(r) = (scores.row(r).array() - mx).exp().matrix();
        scores.row(r) /= scores.row(r).sum();
      }
      context.middleCols(hd * dh, dh) = scores * v.middleCols(hd * dh, dh);
    }
    x = layer_norm(linear(context, layer.attn_out) + x, layer.attn_norm);
    RowMatrix mid = linear(x, layer.intermediate);
    mid = mid.unaryExpr([](float a) { return 0.5f * a * (1.0f + std::erf(a * 0.70710678118654752f)); });
    x = layer_norm(linear(mid, layer.output) + x, layer.out_norm);
  }
  return x.cast<double>();
}

}  // namespace ctxassoc
