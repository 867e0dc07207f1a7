#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ctxassoc/encoder.hpp"

namespace ctxassoc {

struct RobertaConfig {
  std::size_t vocab_size = 50265;
  std::size_t hidden_size = 768;
  std::size_t num_layers = 12;
  std::size_t num_heads = 12;
  std::size_t intermediate_size = 3072;
  std::size_t max_position_embeddings = 514;
  std::size_t type_vocab_size = 1;
  std::size_t pad_token_id = 1;
  double layer_norm_eps = 1e-5;
  double initializer_range = 0.02;

  /// Reads a Hugging Face style `config.json`.
  static RobertaConfig load(const std::filesystem::path& file);
};

/// Inference-only RoBERTa encoder (post-LN blocks, exact GELU) loaded from
/// `config.json` + `model.safetensors`. Weights are frozen.
class RobertaEncoder final : public Encoder {
 public:
  /// `checkpoint_dir` holds config.json and model.safetensors. When
  /// `vocab_size` exceeds the checkpoint's, the word embedding table is
  /// extended with rows drawn from N(0, initializer_range) using `seed`.
  static RobertaEncoder load(const std::filesystem::path& checkpoint_dir, std::size_t vocab_size,
                             std::uint64_t seed = 0);

  [[nodiscard]] std::size_t embedding_dim() const override { return config_.hidden_size; }
  [[nodiscard]] std::size_t max_len() const override {
    return config_.max_position_embeddings - config_.pad_token_id - 1;
  }
  [[nodiscard]] std::string name() const override { return "roberta"; }
  [[nodiscard]] const RobertaConfig& config() const { return config_; }

 protected:
  [[nodiscard]] HiddenStates encode_impl(std::span<const TokenId> ids) const override;

 private:
  using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  struct Linear {
    RowMatrix weight;  // [out, in]
    Eigen::RowVectorXf bias;
  };
  struct LayerNorm {
    Eigen::RowVectorXf gamma;
    Eigen::RowVectorXf beta;
  };
  struct Layer {
    Linear query, key, value, attn_out;
    LayerNorm attn_norm;
    Linear intermediate, output;
    LayerNorm out_norm;
  };

  RobertaEncoder() = default;
  [[nodiscard]] RowMatrix linear(const RowMatrix& x, const Linear& l) const;
  [[nodiscard]] RowMatrix layer_norm(const RowMatrix& x, const LayerNorm& n) const;

  RobertaConfig config_;
  RowMatrix word_embeddings_;
  RowMatrix position_embeddings_;
  RowMatrix token_type_embeddings_;
  LayerNorm embedding_norm_;
  std::vector<Layer> layers_;
};

}  // namespace ctxassoc
