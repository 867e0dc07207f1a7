#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ctxassoc/corpus.hpp"
#include "ctxassoc/encoder.hpp"
#include "ctxassoc/tokenizer.hpp"
#include "ctxassoc/training.hpp"

namespace ctxassoc {

/// Everything a CLI run depends on. Serialized next to every output.
struct RunConfig {
  std::filesystem::path corpus_path;
  std::vector<std::string> dev_doc_ids;  // empty: take the corpus manifest's dev list
  HeadConfig head;

  std::string encoder = "mock";  // "mock" or a checkpoint directory
  std::size_t embedding_dim = 32;  // mock encoder only
  std::size_t max_len = 512;
  SeparatorMode separator = SeparatorMode::native;
  MarkerPooling pooling = MarkerPooling::all_markers;

  double head_learning_rate = 1e-3;
  double encoder_learning_rate = 2e-5;
  std::size_t batch_size = 16;
  std::size_t epochs = 20;
  std::optional<double> positive_weight;
  bool freeze_encoder = true;
  std::size_t patience = 3;
  std::size_t hidden_dim = 0;
  double dropout = 0.1;

  std::size_t fold_size = 3;
  std::size_t k_min = 3;
  std::size_t k_max = 10;
  std::filesystem::path output_dir = "runs/default";
  std::uint64_t seed = 42;
  std::size_t threads = 1;

  void validate() const;
  [[nodiscard]] TrainConfig train_config() const;
  [[nodiscard]] std::uint64_t split_seed() const;
  [[nodiscard]] std::uint64_t encoder_seed() const;
};

/// Derives an independent stream seed from the master seed and a label.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);

nlohmann::json to_json(const RunConfig& config);
/// Missing keys keep the values already in `base`.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& file, RunConfig base = {});
void save_run_config(const RunConfig& config, const std::filesystem::path& file);

/// 16 hex digits of FNV-1a over the canonical config dump, leaving out
/// settings that cannot change results (output_dir, threads).
std::string config_fingerprint(const RunConfig& config);

/// Tokenizer + encoder pair built from a RunConfig.
struct EncoderBundle {
  std::unique_ptr<SubwordTokenizer> tokenizer;
  std::unique_ptr<Encoder> encoder;
};

/// Mock: a word vocabulary built from the corpus and a MockEncoder whose
/// sentinel is the synthetic sentinel word when present. Checkpoint: byte
/// level BPE from vocab.json/merges.txt and a RobertaEncoder.
EncoderBundle make_encoder(const RunConfig& config, const Corpus& corpus);

}  // namespace ctxassoc
