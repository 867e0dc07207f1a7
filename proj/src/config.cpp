#include "ctxassoc/config.hpp"

#include <fstream>

#include <fmt/format.h>

#include "ctxassoc/errors.hpp"
#include "ctxassoc/synthetic.hpp"
#include "ctxassoc/transformer.hpp"

namespace ctxassoc {

using nlohmann::json;

void RunConfig::validate() const {
  head.validate();
  train_config().validate();
  if (max_len < 8) throw ConfigError("max_len must be at least 8");
  if (fold_size == 0) throw ConfigError("fold_size must be at least 1");
  if (k_min < 1 || k_max > 10 || k_min > k_max) throw ConfigError("sweep range must satisfy 1 <= k_min <= k_max <= 10");
  if (encoder == "mock" && embedding_dim < 4) throw ConfigError("mock embedding_dim must be at least 4");
  if (threads == 0) throw ConfigError("threads must be at least 1");
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ master;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return h;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.head = head;
  t.head_learning_rate = head_learning_rate;
  t.encoder_learning_rate = encoder_learning_rate;
  t.batch_size = batch_size;
  t.epochs = epochs;
  t.positive_weight = positive_weight;
  t.seed = derive_seed(seed, "train");
  t.freeze_encoder = freeze_encoder;
  t.patience = patience;
  t.hidden_dim = hidden_dim;
  t.dropout = dropout;
  return t;
}

std::uint64_t RunConfig::split_seed() const { return derive_seed(seed, "split"); }
std::uint64_t RunConfig::encoder_seed() const { return derive_seed(seed, "encoder"); }

json to_json(const RunConfig& c) {
  json j;
  j["corpus_path"] = c.corpus_path.string();
  j["dev_doc_ids"] = c.dev_doc_ids;
  j["head"] = {{"mode", std::string(to_string(c.head.mode))},
               {"function", std::string(to_string(c.head.function))},
               {"k", c.head.k}};
  j["encoder"] = c.encoder;
  j["embedding_dim"] = c.embedding_dim;
  j["max_len"] = c.max_len;
  j["separator"] = c.separator == SeparatorMode::native ? "native" : "dedicated";
  j["pooling"] = c.pooling == MarkerPooling::all_markers ? "all_markers" : "opening_only";
  j["head_learning_rate"] = c.head_learning_rate;
  j["encoder_learning_rate"] = c.encoder_learning_rate;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["positive_weight"] = c.positive_weight ? json(*c.positive_weight) : json(nullptr);
  j["freeze_encoder"] = c.freeze_encoder;
  j["patience"] = c.patience;
  j["hidden_dim"] = c.hidden_dim;
  j["dropout"] = c.dropout;
  j["fold_size"] = c.fold_size;
  j["k_min"] = c.k_min;
  j["k_max"] = c.k_max;
  j["output_dir"] = c.output_dir.string();
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  return j;
}

RunConfig run_config_from_json(const json& j, RunConfig c) {
  try {
    if (j.contains("corpus_path")) c.corpus_path = j.at("corpus_path").get<std::string>();
    if (j.contains("dev_doc_ids")) c.dev_doc_ids = j.at("dev_doc_ids").get<std::vector<std::string>>();
    if (j.contains("head")) {
      const auto& h = j.at("head");
      if (h.contains("function")) {
        c.head.function = parse_head_function(h.at("function").get<std::string>());
        c.head.mode = mode_of(c.head.function);
      }
      if (h.contains("mode")) c.head.mode = parse_head_mode(h.at("mode").get<std::string>());
      if (h.contains("k")) c.head.k = h.at("k").get<std::size_t>();
    }
    if (j.contains("encoder")) c.encoder = j.at("encoder").get<std::string>();
    if (j.contains("embedding_dim")) c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    if (j.contains("max_len")) c.max_len = j.at("max_len").get<std::size_t>();
    if (j.contains("separator")) {
      const auto s = j.at("separator").get<std::string>();
      if (s != "native" && s != "dedicated") throw ConfigError(fmt::format("unknown separator mode '{}'", s));
      c.separator = s == "native" ? SeparatorMode::native : SeparatorMode::dedicated;
    }
    if (j.contains("pooling")) {
      const auto s = j.at("pooling").get<std::string>();
      if (s != "all_markers" && s != "opening_only") throw ConfigError(fmt::format("unknown pooling '{}'", s));
      c.pooling = s == "all_markers" ? MarkerPooling::all_markers : MarkerPooling::opening_only;
    }
    if (j.contains("head_learning_rate")) c.head_learning_rate = j.at("head_learning_rate").get<double>();
    if (j.contains("encoder_learning_rate")) c.encoder_learning_rate = j.at("encoder_learning_rate").get<double>();
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("epochs")) c.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("positive_weight"))
      c.positive_weight = j.at("positive_weight").is_null() ? std::nullopt
                                                            : std::optional(j.at("positive_weight").get<double>());
    if (j.contains("freeze_encoder")) c.freeze_encoder = j.at("freeze_encoder").get<bool>();
    if (j.contains("patience")) c.patience = j.at("patience").get<std::size_t>();
    if (j.contains("hidden_dim")) c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    if (j.contains("dropout")) c.dropout = j.at("dropout").get<double>();
    if (j.contains("fold_size")) c.fold_size = j.at("fold_size").get<std::size_t>();
    if (j.contains("k_min")) c.k_min = j.at("k_min").get<std::size_t>();
    if (j.contains("k_max")) c.k_max = j.at("k_max").get<std::size_t>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) c.threads = j.at("threads").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("invalid run configuration: {}", e.what()));
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& file, RunConfig base) {
  std::ifstream in(file);
  if (!in) throw ConfigError(fmt::format("{}: cannot open configuration", file.string()));
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", file.string(), e.what()));
  }
  return run_config_from_json(j, std::move(base));
}

void save_run_config(const RunConfig& config, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw ConfigError(fmt::format("{}: cannot write configuration", file.string()));
  out << to_json(config).dump(2) << '\n';
}

std::string config_fingerprint(const RunConfig& config) {
  auto j = to_json(config);
  j.erase("output_dir");
  j.erase("threads");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

EncoderBundle make_encoder(const RunConfig& config, const Corpus& corpus) {
  EncoderBundle bundle;
  if (config.encoder == "mock") {
    std::vector<std::string> words;
    for (const auto& doc : corpus.documents)
      for (const auto& s : doc.sentences) words.insert(words.end(), s.tokens.begin(), s.tokens.end());
    auto tokenizer = std::make_unique<WordVocabTokenizer>(WordVocabTokenizer::from_words(std::move(words), config.separator));
    MockEncoderOptions options;
    options.embedding_dim = config.embedding_dim;
    options.max_len = config.max_len;
    options.seed = config.encoder_seed();
    options.sentinel_id = tokenizer->lookup(kSentinelWord);
    bundle.encoder = std::make_unique<MockEncoder>(options);
    bundle.tokenizer = std::move(tokenizer);
    return bundle;
  }

  const std::filesystem::path dir = config.encoder;
  if (!std::filesystem::is_directory(dir))
    throw ConfigError(fmt::format("encoder '{}' is neither 'mock' nor a checkpoint directory", config.encoder));
  auto tokenizer = std::make_unique<ByteLevelBpeTokenizer>(
      ByteLevelBpeTokenizer::load(dir / "vocab.json", dir / "merges.txt", config.separator));
  auto encoder = std::make_unique<RobertaEncoder>(
      RobertaEncoder::load(dir, tokenizer->vocab_size(), config.encoder_seed()));
  if (config.max_len > encoder->max_len())
    throw ConfigError(fmt::format("max_len {} exceeds the encoder limit {}", config.max_len, encoder->max_len()));
  bundle.tokenizer = std::move(tokenizer);
  bundle.encoder = std::move(encoder);
  return bundle;
}

}  // namespace ctxassoc
