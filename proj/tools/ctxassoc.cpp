#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "ctxassoc/config.hpp"
#include "ctxassoc/corpus.hpp"
#include "ctxassoc/crossval.hpp"
#include "ctxassoc/errors.hpp"
#include "ctxassoc/evidence.hpp"
#include "ctxassoc/model_io.hpp"
#include "ctxassoc/report.hpp"
#include "ctxassoc/synthetic.hpp"
#include "ctxassoc/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ctxassoc;

namespace {

struct StageError : std::runtime_error {
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(what), stage(std::move(stage)) {}
  std::string stage;
};

template <typename F>
auto stage(const std::string& name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file);
  if (!out) throw Error(fmt::format("{}: cannot write", file.string()));
  out << text;
}

void write_json_file(const fs::path& file, const json& j) { write_text(file, j.dump(2) + "\n"); }

// Flags that override the configuration file when given.
struct Overrides {
  std::optional<std::string> config_file;
  std::optional<std::string> corpus;
  std::optional<std::string> dev;
  std::optional<std::string> head;
  std::optional<std::size_t> k;
  std::optional<std::string> encoder;
  std::optional<std::size_t> embedding_dim;
  std::optional<std::size_t> max_len;
  std::optional<std::string> separator;
  std::optional<std::string> pooling;
  std::optional<double> head_lr;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> epochs;
  std::optional<double> positive_weight;
  std::optional<std::size_t> patience;
  std::optional<std::size_t> fold_size;
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> dump_segments;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_file, "JSON run configuration file");
    app->add_option("--corpus", corpus, "Corpus directory");
    app->add_option("--dev", dev, "Comma-separated dev document ids (default: corpus manifest)");
    app->add_option("--head", head,
                    "Head function: nearest, average, inverse_distance, parameterized, one_hit, majority, "
                    "post_inverse_distance, confidence");
    app->add_option("-k,--k", k, "Evidence segments per pair");
    app->add_option("--encoder", encoder, "'mock' or a checkpoint directory");
    app->add_option("--embedding-dim", embedding_dim, "Mock encoder width");
    app->add_option("--max-len", max_len, "Token budget per segment");
    app->add_option("--separator", separator, "Truncation separator: native or dedicated");
    app->add_option("--pooling", pooling, "Marker pooling: all_markers or opening_only");
    app->add_option("--lr", head_lr, "Head learning rate");
    app->add_option("--batch-size", batch_size, "Pairs per batch");
    app->add_option("--epochs", epochs, "Maximum training epochs");
    app->add_option("--positive-weight", positive_weight, "Positive-class loss weight (default: #neg/#pos)");
    app->add_option("--patience", patience, "Early-stopping patience on dev F1 (0 disables)");
    app->add_option("--fold-size", fold_size, "Documents per cross-validation fold");
    app->add_option("-o,--output", output, "Output directory");
    app->add_option("--seed", seed, "Master seed");
    app->add_option("-j,--threads", threads, "Worker threads");
    app->add_option("--dump-segments", dump_segments, "Write every built segment to this file");
  }

  RunConfig resolve() const {
    RunConfig c;
    if (config_file) c = load_run_config(*config_file, c);
    if (corpus) c.corpus_path = *corpus;
    if (dev) {
      c.dev_doc_ids.clear();
      std::stringstream ss(*dev);
      for (std::string id; std::getline(ss, id, ',');)
        if (!id.empty()) c.dev_doc_ids.push_back(id);
    }
    if (head) {
      c.head.function = parse_head_function(*head);
      c.head.mode = mode_of(c.head.function);
    }
    if (k) c.head.k = *k;
    if (encoder) c.encoder = *encoder;
    if (embedding_dim) c.embedding_dim = *embedding_dim;
    if (max_len) c.max_len = *max_len;
    if (separator) c = run_config_from_json(json{{"separator", *separator}}, c);
    if (pooling) c = run_config_from_json(json{{"pooling", *pooling}}, c);
    if (head_lr) c.head_learning_rate = *head_lr;
    if (batch_size) c.batch_size = *batch_size;
    if (epochs) c.epochs = *epochs;
    if (positive_weight) c.positive_weight = *positive_weight;
    if (patience) c.patience = *patience;
    if (fold_size) c.fold_size = *fold_size;
    if (output) c.output_dir = *output;
    if (seed) c.seed = *seed;
    if (threads) c.threads = *threads;
    if (c.corpus_path.empty()) throw ConfigError("no corpus given (--corpus or corpus_path in the config file)");
    c.validate();
    return c;
  }
};

// Loaded corpus plus the encoder stack a run needs.
struct Session {
  RunConfig config;
  Corpus corpus;
  EncoderBundle bundle;
  std::unique_ptr<std::ofstream> dump;
  EvidencePipeline pipeline;

  explicit Session(const Overrides& o) {
    config = stage("config", [&] { return o.resolve(); });
    corpus = stage("load corpus", [&] { return load_corpus(config.corpus_path); });
    if (config.dev_doc_ids.empty()) config.dev_doc_ids = corpus.dev_doc_ids;
    stage("config", [&] {
      for (const auto& id : config.dev_doc_ids)
        if (!corpus.find(id)) throw ConfigError(fmt::format("dev document '{}' is not in the corpus", id));
    });
    bundle = stage("encoder", [&] { return make_encoder(config, corpus); });
    stage("output", [&] {
      fs::create_directories(config.output_dir);
      save_run_config(config, config.output_dir / "run_config.json");
    });
    pipeline.corpus = &corpus;
    pipeline.tokenizer = bundle.tokenizer.get();
    pipeline.encoder = bundle.encoder.get();
    pipeline.segment_options.max_len = config.max_len;
    pipeline.pooling = config.pooling;
    pipeline.threads = config.threads;
    if (o.dump_segments) {
      dump = std::make_unique<std::ofstream>(*o.dump_segments);
      if (!*dump) throw StageError("output", fmt::format("{}: cannot write", *o.dump_segments));
      pipeline.segment_dump = dump.get();
    }
  }

  [[nodiscard]] std::set<std::string> dev_set() const {
    return {config.dev_doc_ids.begin(), config.dev_doc_ids.end()};
  }

  [[nodiscard]] json header() const {
    return {{"config_fingerprint", config_fingerprint(config)}, {"seed", config.seed}};
  }

  [[nodiscard]] EncoderReference encoder_reference() const {
    const auto j = to_json(config);
    return {config.encoder, bundle.encoder->embedding_dim(), config.max_len, j.at("pooling").get<std::string>(),
            j.at("separator").get<std::string>()};
  }
};

int cmd_stats(const std::string& corpus_path, const std::optional<std::string>& out, bool entries) {
  const auto corpus = stage("load corpus", [&] { return load_corpus(corpus_path); });
  const auto report = stage("stats", [&] {
    const auto pairs = generate_candidates(corpus);
    const auto positives =
        static_cast<std::size_t>(std::count_if(pairs.begin(), pairs.end(), [](const auto& p) { return p.label; }));
    const auto negatives = pairs.size() - positives;
    const double n = pairs.empty() ? 1.0 : static_cast<double>(pairs.size());
    const auto stats = corpus_distance_stats(corpus);
    json j;
    j["totals"] = to_json(corpus_totals(corpus));
    j["dev_totals"] = to_json(corpus_totals(corpus, corpus.dev_doc_ids));
    j["cv_totals"] = to_json(corpus_totals(corpus, corpus.cv_doc_ids));
    j["inter_sentence"] = to_json(stats);
    j["inter_sentence"]["mean_rounded"] = stats.mean ? json(std::llround(*stats.mean)) : json(nullptr);
    j["detections_per_type"] = to_json(detections_per_type(corpus), entries);
    j["candidates"] = {{"pairs", pairs.size()},
                       {"positive", positives},
                       {"negative", negatives},
                       {"positive_percent", 100.0 * static_cast<double>(positives) / n},
                       {"negative_percent", 100.0 * static_cast<double>(negatives) / n}};
    return j;
  });
  const auto text = report.dump(2) + "\n";
  if (out) stage("output", [&] { write_text(*out, text); });
  else std::cout << text;
  return 0;
}

int cmd_prepare(const std::optional<std::string>& tsv, const std::optional<std::string>& validate,
                const std::optional<std::size_t>& synthetic, std::uint64_t seed, const std::optional<std::string>& out) {
  const int sources = (tsv ? 1 : 0) + (validate ? 1 : 0) + (synthetic ? 1 : 0);
  if (sources != 1) throw StageError("config", "prepare needs exactly one of --tsv, --validate, --synthetic");
  if (validate) {
    const auto corpus = stage("validate", [&] { return load_corpus(*validate); });
    std::cout << fmt::format("{}: {} documents valid\n", *validate, corpus.documents.size());
    return 0;
  }
  if (!out) throw StageError("config", "--out is required with --tsv and --synthetic");
  const auto corpus = stage("convert", [&] {
    if (tsv) return convert_tsv_release(*tsv);
    SyntheticOptions options;
    options.documents = *synthetic;
    options.seed = seed;
    if (options.dev_documents >= options.documents) options.dev_documents = options.documents / 3;
    return make_synthetic_corpus(options);
  });
  stage("output", [&] { write_corpus(corpus, *out); });
  std::cout << fmt::format("wrote {} documents to {}\n", corpus.documents.size(), *out);
  return 0;
}

int cmd_train(const Overrides& o) {
  Session s(o);
  const auto dev = s.dev_set();
  const auto split = stage("split", [&] { return split_folds(s.corpus, dev, s.config.fold_size, s.config.split_seed()); });
  std::vector<CandidatePair> train_pairs;
  for (const auto& f : split.folds) train_pairs.insert(train_pairs.end(), f.pairs.begin(), f.pairs.end());
  const auto train_ev = stage("encode", [&] { return embed_pairs(s.pipeline, train_pairs, s.config.head.k); });
  const auto dev_ev = stage("encode", [&] { return embed_pairs(s.pipeline, split.dev.pairs, s.config.head.k); });
  const auto config = s.config.train_config();
  const auto result = stage("train", [&] { return train(train_ev, config, dev_ev); });

  json report = s.header();
  report["train_config"] = to_json(config);
  report["train_pairs"] = train_ev.size();
  report["dev_pairs"] = dev_ev.size();
  report["best_epoch"] = result.best_epoch;
  report["positive_weight"] = result.positive_weight;
  report["train_metrics"] = to_json(evaluate(result.model, train_ev));
  report["dev_metrics"] = dev_ev.empty() ? json(nullptr) : to_json(evaluate(result.model, dev_ev));
  json history = json::array();
  for (const auto& e : result.history)
    history.push_back(
        {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"dev_f1", e.dev_f1 ? json(*e.dev_f1) : json(nullptr)}});
  report["history"] = history;
  stage("output", [&] {
    save_model({result.model, s.encoder_reference()}, s.config.output_dir / "model");
    write_json_file(s.config.output_dir / "train_report.json", report);
  });
  std::cout << fmt::format("trained {} (k={}): best epoch {}, model in {}\n", to_string(config.head.function),
                           config.head.k, result.best_epoch, (s.config.output_dir / "model").string());
  return 0;
}

std::string method_name(const HeadConfig& head) {
  return fmt::format("{} (k={})", to_string(head.function), head.k);
}

int cmd_crossvalidate(const Overrides& o) {
  Session s(o);
  CvOptions options;
  options.dev_doc_ids = s.dev_set();
  options.fold_size = s.config.fold_size;
  options.split_seed = s.config.split_seed();
  // Encoding already uses the worker pool; folds run sequentially.
  options.fold_threads = 1;
  const auto config = s.config.train_config();
  const auto report = stage("crossvalidate", [&] { return cross_validate(s.pipeline, config, options); });

  json body = s.header();
  body.update(to_json(report));
  const std::vector<TableRow> rows = {
      {fmt::format("Heuristic (window={})", report.heuristic_window), report.heuristic_pooled, false},
      {method_name(config.head), report.pooled, report.significant_vs_heuristic},
  };
  const auto tables = fmt::format("{}\n{}", render_method_table(rows), render_distance_table(report.by_distance));
  stage("output", [&] {
    write_json_file(s.config.output_dir / "cv_report.json", body);
    write_text(s.config.output_dir / "tables.md", tables);
    for (std::size_t f = 0; f < report.fold_models.size(); ++f)
      save_model({report.fold_models[f], s.encoder_reference()},
                 s.config.output_dir / fmt::format("fold_{:02d}", f));
  });
  std::cout << tables;
  return 0;
}

int cmd_sweep(const Overrides& o, std::optional<std::size_t> k_min, std::optional<std::size_t> k_max) {
  Session s(o);
  if (k_min) s.config.k_min = *k_min;
  if (k_max) s.config.k_max = *k_max;
  stage("config", [&] {
    s.config.validate();
    save_run_config(s.config, s.config.output_dir / "run_config.json");
  });
  std::vector<std::size_t> ks(s.config.k_max - s.config.k_min + 1);
  std::iota(ks.begin(), ks.end(), s.config.k_min);
  const auto records = stage("sweep", [&] {
    return sweep_k(s.pipeline, s.config.train_config(), s.config.dev_doc_ids, ks, s.config.fold_size,
                   s.config.split_seed());
  });
  json curve = json::array();
  for (const auto& r : records)
    curve.push_back(
        {{"k", r.k}, {"precision", r.metrics.precision}, {"recall", r.metrics.recall}, {"f1", r.metrics.f1}});
  json body = s.header();
  body["head"] = std::string(to_string(s.config.head.function));
  body["curve"] = curve;
  body["records"] = to_json(std::span<const SweepRecord>(records));
  const auto table = render_sweep_table(records);
  stage("output", [&] {
    write_json_file(s.config.output_dir / "sweep.json", body);
    write_text(s.config.output_dir / "sweep.md", table);
  });
  std::cout << table;
  return 0;
}

Metrics metrics_from_json(const json& j) {
  return Metrics::from_counts(j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(),
                              j.at("fn").get<std::size_t>(), j.at("tn").get<std::size_t>());
}

int cmd_report(const std::vector<std::string>& runs, const std::optional<std::string>& out) {
  const auto text = stage("report", [&] {
    std::vector<TableRow> rows;
    std::string distance_tables;
    bool heuristic_added = false;
    for (const auto& run : runs) {
      std::ifstream in(fs::path(run) / "cv_report.json");
      if (!in) throw ParseError(fmt::format("{}: no cv_report.json", run));
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw ParseError(fmt::format("{}/cv_report.json: {}", run, e.what()));
      }
      try {
        if (!heuristic_added) {
          rows.push_back({fmt::format("Heuristic (window={})", j.at("heuristic").at("window").get<std::size_t>()),
                          metrics_from_json(j.at("heuristic").at("pooled")), false});
          heuristic_added = true;
        }
        const auto& h = j.at("train_config").at("head");
        const auto name = fmt::format("{} (k={})", h.at("function").get<std::string>(), h.at("k").get<std::size_t>());
        rows.push_back({name, metrics_from_json(j.at("pooled")), j.at("significant_vs_heuristic").get<bool>()});
        std::array<BucketMetrics, kDistanceBuckets> buckets;
        const auto& b = j.at("by_distance");
        if (b.size() != kDistanceBuckets) throw ParseError(fmt::format("{}: expected {} distance buckets", run, kDistanceBuckets));
        for (std::size_t i = 0; i < kDistanceBuckets; ++i)
          buckets[i] = {b[i].at("distance").get<std::string>(), metrics_from_json(b[i].at("metrics"))};
        distance_tables += fmt::format("\n### {}\n\n{}", name, render_distance_table(buckets));
      } catch (const json::exception& e) {
        throw ParseError(fmt::format("{}/cv_report.json: {}", run, e.what()));
      }
    }
    return fmt::format("## Pooled cross-validation\n\n{}\n## By distance to the nearest context mention\n{}",
                       render_method_table(rows), distance_tables);
  });
  if (out) stage("output", [&] { write_text(*out, text); });
  else std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-context association: segment building, heads, training and evaluation"};
  app.require_subcommand(1);

  auto* stats = app.add_subcommand("stats", "Corpus statistics: distances, n_i distribution, candidate balance");
  std::string stats_corpus;
  std::optional<std::string> stats_out;
  bool stats_entries = false;
  stats->add_option("corpus", stats_corpus, "Corpus directory")->required();
  stats->add_option("-o,--out", stats_out, "Write JSON here instead of stdout");
  stats->add_flag("--entries", stats_entries, "Include per-document n_i entries");

  auto* prepare = app.add_subcommand("prepare", "Convert, validate or synthesize a corpus");
  std::optional<std::string> tsv, validate, prepare_out;
  std::optional<std::size_t> synthetic;
  std::uint64_t prepare_seed = 7;
  prepare->add_option("--tsv", tsv, "Per-article TSV release directory to convert");
  prepare->add_option("--validate", validate, "Corpus directory to validate");
  prepare->add_option("--synthetic", synthetic, "Generate a planted-signal corpus with this many documents");
  prepare->add_option("--seed", prepare_seed, "Seed for --synthetic");
  prepare->add_option("-o,--out", prepare_out, "Output corpus directory");

  Overrides train_o, cv_o, sweep_o;
  auto* train_cmd = app.add_subcommand("train", "Train one head on all non-dev documents");
  train_o.attach(train_cmd);
  auto* cv_cmd = app.add_subcommand("crossvalidate", "Grouped cross-validation with heuristic comparison");
  cv_o.attach(cv_cmd);
  auto* sweep_cmd = app.add_subcommand("sweep", "Retrain and score each k on the dev documents");
  sweep_o.attach(sweep_cmd);
  std::optional<std::size_t> k_min, k_max;
  sweep_cmd->add_option("--k-min", k_min, "Smallest k (default 3)");
  sweep_cmd->add_option("--k-max", k_max, "Largest k (default 10)");

  auto* report = app.add_subcommand("report", "Render markdown tables from crossvalidate outputs");
  std::vector<std::string> runs;
  std::optional<std::string> report_out;
  report->add_option("runs", runs, "Crossvalidate output directories")->required();
  report->add_option("-o,--out", report_out, "Write markdown here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (stats->parsed()) return cmd_stats(stats_corpus, stats_out, stats_entries);
    if (prepare->parsed()) return cmd_prepare(tsv, validate, synthetic, prepare_seed, prepare_out);
    if (train_cmd->parsed()) return cmd_train(train_o);
    if (cv_cmd->parsed()) return cmd_crossvalidate(cv_o);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_o, k_min, k_max);
    if (report->parsed()) return cmd_report(runs, report_out);
  } catch (const StageError& e) {
    std::cerr << fmt::format("error [{}]: {}\n", e.stage, e.what());
    return 1;
  } catch (const std::exception& e) {
    std::cerr << fmt::format("error: {}\n", e.what());
    return 1;
  }
  return 0;
}
