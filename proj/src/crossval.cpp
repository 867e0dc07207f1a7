#include "ctxassoc/crossval.hpp"

#include <algorithm>
#include <random>

#include <fmt/format.h>

#include "ctxassoc/errors.hpp"

namespace ctxassoc {

bool heuristic_baseline(std::size_t nearest_distance, std::size_t window) { return nearest_distance <= window; }

bool heuristic_baseline(const CandidatePair& pair, std::size_t window) {
  return heuristic_baseline(pair.nearest_distance(), window);
}

std::vector<Prediction> heuristic_predictions(std::span<const PairEvidence> pairs, std::size_t window) {
  std::vector<Prediction> out;
  out.reserve(pairs.size());
  for (const auto& ev : pairs) {
    Prediction p;
    p.doc_id = ev.doc_id;
    p.event_id = ev.event_id;
    p.grounding_id = ev.grounding_id;
    p.gold = ev.label;
    p.nearest_distance = ev.nearest_distance;
    p.final_label = heuristic_baseline(ev.nearest_distance, window);
    out.push_back(std::move(p));
  }
  return out;
}

HeuristicChoice choose_heuristic_window(std::span<const PairEvidence> pairs, std::span<const std::size_t> windows) {
  if (windows.empty()) throw ConfigError("heuristic window list is empty");
  std::optional<HeuristicChoice> best;
  for (auto w : windows) {
    const auto m = evaluate_predictions(heuristic_predictions(pairs, w));
    if (!best || m.f1 > best->dev_metrics.f1 || (m.f1 == best->dev_metrics.f1 && w < best->window))
      best = HeuristicChoice{w, m};
  }
  return *best;
}

double significance_test(std::span<const double> scores_a, std::span<const double> scores_b, std::uint64_t seed,
                         std::size_t resamples) {
  if (scores_a.size() != scores_b.size())
    throw DimensionError(fmt::format("{} scores for A but {} for B", scores_a.size(), scores_b.size()));
  if (scores_a.empty()) throw DimensionError("significance test needs at least one fold");
  if (resamples == 0) throw ConfigError("resamples must be positive");
  const auto n = scores_a.size();
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = scores_a[i] - scores_b[i];

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t not_better = 0;
  for (std::size_t r = 0; r < resamples; ++r) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += diff[pick(rng)];
    if (sum <= 0.0) ++not_better;
  }
  return static_cast<double>(not_better) / static_cast<double>(resamples);
}

namespace {

std::vector<PairEvidence> gather(const std::vector<PairEvidence>& all, const std::set<std::string>& docs) {
  std::vector<PairEvidence> out;
  for (const auto& ev : all)
    if (docs.contains(ev.doc_id)) out.push_back(ev);
  return out;
}

}  // namespace

CvReport cross_validate(const EvidencePipeline& pipeline, const TrainConfig& config, const CvOptions& options) {
  config.validate();
  if (!pipeline.corpus) throw ConfigError("evidence pipeline has no corpus");
  const auto& corpus = *pipeline.corpus;
  const auto split = split_folds(corpus, options.dev_doc_ids, options.fold_size, options.split_seed);
  if (split.folds.empty()) throw ValidationError("no documents left for cross-validation after removing dev");

  std::vector<CandidatePair> all_pairs = split.dev.pairs;
  for (const auto& f : split.folds) all_pairs.insert(all_pairs.end(), f.pairs.begin(), f.pairs.end());
  const auto evidence = embed_pairs(pipeline, all_pairs, config.head.k);

  const std::set<std::string> dev_set(split.dev.doc_ids.begin(), split.dev.doc_ids.end());
  const auto dev = gather(evidence, dev_set);

  CvReport report;
  report.train_config = config;
  report.fold_size = options.fold_size;
  report.split_seed = options.split_seed;
  report.dev_doc_ids = split.dev.doc_ids;
  for (const auto& ev : evidence) {
    if (!ev.usable()) ++report.unusable_pairs;
    report.dropped_segments += ev.dropped.size();
  }

  // Heuristic window is tuned on dev when it has labels, else on the pool.
  std::vector<PairEvidence> pool;
  for (const auto& ev : evidence)
    if (!dev_set.contains(ev.doc_id)) pool.push_back(ev);
  const auto heuristic = choose_heuristic_window(dev.empty() ? std::span<const PairEvidence>(pool)
                                                             : std::span<const PairEvidence>(dev),
                                                 options.heuristic_windows);
  report.heuristic_window = heuristic.window;

  const auto n_folds = split.folds.size();
  report.folds.resize(n_folds);
  report.fold_models.resize(n_folds);
  std::vector<std::vector<Prediction>> fold_predictions(n_folds);
  std::vector<std::vector<Prediction>> fold_heuristic(n_folds);

  parallel_for(n_folds, options.fold_threads, [&](std::size_t f) {
    const std::set<std::string> test_docs(split.folds[f].doc_ids.begin(), split.folds[f].doc_ids.end());
    std::vector<PairEvidence> train_set = dev;
    std::vector<PairEvidence> test_set;
    for (const auto& ev : pool) (test_docs.contains(ev.doc_id) ? test_set : train_set).push_back(ev);

    TrainConfig fold_config = config;
    fold_config.seed = config.seed + f;
    auto trained = train(train_set, fold_config, dev);

    auto& result = report.folds[f];
    result.index = f;
    result.test_doc_ids = split.folds[f].doc_ids;
    result.train_pairs = train_set.size();
    result.test_pairs = test_set.size();
    result.best_epoch = trained.best_epoch;
    result.history = trained.history;
    fold_predictions[f] = predict_all(test_set, trained.model);
    result.metrics = fold_predictions[f].empty() ? Metrics{} : evaluate_predictions(fold_predictions[f]);
    fold_heuristic[f] = heuristic_predictions(test_set, heuristic.window);
    result.heuristic_metrics = fold_heuristic[f].empty() ? Metrics{} : evaluate_predictions(fold_heuristic[f]);
    report.fold_models[f] = std::move(trained.model);
  });

  std::vector<double> model_f1, heuristic_f1;
  for (std::size_t f = 0; f < n_folds; ++f) {
    report.pooled += report.folds[f].metrics;
    report.heuristic_pooled += report.folds[f].heuristic_metrics;
    model_f1.push_back(report.folds[f].metrics.f1);
    heuristic_f1.push_back(report.folds[f].heuristic_metrics.f1);
    report.predictions.insert(report.predictions.end(), fold_predictions[f].begin(), fold_predictions[f].end());
  }
  report.by_distance = stratify_by_distance(report.predictions);
  report.p_value_vs_heuristic =
      significance_test(model_f1, heuristic_f1, options.split_seed ^ config.seed, options.bootstrap_resamples);
  report.significant_vs_heuristic = report.p_value_vs_heuristic < options.significance_level;
  if (!options.keep_predictions) report.predictions.clear();
  return report;
}

std::vector<SweepRecord> sweep_k(const EvidencePipeline& pipeline, const TrainConfig& config,
                                 const std::vector<std::string>& dev_doc_ids, std::span<const std::size_t> k_range,
                                 std::size_t fold_size, std::uint64_t split_seed, std::size_t fold_threads) {
  if (k_range.empty()) throw ConfigError("k range is empty");
  for (auto k : k_range)
    if (k < 1 || k > 10) throw ConfigError(fmt::format("k = {} outside the sweep range [1, 10]", k));
  if (!pipeline.corpus) throw ConfigError("evidence pipeline has no corpus");
  if (dev_doc_ids.empty()) throw ConfigError("k sweep needs dev documents");

  const auto folds = partition_documents(*pipeline.corpus, dev_doc_ids, fold_size, split_seed);
  if (folds.size() < 2) throw ConfigError("k sweep needs at least two dev folds; lower fold_size");
  std::vector<CandidatePair> pairs;
  for (const auto& f : folds) pairs.insert(pairs.end(), f.pairs.begin(), f.pairs.end());
  const auto k_max = *std::max_element(k_range.begin(), k_range.end());
  const auto evidence = embed_pairs(pipeline, pairs, k_max);

  std::vector<SweepRecord> records;
  for (auto k : k_range) {
    TrainConfig k_config = config;
    k_config.head.k = k;
    std::vector<Metrics> fold_metrics(folds.size());
    parallel_for(folds.size(), fold_threads, [&](std::size_t f) {
      const std::set<std::string> test_docs(folds[f].doc_ids.begin(), folds[f].doc_ids.end());
      std::vector<PairEvidence> train_set, test_set;
      for (const auto& ev : evidence) (test_docs.contains(ev.doc_id) ? test_set : train_set).push_back(ev);
      TrainConfig fold_config = k_config;
      fold_config.seed = config.seed + f;
      const auto trained = train(train_set, fold_config);
      fold_metrics[f] = evaluate(trained.model, test_set);
    });
    SweepRecord rec{k, {}};
    for (const auto& m : fold_metrics) rec.metrics += m;
    records.push_back(rec);
  }
  return records;
}

}  // namespace ctxassoc
