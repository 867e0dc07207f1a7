#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <sys/wait.h>

#include "test_support.hpp"

using nlohmann::json;
using namespace test_support;

namespace {

const std::filesystem::path kCli = CTXASSOC_CLI_PATH;

struct RunResult {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run(const std::string& args, const TempDir& scratch) {
  const auto out = scratch.path() / "stdout.txt";
  const auto err = scratch.path() / "stderr.txt";
  const auto cmd = fmt::format("'{}' {} > '{}' 2> '{}'", kCli.string(), args, out.string(), err.string());
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("stats on the fixture corpus") {
    TempDir dir("cli-stats");
    const auto r = run(fmt::format("stats '{}'", (kFixtures / "mini_corpus").string()), dir);
    REQUIRE(r.status == 0);
    const auto j = json::parse(r.out);
    CHECK(j["totals"]["documents"] == 2);
    CHECK(j["totals"]["event_mentions"] == 3);
    CHECK(j["totals"]["context_mentions"] == 6);
    CHECK(j["totals"]["annotations"] == 4);
    CHECK(j["dev_totals"]["documents"] == 1);
    CHECK(j["candidates"]["pairs"] == 5);
    CHECK(j["candidates"]["positive"] == 4);
    CHECK(j["candidates"]["negative"] == 1);
    CHECK(j["inter_sentence"]["count"] == 3);
    CHECK(j["inter_sentence"]["mean"].get<double>() == doctest::Approx(4.0 / 3.0));
    CHECK(j["inter_sentence"]["median"].get<double>() == doctest::Approx(1.0));
    CHECK(j["inter_sentence"]["max"] == 2);
    CHECK(j["inter_sentence"]["histogram"]["1"] == 2);
    CHECK(j["inter_sentence"]["histogram"]["2"] == 1);
    CHECK(j["detections_per_type"]["distribution"]["1"] == 1);
    CHECK(j["detections_per_type"]["distribution"]["2"] == 1);
    CHECK(j["detections_per_type"]["distribution"]["3"] == 1);
    CHECK(j["detections_per_type"]["fraction_two_or_more"].get<double>() == doctest::Approx(2.0 / 3.0));
  }

  TEST_CASE("bad inputs exit non-zero with a stage name") {
    TempDir dir("cli-bad");
    std::filesystem::create_directories(dir.path() / "empty");
    const auto empty = run(fmt::format("stats '{}'", (dir.path() / "empty").string()), dir);
    CHECK(empty.status != 0);
    CHECK(empty.err.find("error [") != std::string::npos);
    const auto missing = run(fmt::format("crossvalidate --corpus '{}' -o '{}'", (dir.path() / "nope").string(),
                                         (dir.path() / "out").string()),
                             dir);
    CHECK(missing.status != 0);
    CHECK(missing.err.find("load corpus") != std::string::npos);
    CHECK(run("stats", dir).status != 0);
  }

  TEST_CASE("synthetic corpus, cross-validation determinism and sweep") {
    TempDir dir("cli-cv");
    const auto corpus = dir.path() / "corpus";
    REQUIRE(run(fmt::format("prepare --synthetic 18 --seed 3 -o '{}'", corpus.string()), dir).status == 0);
    CHECK(run(fmt::format("prepare --validate '{}'", corpus.string()), dir).status == 0);

    const auto common = fmt::format("--corpus '{}' --max-len 128 --epochs 3 --head majority -k 3", corpus.string());
    const auto a = dir.path() / "a";
    const auto b = dir.path() / "b";
    REQUIRE(run(fmt::format("crossvalidate {} -o '{}' -j 2", common, a.string()), dir).status == 0);
    REQUIRE(run(fmt::format("crossvalidate {} -o '{}' -j 1", common, b.string()), dir).status == 0);
    CHECK(slurp(a / "cv_report.json") == slurp(b / "cv_report.json"));
    const auto report = json::parse(slurp(a / "cv_report.json"));
    CHECK(report.contains("config_fingerprint"));
    CHECK(std::filesystem::exists(a / "tables.md"));
    CHECK(std::filesystem::exists(a / "run_config.json"));

    const auto rendered = run(fmt::format("report '{}' '{}'", a.string(), b.string()), dir);
    CHECK(rendered.status == 0);
    CHECK(rendered.out.find("| Method") != std::string::npos);

    const auto s = dir.path() / "sweep";
    REQUIRE(run(fmt::format("sweep {} --k-min 3 --k-max 5 --fold-size 3 -o '{}'", common, s.string()), dir).status ==
            0);
    const auto sweep = json::parse(slurp(s / "sweep.json"));
    REQUIRE(sweep["curve"].size() == 3);
    std::size_t k = 3;
    for (const auto& rec : sweep["curve"]) {
      CHECK(rec.size() == 4);
      CHECK(rec["k"] == k++);
      for (const char* key : {"precision", "recall", "f1"}) {
        REQUIRE(rec.contains(key));
        CHECK(rec[key].get<double>() >= 0.0);
        CHECK(rec[key].get<double>() <= 1.0);
      }
    }
  }

  TEST_CASE("flags override the configuration file") {
    TempDir dir("cli-config");
    const auto corpus = dir.path() / "corpus";
    REQUIRE(run(fmt::format("prepare --synthetic 12 -o '{}'", corpus.string()), dir).status == 0);
    {
      std::ofstream cfg(dir.path() / "run.json");
      cfg << json{{"corpus_path", corpus.string()}, {"epochs", 2}, {"max_len", 96},
                  {"head", {{"function", "average"}, {"k", 4}}}}
                 .dump();
    }
    const auto out = dir.path() / "train";
    REQUIRE(run(fmt::format("train -c '{}' -k 2 -o '{}'", (dir.path() / "run.json").string(), out.string()), dir)
                .status == 0);
    const auto saved = json::parse(slurp(out / "run_config.json"));
    CHECK(saved["head"]["k"] == 2);
    CHECK(saved["head"]["function"] == "average");
    CHECK(saved["epochs"] == 2);
    CHECK(saved["max_len"] == 96);
    CHECK(saved["batch_size"] == 16);
    CHECK(std::filesystem::exists(out / "model" / "manifest.json"));
  }
}
