// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <map>
#include <set>

#include <unistd.h>

#include "generators.hpp"
#include "oncoalign/jsonl.hpp"
#include "oncoalign/pipeline.hpp"

using namespace oncoalign;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("oncoalign-test-" + tag + "-" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

PipelineConfig fixture_config(const fs::path& out) {
  CliOverrides cli;
  cli.config_path = gen::fixture_dir() / "pipeline" / "config.json";
  cli.out_dir = out;
  return resolve_config(cli, [](const std::string&) { return std::nullopt; });
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_text(e.path());
  }
  return out;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("split sizes, disjointness and determinism") {
    std::vector<std::string> ids;
    for (int i = 0; i < 10; ++i) ids.push_back("P-" + std::to_string(i));
    const auto s = split_dataset(ids, 0.8, 42);
    CHECK(s.train.size() == 8);
    CHECK(s.eval.size() == 2);
    std::set<std::string> all(s.train.begin(), s.train.end());
    all.insert(s.eval.begin(), s.eval.end());
    CHECK(all.size() == 10);
    const auto again = split_dataset(ids, 0.8, 42);
    CHECK(again.train == s.train);
    CHECK(again.eval == s.eval);
    CHECK(split_dataset(ids, 0.99, 1).eval.size() == 1);
    CHECK(split_dataset(ids, 0.01, 1).train.size() == 1);
    CHECK_THROWS_AS(split_dataset({}, 0.8, 1), EmptyDataset);

    std::vector<std::string> big;
    for (int i = 0; i < 24950; ++i) big.push_back(std::to_string(i));
    const auto b = split_dataset(big, 0.8, 42);
    CHECK(b.train.size() == 19960);
    CHECK(b.eval.size() == 4990);
  }

  TEST_CASE("full run, re-run skip and byte-identical outputs") {
    TempDir a("a"), b("b");
    const auto cfg_a = fixture_config(a.path);
    const auto first = run_pipeline(cfg_a);
    REQUIRE(first.stages.size() == stage_names().size());
    for (const auto& s : first.stages) CHECK(s.status == StageStatus::Ran);
    for (const auto* name : {"records.jsonl", "split.json", "prompts.jsonl", "training_pairs.jsonl", "scores.jsonl",
                             "coldstart.jsonl", "train_log.jsonl", "eval_report.json", "eval_samples.csv",
                             "report.json", "manifest.json"}) {
      CHECK_MESSAGE(fs::exists(a.path / name), name);
    }
    const auto manifest = read_json(a.path / "manifest.json");
    CHECK(manifest["stages"].size() == stage_names().size());
    CHECK_FALSE(fs::exists(a.path / ".oncoalign.lock"));

    const auto second = run_pipeline(cfg_a);
    CHECK(second.all_skipped());

    const auto report = read_json(a.path / "eval_report.json");
    CHECK(report["n_samples"].get<int>() == 2);

    run_pipeline(fixture_config(b.path));
    CHECK(tree(a.path) == tree(b.path));
  }

  TEST_CASE("missing input fails before any stage runs") {
    TempDir d("missing");
    auto cfg = fixture_config(d.path);
    cfg.embeddings = d.path / "nope.jsonl";
    CHECK_THROWS_AS(run_pipeline(cfg), ConfigError);
    CHECK_FALSE(fs::exists(d.path / "records.jsonl"));
  }

  TEST_CASE("tampered artifacts and held locks") {
    TempDir d("tamper");
    const auto cfg = fixture_config(d.path);
    run_pipeline(cfg);
    {
      std::ofstream f(d.path / "records.jsonl", std::ios::app);
      f << "\n";
    }
    RunOptions only_score;
    only_score.stages = {"score"};
    CHECK_THROWS_AS(run_pipeline(cfg, only_score), TamperError);
    RunOptions with_ingest;
    with_ingest.stages = {"ingest", "score"};
    CHECK_NOTHROW(run_pipeline(cfg, with_ingest));

    { std::ofstream lock(d.path / ".oncoalign.lock"); }
    CHECK_THROWS_AS(run_pipeline(cfg), LockError);
    fs::remove(d.path / ".oncoalign.lock");
    CHECK(run_pipeline(cfg).stages.size() == stage_names().size());
  }

  TEST_CASE("parameter changes re-run the affected stages") {
    TempDir d("params");
    auto cfg = fixture_config(d.path);
    run_pipeline(cfg);
    cfg.train.steps = 50;
    const auto r = run_pipeline(cfg);
    std::map<std::string, StageStatus> by_name;
    for (const auto& s : r.stages) by_name[s.stage] = s.status;
    CHECK(by_name["train-toy"] == StageStatus::Ran);
    CHECK(by_name["ingest"] == StageStatus::Skipped);
  }

  TEST_CASE("config precedence: file < environment < flags") {
    const auto cfg_path = gen::fixture_dir() / "pipeline" / "config.json";
    std::map<std::string, std::string> env_vars{{"ONCOALIGN_SEED", "7"}, {"ONCOALIGN_OUT", "/tmp/env-out"}};
    const EnvLookup env = [&](const std::string& k) -> std::optional<std::string> {
      const auto it = env_vars.find(k);
      if (it == env_vars.end()) return std::nullopt;
      return it->second;
    };
    CliOverrides cli;
    cli.config_path = cfg_path;
    auto cfg = resolve_config(cli, env);
    CHECK(cfg.seed == 7);
    CHECK(cfg.out_dir == "/tmp/env-out");
    CHECK(cfg.dataset == cfg_path.parent_path() / "records.jsonl");
    cli.seed = 9;
    cli.out_dir = "/tmp/cli-out";
    cfg = resolve_config(cli, env);
    CHECK(cfg.seed == 9);
    CHECK(cfg.out_dir == "/tmp/cli-out");
    env_vars.clear();
    cli = {};
    cli.config_path = cfg_path;
    CHECK(resolve_config(cli, env).seed == 42);

    env_vars["ONCOALIGN_SEED"] = "forty-two";
    CHECK_THROWS_AS(resolve_config(cli, env), ConfigError);
    cli.config_path = cfg_path.parent_path() / "absent.json";
    env_vars.clear();
    CHECK_THROWS_AS(resolve_config(cli, env), ConfigError);
  }

  TEST_CASE("config validation") {
    auto doc = read_json(gen::fixture_dir() / "pipeline" / "config.json");
    doc["split_ratio"] = 1.5;
    CHECK_THROWS_AS(PipelineConfig::from_json(doc, gen::fixture_dir() / "pipeline").validate(), ConfigError);
    doc["split_ratio"] = 0.8;
    doc["grpo"]["group_size"] = 1;
    CHECK_THROWS_AS(PipelineConfig::from_json(doc, gen::fixture_dir() / "pipeline").validate(), ConfigError);
  }
}
