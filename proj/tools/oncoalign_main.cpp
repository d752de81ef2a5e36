// SPDX-License-Identifier: Apache-2.0
//
// oncoalign: command-line front end for the survival-prediction alignment
// pipeline.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "oncoalign/eval_report.hpp"
#include "oncoalign/jsonl.hpp"
#include "oncoalign/pipeline.hpp"

namespace fs = std::filesystem;
using namespace oncoalign;

namespace {

enum ExitCode : int { kOk = 0, kUsage = 1, kConfig = 2, kTamper = 3, kStage = 4, kLocked = 5 };

struct Globals {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> dataset;
  std::optional<std::string> outputs;
  std::optional<std::string> embeddings;
  bool force = false;
};

struct TrainFlags {
  std::optional<std::size_t> group_size;
  std::optional<double> clip_epsilon;
  std::optional<double> kl_coeff;
  std::optional<std::size_t> steps;
  std::optional<std::uint64_t> seed;
  std::optional<double> learning_rate;
  std::optional<std::string> log;
};

struct EvalFlags {
  std::optional<std::string> input;
  std::string report = "eval_report.json";
  std::string csv = "eval_samples.csv";
  std::optional<double> rescale_baseline;
};

struct EmbedFlags {
  std::string input;
  std::string output;
};

PipelineConfig resolve(const Globals& g) {
  CliOverrides cli;
  if (g.config) cli.config_path = *g.config;
  cli.seed = g.seed;
  if (g.out) cli.out_dir = *g.out;
  if (g.dataset) cli.dataset = *g.dataset;
  if (g.outputs) cli.outputs = *g.outputs;
  if (g.embeddings) cli.embeddings = *g.embeddings;
  return resolve_config(cli);
}

int run_stages(const PipelineConfig& cfg, std::vector<std::string> stages, bool force) {
  RunOptions opts;
  opts.stages = std::move(stages);
  opts.force = force;
  const auto result = run_pipeline(cfg, opts);
  for (const auto& s : result.stages) {
    std::cout << s.stage << ": " << (s.status == StageStatus::Ran ? "ran" : "skipped (up to date)") << "\n";
  }
  return kOk;
}

int standalone_eval(const PipelineConfig& cfg, const EvalFlags& flags) {
  const auto samples = load_eval_samples(*flags.input);
  auto base = make_provider(cfg.provider);
  MemoizingProvider provider(*base);
  EvalOptions opts = cfg.eval;
  opts.profile = cfg.reward.schema_profile;
  if (flags.rescale_baseline) opts.rescale_baseline = flags.rescale_baseline;
  const auto report = build_report(samples, provider, opts);
  write_json(flags.report, report_to_json(report));
  write_text(flags.csv, samples_csv(report));
  std::cout << "evaluated " << report.n_samples << " samples (" << report.n_missing << " missing predictions)\n";
  return kOk;
}

int embed_file(const PipelineConfig& cfg, const EmbedFlags& flags) {
  const auto rows = read_jsonl(flags.input);
  EmbeddingRequest req;
  std::vector<ojson> ids;
  for (const auto& row : rows) {
    if (!row.contains("id") || !row.contains("text") || !row["text"].is_string()) {
      throw std::invalid_argument(flags.input + ": rows need \"id\" and \"text\"");
    }
    ids.push_back(row["id"]);
    req.texts.push_back(row["text"].get<std::string>());
  }
  auto provider = make_provider(cfg.provider);
  const auto resp = provider->embed(req);
  check_response(resp, req.texts.size());
  std::vector<ojson> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ojson r;
    r["id"] = ids[i];
    r["vector"] = resp.vectors[i];
    out.push_back(std::move(r));
  }
  write_jsonl(flags.output, out);
  std::cout << "embedded " << out.size() << " texts with " << resp.provider_id << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oncoalign: survival-prediction alignment pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "JSON config file (default: $ONCOALIGN_CONFIG)");
  app.add_option("--seed", g.seed, "Random seed (overrides config and $ONCOALIGN_SEED)");
  app.add_option("--out", g.out, "Output directory (overrides config and $ONCOALIGN_OUT)");
  app.add_option("--dataset", g.dataset, "Patient records JSONL");
  app.add_option("--outputs", g.outputs, "Model outputs JSONL");
  app.add_option("--embeddings", g.embeddings, "Trace embeddings JSONL");
  app.add_flag("--force", g.force, "Re-run stages even when up to date");

  std::string selected;
  auto stage_cmd = [&](const std::string& name, const std::string& help) {
    auto* sub = app.add_subcommand(name, help);
    sub->callback([&selected, name] { selected = name; });
    return sub;
  };
  stage_cmd("ingest", "Load records and write the train/eval split");
  stage_cmd("prompts", "Build summaries, prompts and training pairs");
  stage_cmd("score", "Score model outputs with the reward function");
  stage_cmd("coldstart", "Cluster trace embeddings and select exemplars");
  auto* train = stage_cmd("train-toy", "Run toy GRPO on the formatted-answer environment");
  auto* eval = stage_cmd("eval", "Evaluate model outputs on the held-out split");
  stage_cmd("report", "Summarise all stage artifacts");
  stage_cmd("run", "Run every stage in order");
  auto* embed = stage_cmd("embed", "Embed texts from a JSONL file {id, text}");

  TrainFlags tf;
  train->add_option("--group-size", tf.group_size, "Outputs per group (G)");
  train->add_option("--clip-epsilon", tf.clip_epsilon, "Clipping epsilon");
  train->add_option("--kl-coeff", tf.kl_coeff, "KL penalty coefficient (beta)");
  train->add_option("--steps", tf.steps, "Training steps");
  train->add_option("--seed", tf.seed, "Random seed");
  train->add_option("--lr", tf.learning_rate, "Adam learning rate");
  train->add_option("--log", tf.log, "Also write the training log JSONL here");

  EvalFlags ef;
  eval->add_option("--input", ef.input, "Evaluate this JSONL directly instead of the pipeline outputs");
  eval->add_option("--report", ef.report, "Report JSON path (with --input)");
  eval->add_option("--csv", ef.csv, "Per-sample CSV path (with --input)");
  eval->add_option("--rescale-baseline", ef.rescale_baseline, "Baseline b for (F1 - b) / (1 - b)");

  EmbedFlags mf;
  embed->add_option("--input", mf.input, "JSONL rows {id, text}")->required();
  embed->add_option("--output", mf.output, "JSONL rows {id, vector}")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = resolve(g);
    if (selected == "run") return run_stages(cfg, {}, g.force);
    if (selected == "embed") return embed_file(cfg, mf);
    if (selected == "eval" && ef.input) return standalone_eval(cfg, ef);
    if (selected == "eval" && ef.rescale_baseline) cfg.eval.rescale_baseline = ef.rescale_baseline;
    if (selected == "train-toy") {
      if (tf.group_size) cfg.grpo.group_size = *tf.group_size;
      if (tf.clip_epsilon) cfg.grpo.clip_epsilon = *tf.clip_epsilon;
      if (tf.kl_coeff) cfg.grpo.kl_coeff = *tf.kl_coeff;
      if (tf.steps) cfg.train.steps = *tf.steps;
      if (tf.seed) cfg.seed = *tf.seed;
      if (tf.learning_rate) cfg.train.learning_rate = *tf.learning_rate;
      cfg.validate();
      const int rc = run_stages(cfg, {selected}, g.force);
      if (tf.log) fs::copy_file(cfg.out_dir / "train_log.jsonl", *tf.log, fs::copy_options::overwrite_existing);
      return rc;
    }
    return run_stages(cfg, {selected}, g.force);
  } catch (const TamperError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kTamper;
  } catch (const StageError& e) {
    std::cerr << "error: stage " << e.what() << "\n";
    return kStage;
  } catch (const LockError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kLocked;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
}
