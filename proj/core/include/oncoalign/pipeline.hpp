// SPDX-License-Identifier: Apache-2.0
//
// End-to-end pipeline: ingest -> prompts -> score -> coldstart -> train-toy
// -> eval -> report. Each stage writes its artifacts under the output
// directory and records content hashes in manifest.json. A stage whose
// inputs, parameters and outputs are unchanged is skipped on re-run.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "oncoalign/embedding.hpp"
#include "oncoalign/eval_report.hpp"
#include "oncoalign/grpo.hpp"
#include "oncoalign/reward.hpp"

namespace oncoalign {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EmptyDataset : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised before any stage runs when an artifact no longer matches the hash
/// its producing stage recorded.
class TamperError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& detail)
      : std::runtime_error(stage + ": " + detail), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

class LockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SplitResult {
  std::vector<std::string> train;
  std::vector<std::string> eval;
};

/// Seeded shuffle, then the first round(ratio * N) ids train. Both sides are
/// kept nonempty when N >= 2. Each side keeps the input order.
SplitResult split_dataset(const std::vector<std::string>& ids, double ratio, std::uint64_t seed);

enum class ProviderKind { Offline, Remote };

struct ProviderSettings {
  ProviderKind kind = ProviderKind::Offline;
  std::string base_url;
  int timeout_ms = 10000;
  int max_retries = 3;
  std::size_t dimension = OfflineEmbeddingProvider::kDefaultDimension;
};

struct PipelineConfig {
  std::optional<std::filesystem::path> dataset;
  std::optional<std::filesystem::path> outputs;         // model outputs for score and eval
  std::optional<std::filesystem::path> embeddings;      // trace embeddings for coldstart
  std::optional<std::filesystem::path> teacher_traces;  // JSONL {id, trace_text}
  std::filesystem::path out_dir = "oncoalign_out";

  double split_ratio = 0.8;
  std::uint64_t seed = 42;
  bool cot_mode = true;
  double lambda_cot = 0.5;
  RewardConfig reward;
  GrpoConfig grpo;
  TrainOptions train;
  std::optional<std::size_t> coldstart_k;  // default_cluster_count when unset
  std::size_t kmeans_max_iters = 100;
  bool unit_normalize = false;
  EvalOptions eval;
  ProviderSettings provider;

  /// Throws ConfigError.
  void validate() const;

  /// Relative paths resolve against base_dir.
  static PipelineConfig from_json(const nlohmann::ordered_json& doc, const std::filesystem::path& base_dir = {});
  /// Parameters only (no paths), in a fixed key order.
  nlohmann::ordered_json parameters_json() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

struct CliOverrides {
  std::optional<std::filesystem::path> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::filesystem::path> dataset;
  std::optional<std::filesystem::path> outputs;
  std::optional<std::filesystem::path> embeddings;
};

/// Config file (--config, else ONCOALIGN_CONFIG), then environment
/// (ONCOALIGN_EMBED_URL, ONCOALIGN_SEED, ONCOALIGN_OUT), then CLI flags.
PipelineConfig resolve_config(const CliOverrides& cli, const EnvLookup& env = process_env());

std::unique_ptr<EmbeddingProvider> make_provider(const ProviderSettings& settings);

inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"ingest", "prompts", "score", "coldstart", "train-toy", "eval", "report"};
  return names;
}

enum class StageStatus { Ran, Skipped };

struct StageOutcome {
  std::string stage;
  StageStatus status = StageStatus::Ran;
  std::vector<std::string> artifacts;
};

struct PipelineResult {
  std::vector<StageOutcome> stages;
  bool all_skipped() const;
};

struct RunOptions {
  std::vector<std::string> stages;  // empty = all, in pipeline order
  bool force = false;               // re-run stages even when up to date
};

/// Preflight (config, inputs, lock, manifest hashes), then the requested
/// stages in pipeline order. Throws ConfigError, TamperError, LockError or
/// StageError.
PipelineResult run_pipeline(const PipelineConfig& config, const RunOptions& options = {},
                            EmbeddingProvider* provider = nullptr);

/// Toy GRPO run as performed by the train-toy stage.
TrainResult run_toy_training(const GrpoConfig& grpo, const TrainOptions& train, const StepCallback& on_step = {});

nlohmann::ordered_json train_record_json(const TrainLogRecord& rec);

}  // namespace oncoalign
