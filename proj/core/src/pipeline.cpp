// SPDX-License-Identifier: Apache-2.0

#include "oncoalign/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>

#include "oncoalign/clinical_records.hpp"
#include "oncoalign/coldstart.hpp"
#include "oncoalign/jsonl.hpp"
#include "oncoalign/random.hpp"
#include "oncoalign/text_util.hpp"
#include "oncoalign/toy_env.hpp"

namespace oncoalign {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Split

SplitResult split_dataset(const std::vector<std::string>& ids, double ratio, std::uint64_t seed) {
  if (ids.empty()) throw EmptyDataset("cannot split an empty dataset");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must be in (0, 1)");
  const std::size_t n = ids.size();
  auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  if (n >= 2) n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  shuffle(rng, order);
  std::vector<bool> in_train(n, false);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = true;

  SplitResult out;
  for (std::size_t i = 0; i < n; ++i) (in_train[i] ? out.train : out.eval).push_back(ids[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::string_view granularity_name(RatioGranularity g) {
  return g == RatioGranularity::SequenceLevel ? "sequence" : "token";
}

RatioGranularity parse_granularity(const std::string& s) {
  const auto k = normalize_key(s);
  if (k == "sequence" || k == "sequencelevel") return RatioGranularity::SequenceLevel;
  if (k == "token" || k == "tokenlevel") return RatioGranularity::TokenLevel;
  throw ConfigError("unknown ratio granularity " + s);
}

template <typename T>
void read_if(const ojson& obj, const char* key, T& out) {
  if (!obj.contains(key) || obj[key].is_null()) return;
  try {
    out = obj[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config field ") + key + " has the wrong type");
  }
}

void read_path(const ojson& obj, const char* key, const fs::path& base, std::optional<fs::path>& out) {
  if (!obj.contains(key) || obj[key].is_null()) return;
  if (!obj[key].is_string()) throw ConfigError(std::string("path ") + key + " must be a string");
  fs::path p = obj[key].get<std::string>();
  out = (p.is_relative() && !base.empty()) ? base / p : p;
}

ojson section(const ojson& doc, const char* key) {
  if (!doc.contains(key) || doc[key].is_null()) return ojson::object();
  if (!doc[key].is_object()) throw ConfigError(std::string("config section ") + key + " must be an object");
  return doc[key];
}

}  // namespace

void PipelineConfig::validate() const {
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("split_ratio must be in (0, 1)");
  if (!(lambda_cot >= 0.0) || !std::isfinite(lambda_cot)) throw ConfigError("lambda_cot must be >= 0");
  if (!(reward.months_tolerance >= 0.0)) throw ConfigError("months_tolerance must be >= 0");
  try {
    grpo.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (train.inner_updates == 0 || train.old_refresh_every == 0) throw ConfigError("train update counts must be >= 1");
  if (!(train.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (coldstart_k && *coldstart_k == 0) throw ConfigError("coldstart k must be >= 1");
  if (eval.rescale_baseline && !(*eval.rescale_baseline < 1.0)) throw ConfigError("rescale_baseline must be < 1");
  if (provider.kind == ProviderKind::Remote && provider.base_url.empty()) {
    throw ConfigError("remote embedding provider needs a base_url");
  }
  if (provider.dimension == 0) throw ConfigError("embedding dimension must be positive");
}

PipelineConfig PipelineConfig::from_json(const ojson& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  PipelineConfig c;
  const auto paths = section(doc, "paths");
  read_path(paths, "dataset", base_dir, c.dataset);
  read_path(paths, "outputs", base_dir, c.outputs);
  read_path(paths, "embeddings", base_dir, c.embeddings);
  read_path(paths, "teacher_traces", base_dir, c.teacher_traces);
  std::optional<fs::path> out;
  read_path(paths, "out_dir", base_dir, out);
  if (out) c.out_dir = *out;

  read_if(doc, "split_ratio", c.split_ratio);
  read_if(doc, "seed", c.seed);
  read_if(doc, "cot_mode", c.cot_mode);
  read_if(doc, "lambda_cot", c.lambda_cot);

  const auto reward = section(doc, "reward");
  read_if(reward, "months_tolerance", c.reward.months_tolerance);
  if (reward.contains("integer_policy")) {
    const auto p = parse_integer_policy(reward["integer_policy"].get<std::string>());
    if (!p) throw ConfigError("unknown integer_policy");
    c.reward.integer_policy = *p;
  }
  if (reward.contains("schema_profile")) {
    const auto p = parse_profile(reward["schema_profile"].get<std::string>());
    if (!p) throw ConfigError("unknown schema_profile");
    c.reward.schema_profile = *p;
  }
  c.eval.profile = c.reward.schema_profile;

  const auto grpo = section(doc, "grpo");
  read_if(grpo, "group_size", c.grpo.group_size);
  read_if(grpo, "clip_epsilon", c.grpo.clip_epsilon);
  read_if(grpo, "kl_coeff", c.grpo.kl_coeff);
  read_if(grpo, "std_guard", c.grpo.std_guard);
  read_if(grpo, "max_ratio", c.grpo.max_ratio);
  if (grpo.contains("ratio_granularity")) {
    c.grpo.ratio_granularity = parse_granularity(grpo["ratio_granularity"].get<std::string>());
  }

  const auto train = section(doc, "train");
  read_if(train, "steps", c.train.steps);
  read_if(train, "learning_rate", c.train.learning_rate);
  read_if(train, "inner_updates", c.train.inner_updates);
  read_if(train, "old_refresh_every", c.train.old_refresh_every);
  read_if(train, "ref_refresh_every", c.train.ref_refresh_every);
  read_if(train, "reward_window", c.train.reward_window);
  if (train.contains("stop_at_reward") && !train["stop_at_reward"].is_null()) {
    c.train.stop_at_reward = train["stop_at_reward"].get<double>();
  }

  const auto cold = section(doc, "coldstart");
  if (cold.contains("k") && !cold["k"].is_null()) c.coldstart_k = cold["k"].get<std::size_t>();
  read_if(cold, "max_iters", c.kmeans_max_iters);
  read_if(cold, "unit_normalize", c.unit_normalize);

  const auto ev = section(doc, "eval");
  if (ev.contains("rescale_baseline") && !ev["rescale_baseline"].is_null()) {
    c.eval.rescale_baseline = ev["rescale_baseline"].get<double>();
  }

  const auto prov = section(doc, "provider");
  if (prov.contains("kind")) {
    const auto k = normalize_key(prov["kind"].get<std::string>());
    if (k == "offline") c.provider.kind = ProviderKind::Offline;
    else if (k == "remote") c.provider.kind = ProviderKind::Remote;
    else throw ConfigError("provider kind must be offline or remote");
  }
  read_if(prov, "base_url", c.provider.base_url);
  read_if(prov, "timeout_ms", c.provider.timeout_ms);
  read_if(prov, "max_retries", c.provider.max_retries);
  read_if(prov, "dimension", c.provider.dimension);
  return c;
}

ojson PipelineConfig::parameters_json() const {
  ojson j;
  j["split_ratio"] = split_ratio;
  j["seed"] = seed;
  j["cot_mode"] = cot_mode;
  j["lambda_cot"] = lambda_cot;
  j["reward"] = {{"months_tolerance", reward.months_tolerance},
                 {"integer_policy", std::string(integer_policy_name(reward.integer_policy))},
                 {"schema_profile", std::string(profile_name(reward.schema_profile))}};
  j["grpo"] = {{"group_size", grpo.group_size},
               {"clip_epsilon", grpo.clip_epsilon},
               {"kl_coeff", grpo.kl_coeff},
               {"std_guard", grpo.std_guard},
               {"max_ratio", grpo.max_ratio},
               {"ratio_granularity", std::string(granularity_name(grpo.ratio_granularity))}};
  j["train"] = {{"steps", train.steps},
                {"learning_rate", train.learning_rate},
                {"inner_updates", train.inner_updates},
                {"old_refresh_every", train.old_refresh_every},
                {"ref_refresh_every", train.ref_refresh_every},
                {"reward_window", train.reward_window},
                {"stop_at_reward", train.stop_at_reward ? ojson(*train.stop_at_reward) : ojson(nullptr)}};
  j["coldstart"] = {{"k", coldstart_k ? ojson(*coldstart_k) : ojson(nullptr)},
                    {"max_iters", kmeans_max_iters},
                    {"unit_normalize", unit_normalize}};
  j["eval"] = {{"rescale_baseline", eval.rescale_baseline ? ojson(*eval.rescale_baseline) : ojson(nullptr)}};
  j["provider"] = {{"kind", provider.kind == ProviderKind::Offline ? "offline" : "remote"},
                   {"base_url", provider.base_url},
                   {"dimension", provider.dimension}};
  return j;
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
}

PipelineConfig resolve_config(const CliOverrides& cli, const EnvLookup& env) {
  std::optional<fs::path> config_path = cli.config_path;
  if (!config_path) {
    if (auto p = env("ONCOALIGN_CONFIG")) config_path = fs::path(*p);
  }
  PipelineConfig cfg;
  if (config_path) {
    if (!fs::exists(*config_path)) throw ConfigError("config file not found: " + config_path->string());
    try {
      cfg = PipelineConfig::from_json(read_json(*config_path), config_path->parent_path());
    } catch (const JsonlError& e) {
      throw ConfigError(e.what());
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }

  if (auto url = env("ONCOALIGN_EMBED_URL")) {
    cfg.provider.kind = ProviderKind::Remote;
    cfg.provider.base_url = *url;
  }
  if (auto seed = env("ONCOALIGN_SEED")) {
    try {
      cfg.seed = std::stoull(*seed);
    } catch (const std::exception&) {
      throw ConfigError("ONCOALIGN_SEED is not an integer: " + *seed);
    }
  }
  if (auto out = env("ONCOALIGN_OUT")) cfg.out_dir = *out;

  if (cli.seed) cfg.seed = *cli.seed;
  if (cli.out_dir) cfg.out_dir = *cli.out_dir;
  if (cli.dataset) cfg.dataset = *cli.dataset;
  if (cli.outputs) cfg.outputs = *cli.outputs;
  if (cli.embeddings) cfg.embeddings = *cli.embeddings;
  cfg.validate();
  return cfg;
}

std::unique_ptr<EmbeddingProvider> make_provider(const ProviderSettings& s) {
  if (s.kind == ProviderKind::Offline) return std::make_unique<OfflineEmbeddingProvider>(s.dimension);
  RemoteEmbeddingConfig rc;
  rc.base_url = s.base_url;
  rc.timeout_ms = s.timeout_ms;
  rc.max_retries = s.max_retries;
  return std::make_unique<RemoteEmbeddingProvider>(rc);
}

// ---------------------------------------------------------------------------
// Toy training

TrainResult run_toy_training(const GrpoConfig& grpo, const TrainOptions& train, const StepCallback& on_step) {
  const FormattedAnswerEnv env;
  return train_toy_policy(env, env.initial_policy(), grpo, train, on_step);
}

ojson train_record_json(const TrainLogRecord& rec) {
  ojson j;
  j["step"] = rec.step;
  j["mean_reward"] = rec.mean_reward;
  j["objective"] = rec.objective;
  j["grad_norm"] = rec.grad_norm;
  j["mean_kl"] = rec.mean_kl;
  return j;
}

bool PipelineResult::all_skipped() const {
  return std::all_of(stages.begin(), stages.end(), [](const auto& s) { return s.status == StageStatus::Skipped; });
}

// ---------------------------------------------------------------------------
// Stages

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kLock = ".oncoalign.lock";

struct Input {
  std::string key;  // manifest key: logical name for external files, file name for artifacts
  fs::path path;
  std::optional<std::string> producer;  // set for artifacts
};

struct Stage {
  std::string name;
  std::vector<Input> inputs;
  std::vector<std::string> outputs;
  ojson params;
};

const std::map<std::string, std::vector<std::string>>& stage_outputs() {
  static const std::map<std::string, std::vector<std::string>> m{
      {"ingest", {"records.jsonl", "split.json"}},
      {"prompts", {"prompts.jsonl", "training_pairs.jsonl"}},
      {"score", {"scores.jsonl"}},
      {"coldstart", {"coldstart.jsonl", "coldstart_summary.json"}},
      {"train-toy", {"train_log.jsonl", "train_summary.json"}},
      {"eval", {"eval_inputs.jsonl", "eval_report.json", "eval_samples.csv"}},
      {"report", {"report.json"}},
  };
  return m;
}

class LockFile {
 public:
  explicit LockFile(fs::path path) : path_(std::move(path)) {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) throw LockError("output directory is locked by another run (" + path_.string() + ")");
  }
  ~LockFile() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }
  LockFile(const LockFile&) = delete;
  LockFile& operator=(const LockFile&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

class Runner {
 public:
  Runner(const PipelineConfig& cfg, const RunOptions& opts, EmbeddingProvider* provider)
      : cfg_(cfg), opts_(opts), provider_(provider), out_(cfg.out_dir) {}

  PipelineResult run() {
    cfg_.validate();
    select_stages();
    check_external_inputs(plan());

    fs::create_directories(out_);
    LockFile lock(out_ / kLock);
    load_manifest();
    check_artifacts(plan());

    PipelineResult result;
    for (const auto& name : requested_) {
      const Stage stage = make_stage(name);  // rebuilt: inputs may have just changed
      StageOutcome outcome{name, StageStatus::Skipped, stage.outputs};
      const auto input_hashes = hash_inputs(stage);
      const auto params_hash = sha256_hex(stage.params.dump());
      if (opts_.force || !up_to_date(stage, input_hashes, params_hash)) {
        try {
          execute(name);
        } catch (const StageError&) {
          throw;
        } catch (const std::exception& e) {
          throw StageError(name, e.what());
        }
        record(stage, input_hashes, params_hash);
        outcome.status = StageStatus::Ran;
      }
      result.stages.push_back(std::move(outcome));
    }
    return result;
  }

 private:
  void select_stages() {
    const auto& all = stage_names();
    std::set<std::string> wanted(opts_.stages.begin(), opts_.stages.end());
    for (const auto& s : wanted) {
      if (std::find(all.begin(), all.end(), s) == all.end()) throw ConfigError("unknown stage " + s);
    }
    for (const auto& s : all) {
      if (wanted.empty() || wanted.contains(s)) requested_.push_back(s);
    }
  }

  bool requested(const std::string& s) const {
    return std::find(requested_.begin(), requested_.end(), s) != requested_.end();
  }

  Input artifact(const std::string& file) const {
    for (const auto& [stage, files] : stage_outputs()) {
      if (std::find(files.begin(), files.end(), file) != files.end()) return Input{file, out_ / file, stage};
    }
    throw std::logic_error("unknown artifact " + file);
  }

  static Input external(const std::string& key, const std::optional<fs::path>& p, const std::string& stage) {
    if (!p) throw ConfigError(stage + " needs paths." + key + " to be configured");
    return Input{key, *p, std::nullopt};
  }

  Stage make_stage(const std::string& name) const {
    Stage s;
    s.name = name;
    s.outputs = stage_outputs().at(name);
    const auto params = cfg_.parameters_json();
    if (name == "ingest") {
      s.inputs = {external("dataset", cfg_.dataset, name)};
      s.params = {{"split_ratio", cfg_.split_ratio}, {"seed", cfg_.seed}};
    } else if (name == "prompts") {
      s.inputs = {artifact("records.jsonl"), artifact("split.json")};
      if (cfg_.teacher_traces) s.inputs.push_back(external("teacher_traces", cfg_.teacher_traces, name));
      s.params = {{"cot_mode", cfg_.cot_mode}};
    } else if (name == "score") {
      s.inputs = {external("outputs", cfg_.outputs, name), artifact("records.jsonl")};
      s.params = {{"reward", params["reward"]}};
    } else if (name == "coldstart") {
      s.inputs = {external("embeddings", cfg_.embeddings, name)};
      s.params = {{"coldstart", params["coldstart"]}, {"seed", cfg_.seed}};
    } else if (name == "train-toy") {
      s.params = {{"grpo", params["grpo"]}, {"train", params["train"]}, {"seed", cfg_.seed}};
    } else if (name == "eval") {
      s.inputs = {external("outputs", cfg_.outputs, name), artifact("records.jsonl"), artifact("split.json"),
                  artifact("prompts.jsonl")};
      s.params = {{"schema_profile", params["reward"]["schema_profile"]},
                  {"eval", params["eval"]},
                  {"provider", provider_ ? ojson(provider_->id()) : params["provider"]}};
    } else if (name == "report") {
      for (const auto& prev : stage_names()) {
        if (prev == "report") continue;
        if (!requested(prev) && !recorded(prev)) continue;
        for (const auto& f : stage_outputs().at(prev)) s.inputs.push_back(artifact(f));
      }
      s.params = ojson::object();
    }
    return s;
  }

  std::vector<Stage> plan() const {
    std::vector<Stage> out;
    for (const auto& n : requested_) out.push_back(make_stage(n));
    return out;
  }

  void check_external_inputs(const std::vector<Stage>& stages) const {
    for (const auto& s : stages) {
      for (const auto& in : s.inputs) {
        if (in.producer) continue;
        if (!fs::is_regular_file(in.path)) {
          throw ConfigError(s.name + ": " + in.key + " file not found: " + in.path.string());
        }
      }
    }
  }

  // Artifacts consumed by requested stages must match what their producer
  // recorded, unless that producer is part of this run. A producer whose
  // outputs no longer match is never up to date, so it re-runs.
  void check_artifacts(const std::vector<Stage>& stages) const {
    for (const auto& s : stages) {
      for (const auto& in : s.inputs) {
        if (!in.producer) continue;
        const auto& producer = *in.producer;
        if (requested(producer)) continue;  // rewritten before it is read
        const bool exists = fs::is_regular_file(in.path);
        const auto recorded_hash = recorded_output(producer, in.key);
        if (exists && recorded_hash) {
          if (sha256_file(in.path) != *recorded_hash) {
            throw TamperError(in.key + " was modified after stage " + producer + " wrote it; " + s.name +
                              " cannot use it (re-create the output directory)");
          }
          continue;
        }
        if (!exists) throw ConfigError(s.name + " needs " + in.key + "; run stage " + producer + " first");
        throw ConfigError(in.key + " has no manifest entry from stage " + producer);
      }
    }
  }

  void load_manifest() {
    const auto path = out_ / kManifest;
    manifest_ = ojson::object();
    if (!fs::exists(path)) return;
    try {
      manifest_ = read_json(path);
    } catch (const JsonlError& e) {
      throw TamperError(std::string("manifest unreadable: ") + e.what());
    }
    if (!manifest_.is_object() || !manifest_.contains("stages") || !manifest_["stages"].is_object()) {
      throw TamperError("manifest.json is malformed");
    }
  }

  bool recorded(const std::string& stage) const {
    return manifest_.contains("stages") && manifest_["stages"].contains(stage);
  }

  std::optional<std::string> recorded_output(const std::string& stage, const std::string& file) const {
    if (!recorded(stage)) return std::nullopt;
    const auto& outs = manifest_["stages"][stage]["outputs"];
    if (!outs.contains(file)) return std::nullopt;
    return outs[file].get<std::string>();
  }

  ojson hash_inputs(const Stage& s) const {
    ojson h = ojson::object();
    for (const auto& in : s.inputs) h[in.key] = sha256_file(in.path);
    return h;
  }

  bool up_to_date(const Stage& s, const ojson& inputs, const std::string& params_hash) const {
    if (!recorded(s.name)) return false;
    const auto& e = manifest_["stages"][s.name];
    if (e["params_hash"] != params_hash || e["inputs"] != inputs) return false;
    for (const auto& f : s.outputs) {
      if (!fs::is_regular_file(out_ / f)) return false;
      if (!e["outputs"].contains(f) || e["outputs"][f] != sha256_file(out_ / f)) return false;
    }
    return true;
  }

  void record(const Stage& s, const ojson& inputs, const std::string& params_hash) {
    ojson entry;
    entry["params_hash"] = params_hash;
    entry["inputs"] = inputs;
    ojson outs = ojson::object();
    for (const auto& f : s.outputs) outs[f] = sha256_file(out_ / f);
    entry["outputs"] = outs;

    // Rebuild in pipeline order so the manifest is independent of run history.
    ojson stages = ojson::object();
    for (const auto& n : stage_names()) {
      if (n == s.name) stages[n] = entry;
      else if (recorded(n)) stages[n] = manifest_["stages"][n];
    }
    manifest_ = ojson::object();
    manifest_["format"] = 1;
    manifest_["config_hash"] = sha256_hex(cfg_.parameters_json().dump());
    manifest_["stages"] = stages;
    write_json(out_ / kManifest, manifest_);
  }

  // -------------------------------------------------------------------------

  void execute(const std::string& name) {
    if (name == "ingest") ingest();
    else if (name == "prompts") prompts();
    else if (name == "score") score();
    else if (name == "coldstart") coldstart();
    else if (name == "train-toy") train_toy();
    else if (name == "eval") evaluate();
    else if (name == "report") report();
  }

  std::map<std::string, PatientRecord> records_by_id() const {
    std::map<std::string, PatientRecord> m;
    for (auto& r : load_records((out_ / "records.jsonl").string())) m.emplace(r.patient_id, std::move(r));
    return m;
  }

  static std::string row_id(const ojson& row, const std::string& where) {
    if (!row.is_object() || !row.contains("id")) throw std::invalid_argument(where + ": row without an id");
    return row["id"].is_string() ? row["id"].get<std::string>() : row["id"].dump();
  }

  void ingest() {
    const auto records = load_records(cfg_.dataset->string());
    if (records.empty()) throw EmptyDataset("dataset has no records");
    std::vector<std::string> ids;
    std::set<std::string> seen;
    std::vector<ojson> rows;
    for (const auto& r : records) {
      if (!seen.insert(r.patient_id).second) throw std::invalid_argument("duplicate patient_id " + r.patient_id);
      ids.push_back(r.patient_id);
      rows.push_back(serialize_record(r));
    }
    write_jsonl(out_ / "records.jsonl", rows);
    const auto split = split_dataset(ids, cfg_.split_ratio, cfg_.seed);
    ojson sj;
    sj["seed"] = cfg_.seed;
    sj["ratio"] = cfg_.split_ratio;
    sj["n_train"] = split.train.size();
    sj["n_eval"] = split.eval.size();
    sj["train"] = split.train;
    sj["eval"] = split.eval;
    write_json(out_ / "split.json", sj);
  }

  void prompts() {
    const auto records = load_records((out_ / "records.jsonl").string());
    const auto split = read_json(out_ / "split.json");
    std::set<std::string> train_ids;
    for (const auto& id : split["train"]) train_ids.insert(id.get<std::string>());

    std::map<std::string, std::string> teacher;
    if (cfg_.teacher_traces) {
      for (const auto& row : read_jsonl(*cfg_.teacher_traces)) {
        const auto id = row_id(row, "teacher_traces");
        if (!row.contains("trace_text") || !row["trace_text"].is_string()) {
          throw std::invalid_argument("teacher trace " + id + " lacks trace_text");
        }
        teacher[id] = row["trace_text"].get<std::string>();
      }
    }

    std::vector<ojson> prompt_rows, pair_rows;
    for (const auto& r : records) {
      const auto bundle = build_prompt(r, cfg_.cot_mode);
      const bool is_train = train_ids.contains(r.patient_id);
      ojson p;
      p["id"] = r.patient_id;
      p["split"] = is_train ? "train" : "eval";
      p["cancer_type"] = r.cancer_type.name();
      p["instruction"] = bundle.instruction;
      p["summary_text"] = bundle.summary;
      p["prompt_text"] = bundle.render();
      prompt_rows.push_back(std::move(p));
      if (!is_train) continue;
      ojson t;
      t["id"] = r.patient_id;
      t["prompt_text"] = bundle.render();
      t["target_text"] = prediction_block(r.outcome);
      if (auto it = teacher.find(r.patient_id); it != teacher.end()) t["teacher_trace_text"] = it->second;
      pair_rows.push_back(std::move(t));
    }
    write_jsonl(out_ / "prompts.jsonl", prompt_rows);
    write_jsonl(out_ / "training_pairs.jsonl", pair_rows);
  }

  void score() {
    const auto records = records_by_id();
    std::vector<ojson> rows;
    for (const auto& row : read_jsonl(*cfg_.outputs)) {
      const auto id = row_id(row, "outputs");
      const auto it = records.find(id);
      if (it == records.end()) throw std::invalid_argument("sample " + id + ": no record with this patient_id");
      if (!row.contains("output_text") || !row["output_text"].is_string()) {
        throw std::invalid_argument("sample " + id + ": output_text missing");
      }
      const auto b = total_reward(row["output_text"].get<std::string>(), it->second.outcome, cfg_.reward);
      ojson s;
      s["id"] = id;
      s["r_correct"] = b.r_correct;
      s["r_int"] = b.r_int;
      s["r_strict"] = b.r_strict;
      s["r_soft"] = b.r_soft;
      s["total"] = b.total;
      rows.push_back(std::move(s));
    }
    write_jsonl(out_ / "scores.jsonl", rows);
  }

  void coldstart() {
    auto corpus = EmbeddedCorpus::load_jsonl(*cfg_.embeddings);
    if (corpus.size() == 0) throw EmptyDataset("embeddings file has no rows");
    if (cfg_.unit_normalize) corpus = unit_normalized(corpus);
    const std::size_t k = cfg_.coldstart_k.value_or(default_cluster_count(corpus.size()));
    const auto clusters = kmeans(corpus, k, cfg_.kmeans_max_iters, cfg_.seed);
    const auto picks = select_exemplars(corpus, clusters);
    std::vector<ojson> rows;
    for (const auto& e : picks) {
      ojson r;
      r["id"] = e.id;
      r["cluster"] = e.cluster;
      r["distance"] = e.distance;
      rows.push_back(std::move(r));
    }
    write_jsonl(out_ / "coldstart.jsonl", rows);
    ojson s;
    s["n_points"] = corpus.size();
    s["k"] = k;
    s["n_selected"] = picks.size();
    s["inertia"] = clusters.inertia;
    s["iterations"] = clusters.iterations;
    s["converged"] = clusters.converged;
    s["inertia_history"] = clusters.inertia_history;
    write_json(out_ / "coldstart_summary.json", s);
  }

  void train_toy() {
    TrainOptions t = cfg_.train;
    t.seed = cfg_.seed;
    const auto result = run_toy_training(cfg_.grpo, t);
    std::vector<ojson> rows;
    for (const auto& rec : result.log) rows.push_back(train_record_json(rec));
    write_jsonl(out_ / "train_log.jsonl", rows);

    const std::size_t w = std::min(result.log.size(), std::max<std::size_t>(cfg_.train.reward_window, 1));
    double tail = 0.0;
    for (std::size_t i = result.log.size() - w; i < result.log.size(); ++i) tail += result.log[i].mean_reward;
    ojson s;
    s["seed"] = cfg_.seed;
    s["steps_run"] = result.log.size();
    s["final_window_mean_reward"] = w ? tail / static_cast<double>(w) : 0.0;
    s["reached_at"] = result.reached_at ? ojson(*result.reached_at) : ojson(nullptr);
    write_json(out_ / "train_summary.json", s);
  }

  void evaluate() {
    const auto records = records_by_id();
    std::map<std::string, ojson> prompts;
    for (auto& row : read_jsonl(out_ / "prompts.jsonl")) prompts[row["id"].get<std::string>()] = row;
    const auto eval_ids = read_json(out_ / "split.json")["eval"].get<std::set<std::string>>();

    std::vector<EvalSample> samples;
    std::vector<ojson> joined;
    for (const auto& row : read_jsonl(*cfg_.outputs)) {
      const auto id = row_id(row, "outputs");
      if (!eval_ids.count(id)) continue;  // held-out split only
      ojson j = row;
      const auto rec = records.find(id);
      if (rec != records.end()) {
        if (!j.contains("cancer_type")) j["cancer_type"] = rec->second.cancer_type.name();
        if (!j.contains("truth_status")) j["truth_status"] = std::string(status_label(rec->second.outcome.status));
        if (!j.contains("truth_months")) j["truth_months"] = rec->second.outcome.months;
      }
      if (auto p = prompts.find(id); p != prompts.end()) {
        if (!j.contains("summary_text")) j["summary_text"] = p->second["summary_text"];
        if (!j.contains("prompt_text")) j["prompt_text"] = p->second["instruction"];
      }
      try {
        samples.push_back(parse_eval_sample(j));
      } catch (const std::exception& e) {
        throw std::invalid_argument("sample " + id + ": " + e.what());
      }
      joined.push_back(std::move(j));
    }
    write_jsonl(out_ / "eval_inputs.jsonl", joined);

    std::unique_ptr<EmbeddingProvider> owned;
    EmbeddingProvider* base = provider_;
    if (!base) {
      owned = make_provider(cfg_.provider);
      base = owned.get();
    }
    MemoizingProvider memo(*base);
    EvalOptions eo = cfg_.eval;
    eo.profile = cfg_.reward.schema_profile;
    const auto rep = build_report(samples, memo, eo);
    write_json(out_ / "eval_report.json", report_to_json(rep));
    write_text(out_ / "eval_samples.csv", samples_csv(rep));
  }

  void report() {
    ojson r;
    r["config_hash"] = sha256_hex(cfg_.parameters_json().dump());
    ojson stages = ojson::array();
    for (const auto& n : stage_names()) {
      if (n != "report" && fs::exists(out_ / stage_outputs().at(n).front()) && (requested(n) || recorded(n))) {
        stages.push_back(n);
      }
    }
    r["stages"] = stages;
    auto have = [&](const char* f) { return fs::exists(out_ / f); };
    if (have("split.json")) {
      const auto s = read_json(out_ / "split.json");
      r["dataset"] = {{"n_records", s["n_train"].get<std::size_t>() + s["n_eval"].get<std::size_t>()},
                      {"n_train", s["n_train"]},
                      {"n_eval", s["n_eval"]}};
    }
    if (have("scores.jsonl") && (requested("score") || recorded("score"))) {
      const auto rows = read_jsonl(out_ / "scores.jsonl");
      double total = 0.0;
      std::size_t full = 0;
      for (const auto& row : rows) {
        total += row["total"].get<double>();
        if (row["total"].get<double>() == 2.5) ++full;
      }
      r["reward"] = {{"n_outputs", rows.size()},
                     {"mean_total", rows.empty() ? 0.0 : total / static_cast<double>(rows.size())},
                     {"n_full_reward", full}};
    }
    if (have("coldstart_summary.json") && (requested("coldstart") || recorded("coldstart"))) {
      const auto s = read_json(out_ / "coldstart_summary.json");
      r["coldstart"] = {{"n_points", s["n_points"]}, {"k", s["k"]}, {"n_selected", s["n_selected"]},
                        {"inertia", s["inertia"]}};
    }
    if (have("train_summary.json") && (requested("train-toy") || recorded("train-toy"))) {
      r["train_toy"] = read_json(out_ / "train_summary.json");
    }
    if (have("eval_report.json") && (requested("eval") || recorded("eval"))) {
      const auto e = read_json(out_ / "eval_report.json");
      ojson h;
      h["n_samples"] = e["n_samples"];
      h["n_missing"] = e["n_missing"];
      h["macro_f1"] = e["classification"].is_null() ? ojson(nullptr) : e["classification"]["macro"]["f1"];
      h["mae"] = e["regression"].is_null() ? ojson(nullptr) : e["regression"]["mae"];
      h["rmse"] = e["regression"].is_null() ? ojson(nullptr) : e["regression"]["rmse"];
      h["bleu"] = e["generation"].is_null() ? ojson(nullptr) : e["generation"]["bleu"];
      r["eval"] = h;
    }
    write_json(out_ / "report.json", r);
  }

  const PipelineConfig& cfg_;
  const RunOptions& opts_;
  EmbeddingProvider* provider_;
  fs::path out_;
  std::vector<std::string> requested_;
  ojson manifest_;
};

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config, const RunOptions& options, EmbeddingProvider* provider) {
  return Runner(config, options, provider).run();
}

}  // namespace oncoalign
