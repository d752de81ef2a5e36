// SPDX-License-Identifier: Apache-2.0
//
// Dataset-level evaluation: parses each model output, then aggregates
// outcome, generation and chain-of-thought metrics. Samples are folded in id
// order so the report does not depend on input order.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oncoalign/cot_quality.hpp"
#include "oncoalign/metrics.hpp"
#include "oncoalign/trace_codec.hpp"

namespace oncoalign {

struct EvalSample {
  std::string id;
  std::string cancer_type;
  std::string output_text;
  SurvivalOutcome truth;
  std::optional<std::string> reference_trace;
  std::optional<std::string> summary_text;
  std::optional<std::string> prompt_text;
};

/// JSONL rows {id, cancer_type, output_text, truth_status, truth_months,
/// reference_trace?, summary_text?, prompt_text?}.
std::vector<EvalSample> load_eval_samples(const std::filesystem::path& path);
EvalSample parse_eval_sample(const nlohmann::ordered_json& row);

struct EvalOptions {
  SchemaProfile profile = SchemaProfile::ClinicalSchema;
  std::optional<double> rescale_baseline;
};

struct SampleScores {
  std::string id;
  std::string cancer_type;
  SurvivalOutcome truth;
  std::optional<Prediction> prediction;  // nullopt = missing
  bool strict_ok = false;
  bool soft_ok = false;
  std::optional<CotQualityScores> cot;
  std::optional<RougeScores> rouge;
  std::optional<double> embed_f1;
};

struct CotAggregate {
  double avg_relevance = 0.0;
  double min_relevance = 0.0;
  double avg_coherence = 0.0;
  double max_prompt_overlap = 0.0;
  double n_steps = 0.0;
  std::size_t n_samples = 0;
};

struct GenerationScores {
  double bleu = 0.0;
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
  double embed_f1 = 0.0;
  std::size_t n_samples = 0;
};

struct EvalReport {
  std::size_t n_samples = 0;
  std::size_t n_missing = 0;
  std::size_t n_strict = 0;
  std::size_t n_soft = 0;
  std::optional<ClassificationReport> classification;  // absent when all missing
  std::optional<RegressionReport> regression;
  std::optional<GenerationScores> generation;  // samples with a reference trace
  std::optional<CotAggregate> cot;
  std::map<std::string, CotAggregate> cot_by_cancer_type;  // empty strata omitted
  std::vector<SampleScores> samples;                       // sorted by id
};

SampleScores score_sample(const EvalSample& sample, EmbeddingProvider& provider, const EvalOptions& options);
EvalReport build_report(const std::vector<EvalSample>& samples, EmbeddingProvider& provider,
                        const EvalOptions& options = {});

nlohmann::ordered_json report_to_json(const EvalReport& report);
std::string samples_csv(const EvalReport& report);

}  // namespace oncoalign
