// SPDX-License-Identifier: Apache-2.0

#include "oncoalign/eval_report.hpp"

#include <algorithm>

#include "oncoalign/clinical_records.hpp"
#include "oncoalign/jsonl.hpp"
#include "oncoalign/text_util.hpp"

namespace oncoalign {

namespace {

std::optional<std::string> optional_string(const ojson& row, const char* key) {
  if (!row.contains(key) || row[key].is_null()) return std::nullopt;
  if (!row[key].is_string()) throw std::invalid_argument(std::string("field ") + key + " must be a string");
  return row[key].get<std::string>();
}

void add(CotAggregate& agg, const CotQualityScores& s) {
  agg.avg_relevance += s.avg_relevance;
  agg.min_relevance += s.min_relevance;
  agg.avg_coherence += s.avg_coherence;
  agg.max_prompt_overlap += s.max_prompt_overlap;
  agg.n_steps += static_cast<double>(s.n_steps);
  ++agg.n_samples;
}

void finish(CotAggregate& agg) {
  const double n = static_cast<double>(agg.n_samples);
  agg.avg_relevance /= n;
  agg.min_relevance /= n;
  agg.avg_coherence /= n;
  agg.max_prompt_overlap /= n;
  agg.n_steps /= n;
}

ojson cot_json(const CotAggregate& a) {
  ojson j;
  j["n_samples"] = a.n_samples;
  j["avg_relevance"] = a.avg_relevance;
  j["min_relevance"] = a.min_relevance;
  j["avg_coherence"] = a.avg_coherence;
  j["max_prompt_overlap"] = a.max_prompt_overlap;
  j["mean_steps"] = a.n_steps;
  return j;
}

ojson class_json(const ClassMetrics& m) {
  ojson j;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["support"] = m.support;
  return j;
}

std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string num(double v) { return format_number(v); }

}  // namespace

EvalSample parse_eval_sample(const ojson& row) {
  if (!row.is_object()) throw std::invalid_argument("evaluation row must be an object");
  EvalSample s;
  for (const char* key : {"id", "output_text", "truth_status", "truth_months"}) {
    if (!row.contains(key)) throw std::invalid_argument(std::string("evaluation row lacks ") + key);
  }
  s.id = row["id"].is_string() ? row["id"].get<std::string>() : row["id"].dump();
  s.cancer_type = optional_string(row, "cancer_type").value_or("Unknown");
  s.output_text = row["output_text"].get<std::string>();
  const auto status = parse_status(nlohmann::json(row["truth_status"]));
  if (!status) throw std::invalid_argument("sample " + s.id + ": unrecognised truth_status");
  s.truth.status = *status;
  if (!row["truth_months"].is_number()) throw std::invalid_argument("sample " + s.id + ": truth_months must be numeric");
  s.truth.months = row["truth_months"].get<double>();
  s.reference_trace = optional_string(row, "reference_trace");
  s.summary_text = optional_string(row, "summary_text");
  s.prompt_text = optional_string(row, "prompt_text");
  return s;
}

std::vector<EvalSample> load_eval_samples(const std::filesystem::path& path) {
  std::vector<EvalSample> out;
  std::size_t line = 0;
  for (const auto& row : read_jsonl(path)) {
    ++line;
    try {
      out.push_back(parse_eval_sample(row));
    } catch (const std::exception& e) {
      throw std::invalid_argument(path.string() + ": row " + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

SampleScores score_sample(const EvalSample& sample, EmbeddingProvider& provider, const EvalOptions& options) {
  SampleScores s;
  s.id = sample.id;
  s.cancer_type = sample.cancer_type;
  s.truth = sample.truth;
  s.prediction = find_prediction(sample.output_text, options.profile);

  std::optional<ReasoningTrace> trace;
  try {
    parse_strict(sample.output_text, options.profile);
    s.strict_ok = true;
  } catch (const TraceError&) {
  }
  try {
    trace = parse_soft(sample.output_text, options.profile);
    s.soft_ok = true;
  } catch (const TraceError&) {
  }

  if (trace && !trace->steps.empty() && sample.summary_text) {
    const std::string prompt = sample.prompt_text.value_or(prompt_instruction(true));
    s.cot = cot_quality(*trace, *sample.summary_text, prompt, provider);
  }
  if (sample.reference_trace) {
    const std::string candidate = trace ? trace->reasoning : std::string();
    s.rouge = rouge(candidate, *sample.reference_trace);
    s.embed_f1 = embed_f1(candidate, *sample.reference_trace, provider, options.rescale_baseline);
  }
  return s;
}

EvalReport build_report(const std::vector<EvalSample>& samples, EmbeddingProvider& provider,
                        const EvalOptions& options) {
  std::vector<const EvalSample*> ordered;
  ordered.reserve(samples.size());
  for (const auto& s : samples) ordered.push_back(&s);
  std::stable_sort(ordered.begin(), ordered.end(), [](const auto* a, const auto* b) { return a->id < b->id; });

  EvalReport rep;
  rep.n_samples = samples.size();
  std::vector<std::optional<SurvivalStatus>> pred_status;
  std::vector<SurvivalStatus> truth_status;
  std::vector<std::optional<double>> pred_months;
  std::vector<double> truth_months;
  std::vector<std::string> bleu_cands, bleu_refs;
  GenerationScores gen;
  CotAggregate cot;

  for (const auto* sample : ordered) {
    auto s = score_sample(*sample, provider, options);
    pred_status.push_back(s.prediction ? std::optional(s.prediction->status) : std::nullopt);
    truth_status.push_back(s.truth.status);
    pred_months.push_back(s.prediction ? std::optional(s.prediction->months) : std::nullopt);
    truth_months.push_back(s.truth.months);
    if (!s.prediction) ++rep.n_missing;
    if (s.strict_ok) ++rep.n_strict;
    if (s.soft_ok) ++rep.n_soft;
    if (s.cot) {
      add(cot, *s.cot);
      add(rep.cot_by_cancer_type[s.cancer_type], *s.cot);
    }
    if (s.rouge) {
      std::optional<ReasoningTrace> trace;
      try {
        trace = parse_soft(sample->output_text, options.profile);
      } catch (const TraceError&) {
      }
      bleu_cands.push_back(trace ? trace->reasoning : std::string());
      bleu_refs.push_back(*sample->reference_trace);
      gen.rouge1 += s.rouge->rouge1;
      gen.rouge2 += s.rouge->rouge2;
      gen.rougeL += s.rouge->rougeL;
      gen.embed_f1 += s.embed_f1.value_or(0.0);
      ++gen.n_samples;
    }
    rep.samples.push_back(std::move(s));
  }

  if (rep.n_missing < rep.n_samples) {
    rep.classification = classification_report(pred_status, truth_status);
    rep.regression = regression_report(pred_months, truth_months);
  }
  if (gen.n_samples > 0) {
    const double n = static_cast<double>(gen.n_samples);
    gen.bleu = bleu(bleu_cands, bleu_refs);
    gen.rouge1 /= n;
    gen.rouge2 /= n;
    gen.rougeL /= n;
    gen.embed_f1 /= n;
    rep.generation = gen;
  }
  if (cot.n_samples > 0) {
    finish(cot);
    rep.cot = cot;
  }
  for (auto& [_, agg] : rep.cot_by_cancer_type) finish(agg);
  return rep;
}

ojson report_to_json(const EvalReport& r) {
  ojson j;
  j["n_samples"] = r.n_samples;
  j["n_scoreable"] = r.n_samples - r.n_missing;
  j["n_missing"] = r.n_missing;
  j["n_strict_format"] = r.n_strict;
  j["n_soft_format"] = r.n_soft;
  if (r.classification) {
    const auto& c = *r.classification;
    ojson cj;
    cj["positive_class"] = std::string(status_label(SurvivalStatus::Deceased));
    cj["macro"] = {{"precision", c.macro_precision}, {"recall", c.macro_recall}, {"f1", c.macro_f1}};
    cj["weighted"] = {{"precision", c.weighted_precision}, {"recall", c.weighted_recall}, {"f1", c.weighted_f1}};
    cj["per_class"] = {{std::string(status_label(SurvivalStatus::Living)), class_json(c.living)},
                       {std::string(status_label(SurvivalStatus::Deceased)), class_json(c.deceased)}};
    cj["accuracy"] = c.accuracy;
    cj["confusion"] = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
    j["classification"] = cj;
  } else {
    j["classification"] = nullptr;
  }
  if (r.regression) {
    j["regression"] = {{"mae", r.regression->mae}, {"rmse", r.regression->rmse}};
  } else {
    j["regression"] = nullptr;
  }
  if (r.generation) {
    const auto& g = *r.generation;
    j["generation"] = {{"n_samples", g.n_samples}, {"bleu", g.bleu},         {"rouge1", g.rouge1},
                       {"rouge2", g.rouge2},       {"rougeL", g.rougeL},     {"embed_f1", g.embed_f1}};
  } else {
    j["generation"] = nullptr;
  }
  j["cot_quality"] = r.cot ? cot_json(*r.cot) : ojson(nullptr);
  ojson strata = ojson::object();
  for (const auto& [k, v] : r.cot_by_cancer_type) strata[k] = cot_json(v);
  j["cot_quality_by_cancer_type"] = strata;
  return j;
}

std::string samples_csv(const EvalReport& r) {
  std::string out =
      "id,cancer_type,pred_status,pred_months,truth_status,truth_months,strict_format,soft_format,n_steps,"
      "avg_relevance,min_relevance,avg_coherence,max_prompt_overlap,rouge1,rouge2,rougeL,embed_f1\n";
  for (const auto& s : r.samples) {
    std::vector<std::string> cells;
    cells.push_back(csv_escape(s.id));
    cells.push_back(csv_escape(s.cancer_type));
    cells.push_back(s.prediction ? std::string(status_label(s.prediction->status)) : "");
    cells.push_back(s.prediction ? num(s.prediction->months) : "");
    cells.push_back(std::string(status_label(s.truth.status)));
    cells.push_back(num(s.truth.months));
    cells.push_back(s.strict_ok ? "1" : "0");
    cells.push_back(s.soft_ok ? "1" : "0");
    if (s.cot) {
      cells.push_back(std::to_string(s.cot->n_steps));
      cells.push_back(num(s.cot->avg_relevance));
      cells.push_back(num(s.cot->min_relevance));
      cells.push_back(num(s.cot->avg_coherence));
      cells.push_back(num(s.cot->max_prompt_overlap));
    } else {
      cells.insert(cells.end(), 5, "");
    }
    if (s.rouge) {
      cells.push_back(num(s.rouge->rouge1));
      cells.push_back(num(s.rouge->rouge2));
      cells.push_back(num(s.rouge->rougeL));
      cells.push_back(num(s.embed_f1.value_or(0.0)));
    } else {
      cells.insert(cells.end(), 4, "");
    }
    out += join(cells, ",");
    out += '\n';
  }
  return out;
}

}  // namespace oncoalign
