// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "generators.hpp"
#include "oncoalign/eval_report.hpp"
#include "oncoalign/jsonl.hpp"
#include "oracles.hpp"

using namespace oncoalign;

namespace {

EvalSample sample(gen::Rng& rng, int i) {
  EvalSample s;
  s.id = "S-" + std::to_string(100 - i);  // reverse order on input
  s.cancer_type = i % 3 == 0 ? "Breast" : "NSCLC";
  const bool deceased = i % 2;
  s.truth = {deceased ? SurvivalStatus::Deceased : SurvivalStatus::Living, static_cast<double>(10 + i)};
  if (i % 4 == 3) {
    s.output_text = "no structured answer here";
  } else {
    const std::string status = gen::index(rng, 2) ? "1:DECEASED" : "0:LIVING";
    s.output_text = gen::clinical_output(rng, 1 + gen::index(rng, 4), status, std::to_string(8 + i));
  }
  if (i % 2 == 0) s.reference_trace = "Step 1: age is " + std::to_string(40 + i) + ". Step 2: stage IV disease.";
  s.summary_text = "Clinical Attributes: Cancer Stage=IV; Current Age=" + std::to_string(40 + i);
  return s;
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST_SUITE("eval_report") {
  TEST_CASE("aggregates are means of per-sample scores") {
    gen::Rng rng(127);
    std::vector<EvalSample> samples;
    for (int i = 0; i < 10; ++i) samples.push_back(sample(rng, i));
    OfflineEmbeddingProvider p;
    const auto rep = build_report(samples, p);
    REQUIRE(rep.samples.size() == 10);

    std::vector<double> rel, minrel, coh, overlap, steps, r1, r2, rl, ef;
    std::vector<std::string> cands, refs;
    std::vector<int> pred, truth;
    std::vector<std::optional<double>> pm;
    std::vector<double> tm;
    std::size_t missing = 0;
    for (const auto& s : samples) {
      const auto sc = score_sample(s, p, {});
      if (sc.cot) {
        rel.push_back(sc.cot->avg_relevance);
        minrel.push_back(sc.cot->min_relevance);
        coh.push_back(sc.cot->avg_coherence);
        overlap.push_back(sc.cot->max_prompt_overlap);
        steps.push_back(static_cast<double>(sc.cot->n_steps));
      }
      if (sc.rouge) {
        r1.push_back(sc.rouge->rouge1);
        r2.push_back(sc.rouge->rouge2);
        rl.push_back(sc.rouge->rougeL);
        ef.push_back(*sc.embed_f1);
        std::string cand;
        try {
          cand = parse_soft(s.output_text, SchemaProfile::ClinicalSchema).reasoning;
        } catch (const TraceError&) {
        }
        cands.push_back(cand);
        refs.push_back(*s.reference_trace);
      }
      pred.push_back(!sc.prediction ? -1 : sc.prediction->status == SurvivalStatus::Deceased);
      truth.push_back(s.truth.status == SurvivalStatus::Deceased);
      pm.push_back(sc.prediction ? std::optional(sc.prediction->months) : std::nullopt);
      tm.push_back(s.truth.months);
      missing += !sc.prediction;
    }
    CHECK(rep.n_missing == missing);
    CHECK(missing == 2);
    REQUIRE(rep.cot);
    CHECK(std::fabs(rep.cot->avg_relevance - mean_of(rel)) <= 1e-12);
    CHECK(std::fabs(rep.cot->min_relevance - mean_of(minrel)) <= 1e-12);
    CHECK(std::fabs(rep.cot->avg_coherence - mean_of(coh)) <= 1e-12);
    CHECK(std::fabs(rep.cot->max_prompt_overlap - mean_of(overlap)) <= 1e-12);
    CHECK(std::fabs(rep.cot->n_steps - mean_of(steps)) <= 1e-12);
    REQUIRE(rep.generation);
    CHECK(rep.generation->n_samples == 5);
    CHECK(std::fabs(rep.generation->rouge1 - mean_of(r1)) <= 1e-12);
    CHECK(std::fabs(rep.generation->rouge2 - mean_of(r2)) <= 1e-12);
    CHECK(std::fabs(rep.generation->rougeL - mean_of(rl)) <= 1e-12);
    CHECK(std::fabs(rep.generation->embed_f1 - mean_of(ef)) <= 1e-12);
    CHECK(std::fabs(rep.generation->bleu - oracle::bleu(cands, refs)) <= 1e-9 * std::max(1.0, rep.generation->bleu));

    REQUIRE(rep.classification);
    const auto c = oracle::confusion(pred, truth);
    CHECK(rep.classification->tp == c.tp);
    CHECK(rep.classification->fp == c.fp);
    CHECK(rep.classification->fn == c.fn);
    CHECK(rep.classification->tn == c.tn);
    CHECK(rep.classification->n_missing == missing);
    const auto reg = oracle::regression(pm, tm);
    CHECK(std::fabs(rep.regression->mae - reg.mae) <= 1e-12);
  }

  TEST_CASE("a single sample aggregates to itself") {
    gen::Rng rng(131);
    const auto s = sample(rng, 0);
    OfflineEmbeddingProvider p;
    const auto rep = build_report({s}, p);
    const auto sc = score_sample(s, p, {});
    REQUIRE(rep.cot);
    REQUIRE(sc.cot);
    CHECK(rep.cot->avg_relevance == sc.cot->avg_relevance);
    CHECK(rep.cot->avg_coherence == sc.cot->avg_coherence);
    REQUIRE(rep.generation);
    CHECK(rep.generation->rougeL == sc.rouge->rougeL);
    CHECK(rep.generation->embed_f1 == *sc.embed_f1);
  }

  TEST_CASE("strata, missing accounting and ordering") {
    gen::Rng rng(137);
    std::vector<EvalSample> samples;
    for (int i = 0; i < 6; ++i) samples.push_back(sample(rng, i));
    samples[0].cancer_type = "Melanoma";
    samples[0].summary_text.reset();
    OfflineEmbeddingProvider p;
    const auto rep = build_report(samples, p);
    CHECK(rep.cot_by_cancer_type.count("Melanoma") == 0);
    std::size_t stratified = 0;
    for (const auto& [_, agg] : rep.cot_by_cancer_type) stratified += agg.n_samples;
    CHECK(stratified == rep.cot->n_samples);
    CHECK(std::is_sorted(rep.samples.begin(), rep.samples.end(),
                         [](const auto& a, const auto& b) { return a.id < b.id; }));
    const auto j = report_to_json(rep);
    CHECK(j["n_missing"].get<std::size_t>() == rep.n_missing);
    CHECK(j["n_scoreable"].get<std::size_t>() + rep.n_missing == 6);

    auto shuffled = samples;
    std::reverse(shuffled.begin(), shuffled.end());
    CHECK(report_to_json(build_report(shuffled, p)).dump() == j.dump());
  }

  TEST_CASE("all-missing outputs leave the outcome metrics absent") {
    std::vector<EvalSample> samples(3);
    for (int i = 0; i < 3; ++i) {
      samples[static_cast<std::size_t>(i)].id = std::to_string(i);
      samples[static_cast<std::size_t>(i)].output_text = "nothing";
    }
    OfflineEmbeddingProvider p;
    const auto rep = build_report(samples, p);
    CHECK(rep.n_missing == 3);
    CHECK_FALSE(rep.classification);
    CHECK_FALSE(rep.regression);
    CHECK(report_to_json(rep)["classification"].is_null());
  }

  TEST_CASE("per-sample CSV") {
    gen::Rng rng(139);
    std::vector<EvalSample> samples;
    for (int i = 0; i < 4; ++i) samples.push_back(sample(rng, i));
    samples[1].id = "needs,quoting";
    OfflineEmbeddingProvider p;
    const auto csv = samples_csv(build_report(samples, p));
    std::vector<std::string> lines;
    std::istringstream in(csv);
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    CHECK(lines.size() == 5);
    CHECK(lines.front().find("id,cancer_type") == 0);
    for (const auto& line : lines) {
      if (line.empty() || line.front() == '"') continue;
      CHECK(std::count(line.begin(), line.end(), ',') == 16);
    }
    CHECK(csv.find("\"needs,quoting\"") != std::string::npos);
  }

  TEST_CASE("sample rows parse and validate") {
    const auto row = ojson::parse(R"({"id":"P-1","output_text":"x","truth_status":"1:DECEASED","truth_months":12})");
    const auto s = parse_eval_sample(row);
    CHECK(s.truth.status == SurvivalStatus::Deceased);
    CHECK(s.cancer_type == "Unknown");
    CHECK_THROWS_AS(parse_eval_sample(ojson::parse(R"({"id":"P-1","output_text":"x"})")), std::invalid_argument);
    CHECK_THROWS_AS(
        parse_eval_sample(ojson::parse(R"({"id":"P","output_text":"x","truth_status":"?","truth_months":1})")),
        std::invalid_argument);
  }
}
