// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <set>

#include "generators.hpp"
#include "oncoalign/jsonl.hpp"
#include "oncoalign/reward.hpp"

using namespace oncoalign;

namespace {

const SurvivalOutcome kTruth{SurvivalStatus::Deceased, 27.9};

Prediction pred(SurvivalStatus s, double months, std::string raw) { return {s, months, std::move(raw)}; }

std::string llama3() { return read_text(gen::fixture_dir() / "traces" / "llama3_grpo_output.txt"); }

}  // namespace

TEST_SUITE("reward") {
  TEST_CASE("correctness with tolerance") {
    RewardConfig cfg;
    CHECK(correctness_reward(pred(SurvivalStatus::Deceased, 27.9, "27.9"), kTruth, cfg) == 1.0);
    CHECK(correctness_reward(pred(SurvivalStatus::Living, 27.9, "27.9"), kTruth, cfg) == 0.0);
    CHECK(correctness_reward(pred(SurvivalStatus::Deceased, 28.0, "28.0"), kTruth, cfg) == 0.0);
    cfg.months_tolerance = 0.2;
    CHECK(correctness_reward(pred(SurvivalStatus::Deceased, 28.0, "28.0"), kTruth, cfg) == 1.0);
  }

  TEST_CASE("integer validity policies") {
    RewardConfig strict;
    RewardConfig any;
    any.integer_policy = IntegerPolicy::AnyFiniteNumeric;
    CHECK(integer_validity_reward(pred(SurvivalStatus::Living, 30, "30"), strict) == 0.5);
    CHECK(integer_validity_reward(pred(SurvivalStatus::Living, 27.9, "27.9"), strict) == 0.0);
    CHECK(integer_validity_reward(pred(SurvivalStatus::Living, 27.9, "27.9"), any) == 0.5);
    CHECK(integer_validity_reward(pred(SurvivalStatus::Living, 0, "thirty"), strict) == 0.0);
    CHECK(integer_validity_reward(pred(SurvivalStatus::Living, 0, "thirty"), any) == 0.0);
  }

  TEST_CASE("format rewards") {
    RewardConfig cfg;
    const auto f = format_rewards(llama3(), cfg);
    CHECK(f.r_strict == 0.5);
    CHECK(f.r_soft == 0.5);
    const auto pre = format_rewards("Here you go.\n" + llama3(), cfg);
    CHECK(pre.r_strict == 0.0);
    CHECK(pre.r_soft == 0.5);
    auto no_reasoning = llama3();
    no_reasoning.erase(no_reasoning.find("<reasoning>"), 11);
    const auto none = format_rewards(no_reasoning, cfg);
    CHECK(none.r_strict == 0.0);
    CHECK(none.r_soft == 0.0);
  }

  TEST_CASE("totals") {
    RewardConfig cfg;
    const SurvivalOutcome truth{SurvivalStatus::Deceased, 30};
    const auto good = "<reasoning>Step 1: x.</reasoning>\n<comment>c</comment>\n<prediction>\nOverall Survival "
                      "Status: 1:DECEASED\nEstimated Overall Survival (months): 30\n</prediction>";
    CHECK(total_reward(good, truth, cfg).total == 2.5);
    CHECK(total_reward("", truth, cfg) == RewardBreakdown{});
    const SurvivalOutcome living{SurvivalStatus::Living, 30};
    const auto wrong = total_reward(good, living, cfg);
    CHECK(wrong == RewardBreakdown{0.0, 0.5, 0.5, 0.5, 1.5});
  }

  TEST_CASE("LLaMa3 listing under AnyFiniteNumeric scores 2.5") {
    RewardConfig cfg;
    cfg.integer_policy = IntegerPolicy::AnyFiniteNumeric;
    CHECK(total_reward(llama3(), kTruth, cfg).total == 2.5);
  }

  TEST_CASE("breakdown invariants on random outputs") {
    gen::Rng rng(23);
    const std::set<double> allowed{0.0, 0.5, 1.0, 1.5, 2.0, 2.5};
    RewardConfig cfg;
    for (int i = 0; i < 3000; ++i) {
      std::string text;
      switch (gen::index(rng, 3)) {
        case 0: text = gen::tagged_soup(rng); break;
        case 1: text = gen::clinical_output(rng, 1 + gen::index(rng, 4), "1:DECEASED", "30"); break;
        default: text = gen::clinical_output(rng, 2, "0:LIVING", "27.9") + gen::tagged_soup(rng); break;
      }
      for (auto profile : {SchemaProfile::ClinicalSchema, SchemaProfile::RewardSchema}) {
        cfg.schema_profile = profile;
        const auto b = total_reward(text, {SurvivalStatus::Deceased, 30}, cfg);
        CHECK(b.total == b.r_correct + b.r_int + b.r_strict + b.r_soft);
        CHECK(allowed.count(b.total) == 1);
        if (b.r_strict > 0) CHECK(b.r_soft == 0.5);
        CHECK(total_reward(text, {SurvivalStatus::Deceased, 30}, cfg) == b);
      }
    }
  }

  TEST_CASE("appending garbage never raises a component") {
    gen::Rng rng(29);
    RewardConfig cfg;
    for (int i = 0; i < 500; ++i) {
      const auto text = gen::clinical_output(rng, 1 + gen::index(rng, 3), "1:DECEASED", "30");
      const auto base = total_reward(text, {SurvivalStatus::Deceased, 30}, cfg);
      REQUIRE(base.r_strict == 0.5);
      const auto after = total_reward(text + "\nextra " + gen::tagged_soup(rng), {SurvivalStatus::Deceased, 30}, cfg);
      CHECK(after.r_strict <= base.r_strict);
      CHECK(after.r_soft <= base.r_soft);
      CHECK(after.r_correct <= base.r_correct);
      CHECK(after.r_int <= base.r_int);
    }
  }

  TEST_CASE("policy names round-trip") {
    for (auto p : {IntegerPolicy::StrictInteger, IntegerPolicy::AnyFiniteNumeric}) {
      CHECK(parse_integer_policy(integer_policy_name(p)) == p);
    }
  }
}
