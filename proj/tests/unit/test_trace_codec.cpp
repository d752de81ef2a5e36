// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "generators.hpp"
#include "oncoalign/jsonl.hpp"
#include "oncoalign/text_util.hpp"
#include "oncoalign/trace_codec.hpp"

using namespace oncoalign;

namespace {

std::string fixture(const char* name) { return read_text(gen::fixture_dir() / "traces" / name); }

FormatErrorKind strict_error(std::string_view text, SchemaProfile p) {
  try {
    parse_strict(text, p);
  } catch (const FormatError& e) {
    return e.kind();
  }
  FAIL("parse_strict accepted the text");
  return FormatErrorKind::MissingTag;
}

std::string without_ws(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out += c;
  }
  return out;
}

}  // namespace

TEST_SUITE("trace_codec") {
  TEST_CASE("LLaMa3 GRPO listing parses strictly") {
    const auto t = parse_strict(fixture("llama3_grpo_output.txt"), SchemaProfile::ClinicalSchema);
    CHECK(t.profile == SchemaProfile::ClinicalSchema);
    CHECK(t.prediction.status == SurvivalStatus::Deceased);
    CHECK(t.prediction.months == 27.9);
    CHECK(t.prediction.months_raw_text == "27.9");
    CHECK(t.steps.size() == 6);
    CHECK(t.comment.has_value());
  }

  TEST_CASE("Med42 GRPO listing has seven steps and 33.0 months") {
    const auto t = parse_strict(fixture("med42_grpo_output.txt"), SchemaProfile::ClinicalSchema);
    CHECK(t.steps.size() == 7);
    CHECK(t.steps.back().starts_with("Synthesized factors"));
    CHECK(t.prediction == Prediction{SurvivalStatus::Deceased, 33.0, "33.0"});
  }

  TEST_CASE("missing closing prediction tag") {
    auto text = fixture("llama3_grpo_output.txt");
    text.erase(text.find("</prediction>"), 13);
    CHECK(strict_error(text, SchemaProfile::ClinicalSchema) == FormatErrorKind::MissingTag);
    CHECK_THROWS_AS(parse_soft(text, SchemaProfile::ClinicalSchema), FormatError);
  }

  TEST_CASE("minimal reward-schema instance") {
    const auto t = parse_strict("<reasoning>a</reasoning><answer>1:DECEASED, 30</answer>", SchemaProfile::RewardSchema);
    CHECK(t.prediction.months == 30.0);
    CHECK(t.prediction.status == SurvivalStatus::Deceased);
    CHECK(t.steps == std::vector<std::string>{"a"});
    CHECK_FALSE(t.comment.has_value());
  }

  TEST_CASE("error kinds") {
    const auto p = SchemaProfile::RewardSchema;
    CHECK(strict_error("<answer>1:DECEASED 3</answer><reasoning>a</reasoning>", p) == FormatErrorKind::OutOfOrder);
    CHECK(strict_error("<reasoning>a</reasoning><reasoning>b</reasoning><answer>0:LIVING 3</answer>", p) ==
          FormatErrorKind::DuplicateTag);
    CHECK(strict_error("<reasoning>a</reasoning><answer>0:LIVING 3</answer> thanks", p) ==
          FormatErrorKind::TrailingContent);
    CHECK(strict_error("<reasoning> </reasoning><answer>0:LIVING 3</answer>", p) == FormatErrorKind::EmptyReasoning);
    try {
      parse_soft("<answer>1:DECEASED 3</answer><reasoning>a</reasoning>", p);
      FAIL("accepted");
    } catch (const FormatError& e) {
      CHECK(e.kind() == FormatErrorKind::OutOfOrder);
    }
  }

  TEST_CASE("soft parsing tolerates a preamble") {
    const auto text = "Sure, here is my answer.\n" + fixture("llama3_grpo_output.txt");
    CHECK(strict_error(text, SchemaProfile::ClinicalSchema) == FormatErrorKind::TrailingContent);
    const auto t = parse_soft(text, SchemaProfile::ClinicalSchema);
    CHECK(t.steps.size() == 6);
  }

  TEST_CASE("strict success implies identical soft result") {
    for (const char* name : {"llama3_grpo_output.txt", "med42_grpo_output.txt", "med42_baseline_output.txt"}) {
      const auto text = fixture(name);
      const auto s = parse_strict(text, SchemaProfile::ClinicalSchema);
      CHECK(parse_soft(text, SchemaProfile::ClinicalSchema) == s);
    }
  }

  TEST_CASE("prediction extraction") {
    CHECK(extract_prediction("Overall Survival Status: 1:DECEASED\nEstimated Overall Survival (months): 33.0") ==
          Prediction{SurvivalStatus::Deceased, 33.0, "33.0"});
    try {
      extract_prediction("no labels here");
      FAIL("accepted");
    } catch (const PredictionParseError& e) {
      CHECK(e.kind() == PredictionErrorKind::NoStatus);
    }
    try {
      extract_prediction("Overall Survival Status: 0:LIVING\nEstimated Overall Survival (months): twelve");
      FAIL("accepted");
    } catch (const PredictionParseError& e) {
      CHECK(e.kind() == PredictionErrorKind::NoMonths);
    }
    CHECK(extract_prediction("0:living for about 12 months").months == 12.0);
    CHECK_THROWS_AS(extract_prediction("1:DECEASED (months): -3"), PredictionParseError);
  }

  TEST_CASE("split_steps") {
    CHECK(split_steps("One sentence.") == std::vector<std::string>{"One sentence."});
    CHECK(split_steps("").empty());
    CHECK(split_steps("  \n ").empty());
    std::string six;
    for (int i = 1; i <= 6; ++i) six += "Step " + std::to_string(i) + ": s" + std::to_string(i) + "\n";
    CHECK(split_steps(six).size() == 6);
    CHECK(split_steps("1. first\n2. second\n3. third").size() == 3);
    CHECK(split_steps("Look at stage. Then sites! Done?").size() == 3);
  }

  TEST_CASE("split_steps keeps every content character") {
    gen::Rng rng(5);
    const char* markers[] = {"Step %d: ", "%d. ", ""};
    const std::string alphabet = "abcXYZ ,;-()";
    for (int trial = 0; trial < 2000; ++trial) {
      const int style = static_cast<int>(gen::index(rng, 3));
      const std::size_t n = 1 + gen::index(rng, 6);
      std::string text, content;
      for (std::size_t i = 0; i < n; ++i) {
        char marker[32];
        std::snprintf(marker, sizeof marker, markers[style], static_cast<int>(i + 1));
        std::string body;
        const std::size_t len = 1 + gen::index(rng, 12);
        for (std::size_t k = 0; k < len; ++k) body += alphabet[gen::index(rng, alphabet.size())];
        body += style == 2 ? ". " : "";
        text += marker + body + "\n";
        content += body;
      }
      std::string joined;
      for (const auto& s : split_steps(text)) {
        CHECK_FALSE(s.empty());
        CHECK(trim(s) == s);
        joined += s;
      }
      CHECK(without_ws(joined) == without_ws(content));
    }
  }

  TEST_CASE("find_prediction falls back to the whole text") {
    CHECK(find_prediction("Overall Survival Status: 0:LIVING, (months): 40", SchemaProfile::ClinicalSchema)
              ->months == 40.0);
    CHECK_FALSE(find_prediction("nothing", SchemaProfile::ClinicalSchema).has_value());
    const auto structured_bad =
        "<reasoning>x</reasoning><comment>y</comment><prediction>unknown</prediction> 1:DECEASED 4";
    CHECK_FALSE(find_prediction(structured_bad, SchemaProfile::ClinicalSchema).has_value());
  }

  TEST_CASE("fixture corpus verdicts") {
    const auto rows = read_jsonl(gen::fixture_dir() / "traces" / "corpus.jsonl");
    CHECK(rows.size() == 50);
    for (const auto& row : rows) {
      const auto text = row["text"].get<std::string>();
      const auto profile = *parse_profile(row["profile"].get<std::string>());
      bool strict = true, soft = true;
      try {
        parse_strict(text, profile);
      } catch (const TraceError&) {
        strict = false;
      }
      try {
        parse_soft(text, profile);
      } catch (const TraceError&) {
        soft = false;
      }
      CHECK_MESSAGE(strict == row["strict"].get<bool>(), row["name"].get<std::string>());
      CHECK_MESSAGE(soft == row["soft"].get<bool>(), row["name"].get<std::string>());
    }
  }

  TEST_CASE("random tag soups only raise trace errors") {
    gen::Rng rng(17);
    for (int i = 0; i < 5000; ++i) {
      const auto text = gen::tagged_soup(rng);
      for (auto p : {SchemaProfile::RewardSchema, SchemaProfile::ClinicalSchema}) {
        std::optional<ReasoningTrace> strict;
        try {
          strict = parse_strict(text, p);
        } catch (const TraceError&) {
        }
        if (!strict) continue;
        CHECK(parse_soft(text, p) == *strict);
        CHECK_FALSE(strict->steps.empty());
      }
    }
  }
}
