// SPDX-License-Identifier: Apache-2.0

#include "oncoalign/toy_env.hpp"

#include <stdexcept>

namespace oncoalign {

namespace {

std::vector<std::string> default_vocabulary() {
  return {"1:DECEASED", "0:LIVING",  "30",        "27.9",       "12",          "33.0",     "45",
          "6",          "18",        "60",        "0",          "100",         ",",        ".",
          "months",     "survival",  "status",    "poor",       "prognosis",   "stable",   "advanced",
          "disease",    "likely",    "estimated", "<answer>",   "</answer>",   "<reasoning>",
          "</reasoning>", "<comment>", "Step",    "1:",         "unknown"};
}

constexpr const char* kReasoning = "<reasoning>\nStep 1: Review stage, sites and treatment history.\n</reasoning>\n";

}  // namespace

FormattedAnswerEnv::FormattedAnswerEnv()
    : FormattedAnswerEnv(SurvivalOutcome{SurvivalStatus::Deceased, 30.0},
                         RewardConfig{0.0, IntegerPolicy::StrictInteger, SchemaProfile::RewardSchema}) {}

FormattedAnswerEnv::FormattedAnswerEnv(SurvivalOutcome truth, RewardConfig cfg)
    : vocab_(default_vocabulary()), truth_(truth), cfg_(cfg) {}

std::string FormattedAnswerEnv::answer_text(std::span<const Token> tokens) const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] >= vocab_.size()) throw std::out_of_range("token outside environment vocabulary");
    if (i > 0) out += ' ';
    out += vocab_[tokens[i]];
  }
  return out;
}

std::string FormattedAnswerEnv::render(std::span<const Token> tokens) const {
  return std::string(kReasoning) + "<answer>\n" + answer_text(tokens) + "\n</answer>";
}

RewardBreakdown FormattedAnswerEnv::score(std::span<const Token> tokens) const {
  return total_reward(render(tokens), truth_, cfg_);
}

double FormattedAnswerEnv::reward(std::span<const Token> tokens) const { return score(tokens).total; }

ToyPolicy FormattedAnswerEnv::initial_policy() const { return ToyPolicy(vocab_.size(), kAnswerLength); }

}  // namespace oncoalign
