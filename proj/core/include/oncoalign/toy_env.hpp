// SPDX-License-Identifier: Apache-2.0
//
// Formatted-answer environment for toy GRPO runs. The policy emits a short
// token sequence that is placed inside a fixed reasoning/answer template and
// scored with the full reward function.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "oncoalign/grpo.hpp"
#include "oncoalign/reward.hpp"

namespace oncoalign {

class FormattedAnswerEnv : public RewardEnvironment {
 public:
  static constexpr std::size_t kAnswerLength = 4;

  FormattedAnswerEnv();
  FormattedAnswerEnv(SurvivalOutcome truth, RewardConfig cfg);

  const std::vector<std::string>& vocabulary() const { return vocab_; }
  std::size_t vocab_size() const { return vocab_.size(); }
  const SurvivalOutcome& truth() const { return truth_; }

  std::string answer_text(std::span<const Token> tokens) const;
  std::string render(std::span<const Token> tokens) const;
  RewardBreakdown score(std::span<const Token> tokens) const;
  double reward(std::span<const Token> tokens) const override;

  /// Uniform policy over the vocabulary, the usual starting point.
  ToyPolicy initial_policy() const;

 private:
  std::vector<std::string> vocab_;
  SurvivalOutcome truth_;
  RewardConfig cfg_;
};

}  // namespace oncoalign
