// SPDX-License-Identifier: Apache-2.0
//
// Four-component reward for a generated output:
//
//   total = correct (0 | 1) + integer validity (0 | 0.5)
//         + strict format (0 | 0.5) + soft format (0 | 0.5)

#pragma once

#include <optional>
#include <string_view>

#include "oncoalign/clinical_records.hpp"
#include "oncoalign/trace_codec.hpp"

namespace oncoalign {

enum class IntegerPolicy { StrictInteger, AnyFiniteNumeric };

std::string_view integer_policy_name(IntegerPolicy p);
std::optional<IntegerPolicy> parse_integer_policy(std::string_view text);

struct RewardConfig {
  double months_tolerance = 0.0;
  IntegerPolicy integer_policy = IntegerPolicy::StrictInteger;
  SchemaProfile schema_profile = SchemaProfile::ClinicalSchema;
};

struct RewardBreakdown {
  double r_correct = 0.0;
  double r_int = 0.0;
  double r_strict = 0.0;
  double r_soft = 0.0;
  double total = 0.0;

  bool operator==(const RewardBreakdown&) const = default;
};

inline constexpr double kCorrectReward = 1.0;
inline constexpr double kIntegerReward = 0.5;
inline constexpr double kStrictReward = 0.5;
inline constexpr double kSoftReward = 0.5;

double correctness_reward(const Prediction& pred, const SurvivalOutcome& truth, const RewardConfig& cfg);
double integer_validity_reward(const Prediction& pred, const RewardConfig& cfg);

struct FormatRewards {
  double r_strict = 0.0;
  double r_soft = 0.0;
};

FormatRewards format_rewards(std::string_view text, const RewardConfig& cfg);

/// Never throws: an output without an extractable prediction scores zero
/// on the correctness and integer components.
RewardBreakdown total_reward(std::string_view text, const SurvivalOutcome& truth, const RewardConfig& cfg);

}  // namespace oncoalign
