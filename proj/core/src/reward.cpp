// SPDX-License-Identifier: Apache-2.0

#include "oncoalign/reward.hpp"

#include <charconv>
#include <cmath>

#include "oncoalign/text_util.hpp"

namespace oncoalign {

std::string_view integer_policy_name(IntegerPolicy p) {
  return p == IntegerPolicy::StrictInteger ? "strict_integer" : "any_finite_numeric";
}

std::optional<IntegerPolicy> parse_integer_policy(std::string_view text) {
  const auto k = normalize_key(text);
  if (k == "strictinteger" || k == "integer") return IntegerPolicy::StrictInteger;
  if (k == "anyfinitenumeric" || k == "numeric") return IntegerPolicy::AnyFiniteNumeric;
  return std::nullopt;
}

double correctness_reward(const Prediction& pred, const SurvivalOutcome& truth, const RewardConfig& cfg) {
  if (pred.status != truth.status) return 0.0;
  return std::abs(pred.months - truth.months) <= cfg.months_tolerance ? kCorrectReward : 0.0;
}

double integer_validity_reward(const Prediction& pred, const RewardConfig& cfg) {
  const std::string_view raw = trim(pred.months_raw_text);
  if (raw.empty()) return 0.0;
  if (cfg.integer_policy == IntegerPolicy::StrictInteger) {
    for (char c : raw) {
      if (c < '0' || c > '9') return 0.0;
    }
    return kIntegerReward;
  }
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), value,
                                   std::chars_format::fixed);
  if (ec != std::errc{} || ptr != raw.data() + raw.size()) return 0.0;
  return std::isfinite(value) && value >= 0.0 ? kIntegerReward : 0.0;
}

FormatRewards format_rewards(std::string_view text, const RewardConfig& cfg) {
  FormatRewards out;
  try {
    parse_strict(text, cfg.schema_profile);
    out.r_strict = kStrictReward;
  } catch (const TraceError&) {
  }
  try {
    parse_soft(text, cfg.schema_profile);
    out.r_soft = kSoftReward;
  } catch (const TraceError&) {
  }
  return out;
}

RewardBreakdown total_reward(std::string_view text, const SurvivalOutcome& truth, const RewardConfig& cfg) {
  RewardBreakdown b;
  if (const auto pred = find_prediction(text, cfg.schema_profile)) {
    b.r_correct = correctness_reward(*pred, truth, cfg);
    b.r_int = integer_validity_reward(*pred, cfg);
  }
  const auto fmt = format_rewards(text, cfg);
  b.r_strict = fmt.r_strict;
  b.r_soft = fmt.r_soft;
  b.total = b.r_correct + b.r_int + b.r_strict + b.r_soft;
  return b;
}

}  // namespace oncoalign
