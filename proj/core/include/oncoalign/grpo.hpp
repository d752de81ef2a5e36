// SPDX-License-Identifier: Apache-2.0
//
// Group Relative Policy Optimization.
//
// For one query with G sampled outputs o_i:
//
//   A_i   = (r_i - mean(r)) / std(r)                  population std
//   ratio = pi_theta(o_i) / pi_old(o_i)
//   rho   = pi_ref(o_i) / pi_theta(o_i)
//   kl_i  = rho - log(rho) - 1
//   J     = 1/G sum_i [ min(ratio A_i, clip(ratio, 1-eps, 1+eps) A_i) - beta kl_i ]
//
// Sequence-level mode uses whole-output log-probabilities; token-level mode
// averages the bracketed term over the tokens of each output. There is no
// value function, so discount, GAE and value-loss settings have no role here.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oncoalign/toy_policy.hpp"

namespace oncoalign {

enum class RatioGranularity { SequenceLevel, TokenLevel };

struct GrpoConfig {
  std::size_t group_size = 8;
  double clip_epsilon = 0.1;
  double kl_coeff = 0.04;
  double std_guard = 1e-8;
  RatioGranularity ratio_granularity = RatioGranularity::SequenceLevel;
  double max_ratio = 1e6;

  /// Throws std::invalid_argument unless G >= 2, eps in (0, 1), beta >= 0.
  void validate() const;
};

class InvalidGroup : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct GroupOutput {
  std::vector<Token> tokens;
  // Per-token log-probabilities; sequence-level quantities are their sums.
  std::vector<double> logp_current;
  std::vector<double> logp_old;
  std::vector<double> logp_ref;
  double reward = 0.0;

  /// Single-entry output for callers that only have sequence totals.
  static GroupOutput from_totals(double logp_current, double logp_old, double logp_ref, double reward);

  double total_current() const;
  double total_old() const;
  double total_ref() const;
};

class GrpoGroup {
 public:
  /// Rejects empty groups, non-finite values and ragged per-token vectors.
  GrpoGroup(std::string query_id, std::vector<GroupOutput> outputs);

  const std::string& query_id() const { return query_id_; }
  const std::vector<GroupOutput>& outputs() const { return outputs_; }
  std::size_t size() const { return outputs_.size(); }

  std::vector<double> rewards() const;
  void compute_advantages(double std_guard = 1e-8);
  void set_advantages(std::vector<double> advantages);
  const std::optional<std::vector<double>>& advantages() const { return advantages_; }

 private:
  std::string query_id_;
  std::vector<GroupOutput> outputs_;
  std::optional<std::vector<double>> advantages_;
};

/// Population-std standardisation; all zeros when std < std_guard.
std::vector<double> normalize_advantages(std::span<const double> rewards, double std_guard = 1e-8);

struct Ratio {
  double value = 1.0;
  bool clamped = false;
};

/// exp(logp_current - logp_old), clamped to max_ratio on overflow.
Ratio importance_ratio(double logp_current, double logp_old, double max_ratio = 1e6);

/// rho - log(rho) - 1 with rho = exp(logp_ref - logp_current).
double kl_penalty(double logp_ref, double logp_current);

/// min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A)
double clipped_term(double ratio, double advantage, double epsilon);

/// Requires populated advantages (throws InvalidGroup otherwise).
double grpo_objective(const GrpoGroup& group, const GrpoConfig& cfg);

/// Mean KL estimate over the group's outputs (token-averaged in token mode).
double group_mean_kl(const GrpoGroup& group, const GrpoConfig& cfg);

/// sft_cot_loss - beta * reward_total
double grpo_composite_loss(double sft_cot_loss, double reward_total, double beta);

// ---------------------------------------------------------------------------
// Toy-policy optimisation

struct ObjectiveEvaluation {
  double objective = 0.0;
  double mean_kl = 0.0;
  std::vector<double> gradient;  // dJ/dtheta
  std::size_t clamped_ratios = 0;
};

/// J and its analytic gradient for `policy` on a sampled group whose old and
/// reference log-probabilities and advantages are already filled in
/// (logp_current is recomputed from the policy).
ObjectiveEvaluation evaluate_objective(const ToyPolicy& policy, const GrpoGroup& group, const GrpoConfig& cfg,
                                       std::optional<Token> start = std::nullopt);

class RewardEnvironment {
 public:
  virtual ~RewardEnvironment() = default;
  virtual double reward(std::span<const Token> tokens) const = 0;
  virtual std::optional<Token> start_token() const { return std::nullopt; }
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainOptions {
  std::size_t steps = 2000;
  double learning_rate = 0.05;
  std::uint64_t seed = 42;
  std::size_t inner_updates = 2;      // optimiser steps per sampled group
  std::size_t old_refresh_every = 1;  // in group batches
  std::size_t ref_refresh_every = 0;  // 0 keeps the initial policy as reference
  // Stop once the trailing-window mean reward reaches this value.
  std::optional<double> stop_at_reward;
  std::size_t reward_window = 10;
};

struct TrainLogRecord {
  std::size_t step = 0;
  double mean_reward = 0.0;
  double objective = 0.0;
  double grad_norm = 0.0;
  double mean_kl = 0.0;
};

struct TrainResult {
  ToyPolicy policy;
  std::vector<TrainLogRecord> log;
  /// First step at which the trailing-window mean reward reached stop_at_reward.
  std::optional<std::size_t> reached_at;
};

using StepCallback = std::function<void(const TrainLogRecord&)>;

/// Gradient ascent (Adam) on J. Throws DivergenceError on non-finite J or
/// parameters.
TrainResult train_toy_policy(const RewardEnvironment& env, ToyPolicy policy, const GrpoConfig& cfg,
                             const TrainOptions& options, const StepCallback& on_step = {});

}  // namespace oncoalign
