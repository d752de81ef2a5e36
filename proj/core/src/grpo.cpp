// SPDX-License-Identifier: Apache-2.0

#include "oncoalign/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace oncoalign {

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// d/d(ratio) of clipped_term, zero on the flat (clipped) branch.
double surrogate_slope(double ratio, double advantage, double epsilon) {
  const double unclipped = ratio * advantage;
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon) * advantage;
  return unclipped <= clipped ? advantage : 0.0;
}

// One output's contribution to J and d(contribution)/d(logp_current[t]).
struct OutputTerm {
  double value = 0.0;
  double kl = 0.0;
  std::vector<double> token_weights;
  std::size_t clamped = 0;
};

OutputTerm output_term(const GroupOutput& o, double advantage, const GrpoConfig& cfg) {
  OutputTerm term;
  const std::size_t n = o.logp_current.size();
  term.token_weights.assign(n, 0.0);

  if (cfg.ratio_granularity == RatioGranularity::SequenceLevel) {
    const double cur = o.total_current();
    const auto ratio = importance_ratio(cur, o.total_old(), cfg.max_ratio);
    const double kl = kl_penalty(o.total_ref(), cur);
    term.value = clipped_term(ratio.value, advantage, cfg.clip_epsilon) - cfg.kl_coeff * kl;
    term.kl = kl;
    term.clamped = ratio.clamped ? 1 : 0;
    const double d_surrogate =
        ratio.clamped ? 0.0 : surrogate_slope(ratio.value, advantage, cfg.clip_epsilon) * ratio.value;
    const double rho = std::exp(o.total_ref() - cur);
    const double d = d_surrogate + cfg.kl_coeff * (rho - 1.0);
    std::fill(term.token_weights.begin(), term.token_weights.end(), d);
    return term;
  }

  if (n == 0) return term;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t t = 0; t < n; ++t) {
    const auto ratio = importance_ratio(o.logp_current[t], o.logp_old[t], cfg.max_ratio);
    const double kl = kl_penalty(o.logp_ref[t], o.logp_current[t]);
    term.value += inv_n * (clipped_term(ratio.value, advantage, cfg.clip_epsilon) - cfg.kl_coeff * kl);
    term.kl += inv_n * kl;
    term.clamped += ratio.clamped ? 1 : 0;
    const double d_surrogate =
        ratio.clamped ? 0.0 : surrogate_slope(ratio.value, advantage, cfg.clip_epsilon) * ratio.value;
    const double rho = std::exp(o.logp_ref[t] - o.logp_current[t]);
    term.token_weights[t] = inv_n * (d_surrogate + cfg.kl_coeff * (rho - 1.0));
  }
  return term;
}

const std::vector<double>& require_advantages(const GrpoGroup& group) {
  if (!group.advantages()) throw InvalidGroup("advantages have not been computed for group " + group.query_id());
  return *group.advantages();
}

}  // namespace

void GrpoConfig::validate() const {
  if (group_size < 2) throw std::invalid_argument("group size must be at least 2");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw std::invalid_argument("clip epsilon must be in (0, 1)");
  if (!(kl_coeff >= 0.0) || !std::isfinite(kl_coeff)) throw std::invalid_argument("KL coefficient must be >= 0");
  if (!(std_guard >= 0.0)) throw std::invalid_argument("std guard must be >= 0");
  if (!(max_ratio > 1.0)) throw std::invalid_argument("max ratio must exceed 1");
}

GroupOutput GroupOutput::from_totals(double logp_current, double logp_old, double logp_ref, double reward) {
  return GroupOutput{{}, {logp_current}, {logp_old}, {logp_ref}, reward};
}

double GroupOutput::total_current() const { return sum(logp_current); }
double GroupOutput::total_old() const { return sum(logp_old); }
double GroupOutput::total_ref() const { return sum(logp_ref); }

GrpoGroup::GrpoGroup(std::string query_id, std::vector<GroupOutput> outputs)
    : query_id_(std::move(query_id)), outputs_(std::move(outputs)) {
  if (outputs_.empty()) throw InvalidGroup("group " + query_id_ + " has no outputs");
  for (std::size_t i = 0; i < outputs_.size(); ++i) {
    const auto& o = outputs_[i];
    const auto where = "group " + query_id_ + " output " + std::to_string(i);
    if (o.logp_current.size() != o.logp_old.size() || o.logp_current.size() != o.logp_ref.size()) {
      throw InvalidGroup(where + ": log-probability vectors differ in length");
    }
    if (!o.tokens.empty() && o.tokens.size() != o.logp_current.size()) {
      throw InvalidGroup(where + ": one log-probability per token required");
    }
    if (!all_finite(o.logp_current) || !all_finite(o.logp_old) || !all_finite(o.logp_ref) ||
        !std::isfinite(o.reward)) {
      throw InvalidGroup(where + ": non-finite log-probability or reward");
    }
  }
}

std::vector<double> GrpoGroup::rewards() const {
  std::vector<double> r;
  r.reserve(outputs_.size());
  for (const auto& o : outputs_) r.push_back(o.reward);
  return r;
}

void GrpoGroup::compute_advantages(double std_guard) { advantages_ = normalize_advantages(rewards(), std_guard); }

void GrpoGroup::set_advantages(std::vector<double> advantages) {
  if (advantages.size() != outputs_.size()) throw InvalidGroup("one advantage per output required");
  if (!all_finite(advantages)) throw InvalidGroup("non-finite advantage");
  advantages_ = std::move(advantages);
}

std::vector<double> normalize_advantages(std::span<const double> rewards, double std_guard) {
  std::vector<double> out(rewards.size(), 0.0);
  if (rewards.empty()) return out;
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double std = std::sqrt(var / n);
  if (!(std >= std_guard) || std == 0.0) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / std;
  return out;
}

Ratio importance_ratio(double logp_current, double logp_old, double max_ratio) {
  const double diff = logp_current - logp_old;
  if (diff > std::log(max_ratio)) return {max_ratio, true};
  return {std::exp(diff), false};
}

double kl_penalty(double logp_ref, double logp_current) {
  // rho - log(rho) - 1 = expm1(d) - d with d = log(rho); exact near rho = 1.
  const double d = logp_ref - logp_current;
  return std::max(0.0, std::expm1(d) - d);
}

double clipped_term(double ratio, double advantage, double epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

double grpo_objective(const GrpoGroup& group, const GrpoConfig& cfg) {
  const auto& adv = require_advantages(group);
  double j = 0.0;
  for (std::size_t i = 0; i < group.size(); ++i) j += output_term(group.outputs()[i], adv[i], cfg).value;
  return j / static_cast<double>(group.size());
}

double group_mean_kl(const GrpoGroup& group, const GrpoConfig& cfg) {
  double kl = 0.0;
  for (const auto& o : group.outputs()) kl += output_term(o, 0.0, cfg).kl;
  return kl / static_cast<double>(group.size());
}

double grpo_composite_loss(double sft_cot_loss, double reward_total, double beta) {
  return sft_cot_loss - beta * reward_total;
}

ObjectiveEvaluation evaluate_objective(const ToyPolicy& policy, const GrpoGroup& group, const GrpoConfig& cfg,
                                       std::optional<Token> start) {
  const auto& adv = require_advantages(group);
  ObjectiveEvaluation eval;
  eval.gradient.assign(policy.parameter_count(), 0.0);
  const double inv_g = 1.0 / static_cast<double>(group.size());

  for (std::size_t i = 0; i < group.size(); ++i) {
    GroupOutput o = group.outputs()[i];
    if (o.tokens.empty()) throw InvalidGroup("evaluate_objective needs token sequences");
    o.logp_current = policy.token_log_probs(o.tokens, start);
    const auto term = output_term(o, adv[i], cfg);
    eval.objective += inv_g * term.value;
    eval.mean_kl += inv_g * term.kl;
    eval.clamped_ratios += term.clamped;
    std::vector<double> w = term.token_weights;
    for (double& x : w) x *= inv_g;
    policy.accumulate_log_prob_gradient(o.tokens, w, eval.gradient, start);
  }
  return eval;
}

// ---------------------------------------------------------------------------

namespace {

class Adam {
 public:
  explicit Adam(std::size_t n, double lr) : lr_(lr), m_(n, 0.0), v_(n, 0.0) {}

  // Ascent step: theta += lr * m_hat / (sqrt(v_hat) + eps)
  void ascend(std::span<double> theta, const std::vector<double>& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      theta[i] += lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kEps);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  double lr_;
  std::size_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TrainResult train_toy_policy(const RewardEnvironment& env, ToyPolicy policy, const GrpoConfig& cfg,
                             const TrainOptions& options, const StepCallback& on_step) {
  cfg.validate();
  if (options.inner_updates == 0) throw std::invalid_argument("inner_updates must be >= 1");
  if (options.old_refresh_every == 0) throw std::invalid_argument("old_refresh_every must be >= 1");

  Rng rng(options.seed);
  Adam optimizer(policy.parameter_count(), options.learning_rate);
  ToyPolicy old_policy = policy;
  ToyPolicy ref_policy = policy;
  const auto start = env.start_token();

  TrainResult result{policy, {}, std::nullopt};
  std::vector<double> recent;

  for (std::size_t step = 0; step < options.steps; ++step) {
    if (step % options.old_refresh_every == 0) old_policy = policy;
    if (options.ref_refresh_every > 0 && step > 0 && step % options.ref_refresh_every == 0) ref_policy = policy;

    std::vector<GroupOutput> outputs;
    outputs.reserve(cfg.group_size);
    for (std::size_t i = 0; i < cfg.group_size; ++i) {
      GroupOutput o;
      o.tokens = old_policy.sample(rng, start);
      o.logp_old = old_policy.token_log_probs(o.tokens, start);
      o.logp_ref = ref_policy.token_log_probs(o.tokens, start);
      o.logp_current = policy.token_log_probs(o.tokens, start);
      o.reward = env.reward(o.tokens);
      outputs.push_back(std::move(o));
    }
    GrpoGroup group("step-" + std::to_string(step), std::move(outputs));
    group.compute_advantages(cfg.std_guard);

    TrainLogRecord rec;
    rec.step = step;
    const auto rewards = group.rewards();
    rec.mean_reward = std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(rewards.size());

    for (std::size_t k = 0; k < options.inner_updates; ++k) {
      const auto eval = evaluate_objective(policy, group, cfg, start);
      if (!std::isfinite(eval.objective)) {
        throw DivergenceError("objective became non-finite at step " + std::to_string(step));
      }
      if (k == 0) {
        rec.objective = eval.objective;
        rec.grad_norm = norm(eval.gradient);
        rec.mean_kl = eval.mean_kl;
      }
      optimizer.ascend(policy.parameters(), eval.gradient);
    }
    for (double p : policy.parameters()) {
      if (!std::isfinite(p)) throw DivergenceError("parameters became non-finite at step " + std::to_string(step));
    }

    result.log.push_back(rec);
    if (on_step) on_step(rec);

    recent.push_back(rec.mean_reward);
    if (recent.size() > options.reward_window) recent.erase(recent.begin());
    if (options.stop_at_reward && recent.size() == options.reward_window) {
      const double window_mean =
          std::accumulate(recent.begin(), recent.end(), 0.0) / static_cast<double>(recent.size());
      if (window_mean >= *options.stop_at_reward) {
        result.reached_at = step;
        break;
      }
    }
  }
  result.policy = std::move(policy);
  return result;
}

}  // namespace oncoalign
