// SPDX-License-Identifier: Apache-2.0

#include "oncoalign/sft.hpp"

#include <cmath>
#include <string>

namespace oncoalign {

namespace {

void check_distribution(const std::vector<double>& p, std::size_t position) {
  double mass = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw DomainError("distribution at position " + std::to_string(position) + " has an invalid entry");
    }
    mass += v;
  }
  if (std::abs(mass - 1.0) > kDistributionTolerance) {
    throw DomainError("distribution at position " + std::to_string(position) + " sums to " + std::to_string(mass));
  }
}

std::optional<Token> start_of(const SftExample& ex) {
  if (ex.input.empty()) return std::nullopt;
  return ex.input.back();
}

bool floored(double p, double floor) { return !(p > 0.0) || std::log(p) < floor; }

}  // namespace

LossValue token_nll(const Distributions& per_position, std::span<const Token> targets, double log_prob_floor) {
  if (per_position.size() != targets.size()) throw DomainError("one distribution per target position required");
  LossValue out;
  if (targets.empty()) return out;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const auto& p = per_position[t];
    check_distribution(p, t);
    if (targets[t] >= p.size()) throw DomainError("target token outside distribution support");
    const double prob = p[targets[t]];
    double lp = prob > 0.0 ? std::log(prob) : log_prob_floor;
    if (lp < log_prob_floor) lp = log_prob_floor;
    if (floored(prob, log_prob_floor)) ++out.floored_tokens;
    out.value -= lp;
  }
  out.value /= static_cast<double>(targets.size());
  if (out.value < 0.0) out.value = 0.0;  // -0.0 and rounding below zero
  return out;
}

LossValue cot_divergence(const Distributions& student, std::span<const Token> teacher_trace, double log_prob_floor) {
  return token_nll(student, teacher_trace, log_prob_floor);
}

LossValue cot_divergence_kl(const Distributions& student, const Distributions& teacher, double log_prob_floor) {
  if (student.size() != teacher.size()) throw DomainError("student and teacher lengths differ");
  LossValue out;
  if (student.empty()) return out;
  for (std::size_t t = 0; t < student.size(); ++t) {
    check_distribution(student[t], t);
    check_distribution(teacher[t], t);
    if (student[t].size() != teacher[t].size()) throw DomainError("student and teacher vocabularies differ");
    double kl = 0.0;
    bool hit_floor = false;
    for (std::size_t k = 0; k < teacher[t].size(); ++k) {
      const double q = teacher[t][k];
      if (q <= 0.0) continue;
      double ls = student[t][k] > 0.0 ? std::log(student[t][k]) : log_prob_floor;
      if (ls < log_prob_floor) {
        ls = log_prob_floor;
        hit_floor = true;
      }
      kl += q * (std::log(q) - ls);
    }
    if (hit_floor) ++out.floored_tokens;
    out.value += std::max(kl, 0.0);
  }
  out.value /= static_cast<double>(student.size());
  return out;
}

double combine_sft_cot(double l_sft, double l_cot, double lambda_cot) {
  if (!(lambda_cot >= 0.0) || !std::isfinite(lambda_cot)) throw DomainError("lambda_cot must be finite and >= 0");
  return l_sft + lambda_cot * l_cot;
}

void SftBatch::validate() const {
  if (examples.empty()) throw DomainError("SFT batch is empty");
  if (!(lambda_cot >= 0.0) || !std::isfinite(lambda_cot)) throw DomainError("lambda_cot must be finite and >= 0");
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    const auto where = "example " + std::to_string(i);
    if (ex.target.empty()) throw DomainError(where + ": empty target sequence");
    if (ex.teacher_distributions) {
      if (!ex.teacher_trace) throw DomainError(where + ": teacher distributions without a teacher trace");
      if (ex.teacher_distributions->size() != ex.teacher_trace->size()) {
        throw DomainError(where + ": teacher distributions not aligned to the trace");
      }
    }
  }
}

SftLoss sft_cot_loss(const SftBatch& batch, const ToyPolicy& policy, const SftOptions& opts) {
  batch.validate();
  SftLoss out;
  double cot_sum = 0.0;
  for (const auto& ex : batch.examples) {
    const auto start = start_of(ex);
    const auto y = token_nll(policy.teacher_forced_distributions(ex.target, start), ex.target, opts.log_prob_floor);
    out.sft += y.value;
    out.floored_tokens += y.floored_tokens;
    if (!ex.teacher_trace || ex.teacher_trace->empty()) continue;
    const auto student = policy.teacher_forced_distributions(*ex.teacher_trace, start);
    const auto z = (opts.divergence == CotDivergence::TeacherKl && ex.teacher_distributions)
                       ? cot_divergence_kl(student, *ex.teacher_distributions, opts.log_prob_floor)
                       : cot_divergence(student, *ex.teacher_trace, opts.log_prob_floor);
    cot_sum += z.value;
    out.floored_tokens += z.floored_tokens;
    ++out.cot_examples;
  }
  out.sft /= static_cast<double>(batch.examples.size());
  out.cot = out.cot_examples ? cot_sum / static_cast<double>(out.cot_examples) : 0.0;
  out.total = combine_sft_cot(out.sft, out.cot, batch.lambda_cot);
  return out;
}

std::vector<double> sft_cot_gradient(const SftBatch& batch, const ToyPolicy& policy, const SftOptions& opts) {
  batch.validate();
  std::vector<double> grad(policy.parameter_count(), 0.0);
  std::size_t cot_examples = 0;
  for (const auto& ex : batch.examples) {
    if (ex.teacher_trace && !ex.teacher_trace->empty()) ++cot_examples;
  }
  const double n = static_cast<double>(batch.examples.size());

  for (const auto& ex : batch.examples) {
    const auto start = start_of(ex);
    // Loss is -mean log p, so each unfloored position carries weight -1/(n |y|).
    const auto lp = policy.token_log_probs(ex.target, start);
    std::vector<double> w(ex.target.size(), 0.0);
    for (std::size_t t = 0; t < w.size(); ++t) {
      if (lp[t] >= opts.log_prob_floor) w[t] = -1.0 / (n * static_cast<double>(w.size()));
    }
    policy.accumulate_log_prob_gradient(ex.target, w, grad, start);

    if (!ex.teacher_trace || ex.teacher_trace->empty()) continue;
    const auto& z = *ex.teacher_trace;
    const double scale = -batch.lambda_cot / (static_cast<double>(cot_examples) * static_cast<double>(z.size()));
    if (opts.divergence == CotDivergence::TeacherKl && ex.teacher_distributions) {
      // KL(q || s) = const - sum_k q_k log s_k; floored entries are constant.
      const auto student = policy.teacher_forced_distributions(z, start);
      Distributions q = *ex.teacher_distributions;
      for (std::size_t t = 0; t < z.size(); ++t) {
        for (std::size_t k = 0; k < q[t].size(); ++k) {
          if (!(student[t][k] > 0.0 && std::log(student[t][k]) >= opts.log_prob_floor)) q[t][k] = 0.0;
        }
      }
      const std::vector<double> wz(z.size(), scale);
      policy.accumulate_expected_log_prob_gradient(z, q, wz, grad, start);
    } else {
      const auto lz = policy.token_log_probs(z, start);
      std::vector<double> wz(z.size(), 0.0);
      for (std::size_t t = 0; t < z.size(); ++t) {
        if (lz[t] >= opts.log_prob_floor) wz[t] = scale;
      }
      policy.accumulate_log_prob_gradient(z, wz, grad, start);
    }
  }
  return grad;
}

}  // namespace oncoalign
