// SPDX-License-Identifier: Apache-2.0
//
// Supervised multi-task loss with a chain-of-thought distillation term:
//
//   L = L_SFT(y) + lambda_cot * L_CoT(z, z*)
//
// Both terms are mean per-token losses under teacher forcing. Status and
// months are serialized into the target token stream; there are no
// separate classification or regression heads.

#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "oncoalign/toy_policy.hpp"

namespace oncoalign {

class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kLogProbFloor = -30.0;
inline constexpr double kDistributionTolerance = 1e-9;

using Distributions = std::vector<std::vector<double>>;

struct LossValue {
  double value = 0.0;
  std::size_t floored_tokens = 0;  // positions whose log-probability hit the floor
};

/// Mean -log p(target_t). Throws DomainError on length mismatch, a token
/// outside a distribution, or a distribution not summing to 1 (+-1e-9).
LossValue token_nll(const Distributions& per_position, std::span<const Token> targets,
                    double log_prob_floor = kLogProbFloor);

/// Cross-entropy of the teacher trace under the student (same as token_nll).
LossValue cot_divergence(const Distributions& student, std::span<const Token> teacher_trace,
                         double log_prob_floor = kLogProbFloor);

/// Mean KL(teacher || student) per position.
LossValue cot_divergence_kl(const Distributions& student, const Distributions& teacher,
                            double log_prob_floor = kLogProbFloor);

/// l_sft + lambda_cot * l_cot; throws DomainError for negative or non-finite lambda.
double combine_sft_cot(double l_sft, double l_cot, double lambda_cot);

enum class CotDivergence { CrossEntropy, TeacherKl };

struct SftExample {
  std::vector<Token> input;
  std::vector<Token> target;
  std::optional<std::vector<Token>> teacher_trace;
  // Soft teacher distributions aligned to teacher_trace; used by TeacherKl.
  std::optional<Distributions> teacher_distributions;
};

struct SftBatch {
  std::vector<SftExample> examples;
  double lambda_cot = 0.5;

  /// Nonempty batch and targets, lambda >= 0, teacher distributions aligned.
  void validate() const;
};

struct SftOptions {
  CotDivergence divergence = CotDivergence::CrossEntropy;
  double log_prob_floor = kLogProbFloor;
};

struct SftLoss {
  double sft = 0.0;
  double cot = 0.0;  // 0 when no example carries a teacher trace
  double total = 0.0;
  std::size_t floored_tokens = 0;
  std::size_t cot_examples = 0;
};

/// Loss of a toy policy on a batch. Target and trace sequences are each
/// decoded from the start token input.back() (the start slot when input is
/// empty). Per-example means are averaged over the batch; L_CoT averages
/// over examples that carry a trace.
SftLoss sft_cot_loss(const SftBatch& batch, const ToyPolicy& policy, const SftOptions& opts = {});

/// d(total)/d(theta) of sft_cot_loss. Floored positions contribute no gradient.
std::vector<double> sft_cot_gradient(const SftBatch& batch, const ToyPolicy& policy, const SftOptions& opts = {});

}  // namespace oncoalign
