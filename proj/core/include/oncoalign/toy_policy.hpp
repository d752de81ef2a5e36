// SPDX-License-Identifier: Apache-2.0
//
// Desk-scale autoregressive policy: a table of logits per context, softmax
// per position. Small enough for exact log-probabilities, analytic
// gradients and finite-difference checks.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "oncoalign/random.hpp"

namespace oncoalign {

using Token = std::uint32_t;

enum class ContextMode {
  PositionOnly,   // logits depend on the position only
  PreviousToken,  // logits depend on (position, previous token or start)
};

class ToyPolicy {
 public:
  ToyPolicy(std::size_t vocab_size, std::size_t length, ContextMode mode = ContextMode::PositionOnly);
  ToyPolicy(std::size_t vocab_size, std::size_t length, ContextMode mode, std::vector<double> parameters);

  /// Parameters drawn from N(0, scale^2).
  static ToyPolicy random(std::size_t vocab_size, std::size_t length, ContextMode mode, Rng& rng,
                          double scale = 1.0);

  std::size_t vocab_size() const { return vocab_; }
  std::size_t length() const { return length_; }
  ContextMode mode() const { return mode_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::size_t context_count() const { return params_.size() / vocab_; }

  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }

  /// Row of the logit table used at `position` after `prev` (nullopt = start).
  std::size_t context_index(std::size_t position, std::optional<Token> prev) const;

  std::vector<double> distribution(std::size_t position, std::optional<Token> prev) const;
  std::vector<double> log_distribution(std::size_t position, std::optional<Token> prev) const;

  /// Per-token log-probabilities of `tokens` with teacher forcing from `start`.
  std::vector<double> token_log_probs(std::span<const Token> tokens,
                                      std::optional<Token> start = std::nullopt) const;
  double sequence_log_prob(std::span<const Token> tokens, std::optional<Token> start = std::nullopt) const;

  /// One distribution per position of `tokens`, conditioned on the true prefix.
  std::vector<std::vector<double>> teacher_forced_distributions(
      std::span<const Token> tokens, std::optional<Token> start = std::nullopt) const;

  std::vector<Token> sample(Rng& rng, std::optional<Token> start = std::nullopt) const;

  /// grad += sum_t weights[t] * d log pi(tokens[t] | context_t) / d theta
  void accumulate_log_prob_gradient(std::span<const Token> tokens, std::span<const double> weights,
                                    std::span<double> grad, std::optional<Token> start = std::nullopt) const;

  /// grad += sum_t weights[t] * sum_k targets[t][k] * d log pi(k | context_t) / d theta,
  /// with contexts teacher-forced along `prefix`.
  void accumulate_expected_log_prob_gradient(std::span<const Token> prefix,
                                             const std::vector<std::vector<double>>& targets,
                                             std::span<const double> weights, std::span<double> grad,
                                             std::optional<Token> start = std::nullopt) const;

 private:
  std::span<const double> logits(std::size_t context) const;

  std::size_t vocab_;
  std::size_t length_;
  ContextMode mode_;
  std::vector<double> params_;
};

}  // namespace oncoalign
