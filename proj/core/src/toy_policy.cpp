// SPDX-License-Identifier: Apache-2.0

#include "oncoalign/toy_policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oncoalign {

namespace {

std::size_t contexts_for(std::size_t vocab, std::size_t length, ContextMode mode) {
  return mode == ContextMode::PositionOnly ? length : length * (vocab + 1);
}

// log-softmax with max subtraction
void log_softmax(std::span<const double> logits, std::vector<double>& out) {
  out.resize(logits.size());
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - m);
  const double lz = m + std::log(z);
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lz;
}

}  // namespace

ToyPolicy::ToyPolicy(std::size_t vocab_size, std::size_t length, ContextMode mode)
    : ToyPolicy(vocab_size, length, mode,
                std::vector<double>(contexts_for(vocab_size, length, mode) * vocab_size, 0.0)) {}

ToyPolicy::ToyPolicy(std::size_t vocab_size, std::size_t length, ContextMode mode, std::vector<double> parameters)
    : vocab_(vocab_size), length_(length), mode_(mode), params_(std::move(parameters)) {
  if (vocab_ < 2) throw std::invalid_argument("toy policy needs at least two tokens");
  if (length_ < 1) throw std::invalid_argument("toy policy needs length >= 1");
  if (params_.size() != contexts_for(vocab_, length_, mode_) * vocab_) {
    throw std::invalid_argument("toy policy parameter count does not match its shape");
  }
}

ToyPolicy ToyPolicy::random(std::size_t vocab_size, std::size_t length, ContextMode mode, Rng& rng, double scale) {
  std::vector<double> p(contexts_for(vocab_size, length, mode) * vocab_size);
  for (double& v : p) v = scale * standard_normal(rng);
  return ToyPolicy(vocab_size, length, mode, std::move(p));
}

std::size_t ToyPolicy::context_index(std::size_t position, std::optional<Token> prev) const {
  if (position >= length_) throw std::out_of_range("position beyond policy length");
  if (mode_ == ContextMode::PositionOnly) return position;
  const std::size_t slot = prev ? static_cast<std::size_t>(*prev) + 1 : 0;
  if (slot > vocab_) throw std::out_of_range("previous token outside vocabulary");
  return position * (vocab_ + 1) + slot;
}

std::span<const double> ToyPolicy::logits(std::size_t context) const {
  return std::span<const double>(params_).subspan(context * vocab_, vocab_);
}

std::vector<double> ToyPolicy::log_distribution(std::size_t position, std::optional<Token> prev) const {
  std::vector<double> out;
  log_softmax(logits(context_index(position, prev)), out);
  return out;
}

std::vector<double> ToyPolicy::distribution(std::size_t position, std::optional<Token> prev) const {
  auto out = log_distribution(position, prev);
  for (double& v : out) v = std::exp(v);
  return out;
}

std::vector<double> ToyPolicy::token_log_probs(std::span<const Token> tokens, std::optional<Token> start) const {
  std::vector<double> out;
  out.reserve(tokens.size());
  std::optional<Token> prev = start;
  std::vector<double> lp;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (tokens[t] >= vocab_) throw std::out_of_range("token outside vocabulary");
    log_softmax(logits(context_index(t, prev)), lp);
    out.push_back(lp[tokens[t]]);
    prev = tokens[t];
  }
  return out;
}

double ToyPolicy::sequence_log_prob(std::span<const Token> tokens, std::optional<Token> start) const {
  double s = 0.0;
  for (double v : token_log_probs(tokens, start)) s += v;
  return s;
}

std::vector<std::vector<double>> ToyPolicy::teacher_forced_distributions(std::span<const Token> tokens,
                                                                         std::optional<Token> start) const {
  std::vector<std::vector<double>> out;
  out.reserve(tokens.size());
  std::optional<Token> prev = start;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    out.push_back(distribution(t, prev));
    prev = tokens[t];
  }
  return out;
}

std::vector<Token> ToyPolicy::sample(Rng& rng, std::optional<Token> start) const {
  std::vector<Token> seq;
  seq.reserve(length_);
  std::optional<Token> prev = start;
  for (std::size_t t = 0; t < length_; ++t) {
    const auto p = distribution(t, prev);
    const auto tok = static_cast<Token>(sample_weighted(rng, p));
    seq.push_back(tok);
    prev = tok;
  }
  return seq;
}

void ToyPolicy::accumulate_log_prob_gradient(std::span<const Token> tokens, std::span<const double> weights,
                                             std::span<double> grad, std::optional<Token> start) const {
  if (weights.size() != tokens.size()) throw std::invalid_argument("one weight per token required");
  if (grad.size() != params_.size()) throw std::invalid_argument("gradient size mismatch");
  std::optional<Token> prev = start;
  std::vector<double> lp;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const std::size_t ctx = context_index(t, prev);
    prev = tokens[t];
    if (weights[t] == 0.0) continue;
    log_softmax(logits(ctx), lp);
    double* g = grad.data() + ctx * vocab_;
    // d log softmax(l)[k] / d l_v = [v == k] - p_v
    for (std::size_t v = 0; v < vocab_; ++v) g[v] -= weights[t] * std::exp(lp[v]);
    g[tokens[t]] += weights[t];
  }
}

void ToyPolicy::accumulate_expected_log_prob_gradient(std::span<const Token> prefix,
                                                      const std::vector<std::vector<double>>& targets,
                                                      std::span<const double> weights, std::span<double> grad,
                                                      std::optional<Token> start) const {
  if (targets.size() != prefix.size() || weights.size() != prefix.size()) {
    throw std::invalid_argument("one target distribution and weight per position required");
  }
  if (grad.size() != params_.size()) throw std::invalid_argument("gradient size mismatch");
  std::optional<Token> prev = start;
  std::vector<double> lp;
  for (std::size_t t = 0; t < prefix.size(); ++t) {
    const std::size_t ctx = context_index(t, prev);
    prev = prefix[t];
    if (weights[t] == 0.0) continue;
    if (targets[t].size() != vocab_) throw std::invalid_argument("target distribution size mismatch");
    log_softmax(logits(ctx), lp);
    double mass = 0.0;
    for (double q : targets[t]) mass += q;
    double* g = grad.data() + ctx * vocab_;
    for (std::size_t v = 0; v < vocab_; ++v) g[v] += weights[t] * (targets[t][v] - mass * std::exp(lp[v]));
  }
}

}  // namespace oncoalign
