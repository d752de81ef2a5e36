// SPDX-License-Identifier: Apache-2.0
//
// Text-generation, classification and regression metrics. Text metrics work
// on whitespace tokens with no case folding.

#pragma once

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "oncoalign/clinical_records.hpp"
#include "oncoalign/embedding.hpp"

namespace oncoalign {

class EmptyCorpus : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class AllMissing : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kBleuSmoothing = 1e-9;

struct BleuResult {
  double score = 0.0;  // 0..100
  std::array<double, 4> precisions{};
  std::array<bool, 4> order_used{};  // orders with no candidate n-grams are dropped
  double brevity_penalty = 0.0;
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;
};

/// Corpus BLEU, n = 1..4, uniform weights over the orders used, clipped
/// counts, brevity penalty, zero match counts smoothed to eps / total.
/// Throws EmptyCorpus for no pairs and std::invalid_argument on length mismatch.
BleuResult bleu_detail(std::span<const std::string> candidates, std::span<const std::string> references);
double bleu(std::span<const std::string> candidates, std::span<const std::string> references);

struct RougeScores {
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
};

/// F-measures (beta = 1). When neither side has an n-gram of some order the
/// score is 1 for identical token sequences and 0 otherwise.
RougeScores rouge(std::string_view candidate, std::string_view reference);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

/// Greedy max-cosine segment matching; F1 of precision and recall, then
/// (F1 - b) / (1 - b) when a baseline b is given.
double embed_f1_vectors(const std::vector<Vector>& candidate, const std::vector<Vector>& reference,
                        std::optional<double> rescale_baseline = std::nullopt);

/// Segments are reasoning steps (see split_steps).
double embed_f1(std::string_view candidate, std::string_view reference, EmbeddingProvider& provider,
                std::optional<double> rescale_baseline = std::nullopt);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct ClassificationReport {
  ClassMetrics living;
  ClassMetrics deceased;  // positive class
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
  double accuracy = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t n_scoreable = 0;
  std::size_t n_missing = 0;
};

/// Missing predictions are counted and excluded; zero divisions give 0.
/// Throws AllMissing when nothing is scoreable.
ClassificationReport classification_report(std::span<const std::optional<SurvivalStatus>> predictions,
                                           std::span<const SurvivalStatus> truths);

struct RegressionReport {
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t n_scoreable = 0;
  std::size_t n_missing = 0;
};

RegressionReport regression_report(std::span<const std::optional<double>> predictions,
                                   std::span<const double> truths);

}  // namespace oncoalign
