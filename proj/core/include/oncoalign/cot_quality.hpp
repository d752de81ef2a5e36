// SPDX-License-Identifier: Apache-2.0
//
// Embedding-based chain-of-thought quality: step-to-summary relevance,
// adjacent-step coherence and overlap with the prompt instruction.

#pragma once

#include <stdexcept>
#include <string_view>
#include <vector>

#include "oncoalign/embedding.hpp"
#include "oncoalign/trace_codec.hpp"

namespace oncoalign {

class UnscoreableTrace : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct CotQualityScores {
  double avg_relevance = 0.0;
  double min_relevance = 0.0;
  double avg_coherence = 0.0;  // 1.0 for a single step
  double max_prompt_overlap = 0.0;
  std::size_t n_steps = 0;
};

/// Scores from precomputed vectors. Throws UnscoreableTrace with no steps.
CotQualityScores cot_quality_vectors(const std::vector<Vector>& steps, const Vector& summary, const Vector& prompt);

/// Embeds the trace steps, summary and prompt in one request.
CotQualityScores cot_quality(const ReasoningTrace& trace, std::string_view summary_text, std::string_view prompt_text,
                             EmbeddingProvider& provider);

}  // namespace oncoalign
