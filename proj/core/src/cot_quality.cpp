// SPDX-License-Identifier: Apache-2.0

#include "oncoalign/cot_quality.hpp"

#include <algorithm>
#include <string>

namespace oncoalign {

CotQualityScores cot_quality_vectors(const std::vector<Vector>& steps, const Vector& summary, const Vector& prompt) {
  if (steps.empty()) throw UnscoreableTrace("trace has no reasoning steps");
  CotQualityScores s;
  s.n_steps = steps.size();
  s.min_relevance = 1.0;
  s.max_prompt_overlap = -1.0;
  double rel_sum = 0.0;
  for (const auto& v : steps) {
    const double rel = cosine(v, summary);
    rel_sum += rel;
    s.min_relevance = std::min(s.min_relevance, rel);
    s.max_prompt_overlap = std::max(s.max_prompt_overlap, cosine(v, prompt));
  }
  s.avg_relevance = rel_sum / static_cast<double>(steps.size());
  // the mean can round a hair below the minimum when all terms are equal
  s.avg_relevance = std::max(s.avg_relevance, s.min_relevance);
  if (steps.size() == 1) {
    s.avg_coherence = 1.0;
  } else {
    double coh = 0.0;
    for (std::size_t i = 0; i + 1 < steps.size(); ++i) coh += cosine(steps[i], steps[i + 1]);
    s.avg_coherence = coh / static_cast<double>(steps.size() - 1);
  }
  return s;
}

CotQualityScores cot_quality(const ReasoningTrace& trace, std::string_view summary_text, std::string_view prompt_text,
                             EmbeddingProvider& provider) {
  if (trace.steps.empty()) throw UnscoreableTrace("trace has no reasoning steps");
  EmbeddingRequest req;
  req.texts = trace.steps;
  req.texts.emplace_back(summary_text);
  req.texts.emplace_back(prompt_text);
  auto resp = provider.embed(req);
  check_response(resp, req.texts.size());
  const auto n = trace.steps.size();
  std::vector<Vector> steps(resp.vectors.begin(), resp.vectors.begin() + static_cast<std::ptrdiff_t>(n));
  return cot_quality_vectors(steps, resp.vectors[n], resp.vectors[n + 1]);
}

}  // namespace oncoalign
