// SPDX-License-Identifier: Apache-2.0

#include "oncoalign/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "oncoalign/text_util.hpp"
#include "oncoalign/trace_codec.hpp"

namespace oncoalign {

namespace {

using Tokens = std::vector<std::string>;
using NgramCounts = std::map<std::vector<std::string_view>, std::size_t>;

Tokens tokens_of(std::string_view text) {
  Tokens out;
  for (auto t : split_whitespace(text)) out.emplace_back(t);
  return out;
}

NgramCounts ngrams(const Tokens& toks, std::size_t n) {
  NgramCounts out;
  if (toks.size() < n) return out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    std::vector<std::string_view> key(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                      toks.begin() + static_cast<std::ptrdiff_t>(i + n));
    ++out[key];
  }
  return out;
}

std::size_t overlap(const NgramCounts& cand, const NgramCounts& ref) {
  std::size_t m = 0;
  for (const auto& [g, c] : cand) {
    const auto it = ref.find(g);
    if (it != ref.end()) m += std::min(c, it->second);
  }
  return m;
}

double f_measure(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

double rouge_n(const Tokens& c, const Tokens& r, std::size_t n) {
  const std::size_t nc = c.size() >= n ? c.size() - n + 1 : 0;
  const std::size_t nr = r.size() >= n ? r.size() - n + 1 : 0;
  if (nc == 0 && nr == 0) return c == r ? 1.0 : 0.0;
  if (nc == 0 || nr == 0) return 0.0;
  const double m = static_cast<double>(overlap(ngrams(c, n), ngrams(r, n)));
  return f_measure(m / static_cast<double>(nc), m / static_cast<double>(nr));
}

}  // namespace

BleuResult bleu_detail(std::span<const std::string> candidates, std::span<const std::string> references) {
  if (candidates.size() != references.size()) throw std::invalid_argument("BLEU needs one reference per candidate");
  if (candidates.empty()) throw EmptyCorpus("BLEU over an empty corpus");

  std::array<std::size_t, 4> matches{};
  std::array<std::size_t, 4> totals{};
  BleuResult r;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto c = tokens_of(candidates[i]);
    const auto ref = tokens_of(references[i]);
    r.candidate_length += c.size();
    r.reference_length += ref.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      if (c.size() < n) continue;
      totals[n - 1] += c.size() - n + 1;
      matches[n - 1] += overlap(ngrams(c, n), ngrams(ref, n));
    }
  }

  if (r.candidate_length == 0) return r;  // brevity penalty limit is 0
  r.brevity_penalty = r.candidate_length > r.reference_length
                          ? 1.0
                          : std::exp(1.0 - static_cast<double>(r.reference_length) /
                                               static_cast<double>(r.candidate_length));
  double log_sum = 0.0;
  std::size_t used = 0;
  for (std::size_t n = 0; n < 4; ++n) {
    if (totals[n] == 0) continue;
    r.order_used[n] = true;
    ++used;
    const double m = matches[n] == 0 ? kBleuSmoothing : static_cast<double>(matches[n]);
    r.precisions[n] = m / static_cast<double>(totals[n]);
    log_sum += std::log(r.precisions[n]);
  }
  r.score = 100.0 * r.brevity_penalty * std::exp(log_sum / static_cast<double>(used));
  return r;
}

double bleu(std::span<const std::string> candidates, std::span<const std::string> references) {
  return bleu_detail(candidates, references).score;
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeScores rouge(std::string_view candidate, std::string_view reference) {
  const auto c = tokens_of(candidate);
  const auto r = tokens_of(reference);
  RougeScores s;
  s.rouge1 = rouge_n(c, r, 1);
  s.rouge2 = rouge_n(c, r, 2);
  if (c.empty() && r.empty()) {
    s.rougeL = 1.0;
  } else if (!c.empty() && !r.empty()) {
    const double l = static_cast<double>(lcs_length(c, r));
    s.rougeL = f_measure(l / static_cast<double>(c.size()), l / static_cast<double>(r.size()));
  }
  return s;
}

double embed_f1_vectors(const std::vector<Vector>& candidate, const std::vector<Vector>& reference,
                        std::optional<double> rescale_baseline) {
  if (candidate.empty() || reference.empty()) throw std::invalid_argument("embed_f1 needs segments on both sides");
  auto greedy = [](const std::vector<Vector>& from, const std::vector<Vector>& to) {
    double s = 0.0;
    for (const auto& u : from) {
      double best = -1.0;
      for (const auto& v : to) best = std::max(best, cosine(u, v));
      s += best;
    }
    return s / static_cast<double>(from.size());
  };
  const double p = greedy(candidate, reference);
  const double r = greedy(reference, candidate);
  const double f1 = f_measure(p, r);
  if (!rescale_baseline) return f1;
  const double b = *rescale_baseline;
  if (!(b < 1.0)) throw std::invalid_argument("rescale baseline must be below 1");
  return (f1 - b) / (1.0 - b);
}

double embed_f1(std::string_view candidate, std::string_view reference, EmbeddingProvider& provider,
                std::optional<double> rescale_baseline) {
  const auto cs = split_steps(candidate);
  const auto rs = split_steps(reference);
  if (cs.empty() || rs.empty()) {
    // Nothing to match: raw F1 is 0.
    if (!rescale_baseline) return 0.0;
    return -*rescale_baseline / (1.0 - *rescale_baseline);
  }
  EmbeddingRequest req;
  req.texts = cs;
  req.texts.insert(req.texts.end(), rs.begin(), rs.end());
  auto resp = provider.embed(req);
  check_response(resp, req.texts.size());
  std::vector<Vector> cv(resp.vectors.begin(), resp.vectors.begin() + static_cast<std::ptrdiff_t>(cs.size()));
  std::vector<Vector> rv(resp.vectors.begin() + static_cast<std::ptrdiff_t>(cs.size()), resp.vectors.end());
  return embed_f1_vectors(cv, rv, rescale_baseline);
}

ClassificationReport classification_report(std::span<const std::optional<SurvivalStatus>> predictions,
                                           std::span<const SurvivalStatus> truths) {
  if (predictions.size() != truths.size()) throw std::invalid_argument("predictions and truths differ in length");
  ClassificationReport rep;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (!predictions[i]) {
      ++rep.n_missing;
      continue;
    }
    ++rep.n_scoreable;
    const bool pred_pos = *predictions[i] == SurvivalStatus::Deceased;
    const bool true_pos = truths[i] == SurvivalStatus::Deceased;
    if (pred_pos && true_pos) ++rep.tp;
    else if (pred_pos) ++rep.fp;
    else if (true_pos) ++rep.fn;
    else ++rep.tn;
  }
  if (rep.n_scoreable == 0) throw AllMissing("no scoreable predictions");

  auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
  auto fill = [&](ClassMetrics& m, std::size_t tp, std::size_t fp, std::size_t fn) {
    m.precision = ratio(tp, tp + fp);
    m.recall = ratio(tp, tp + fn);
    m.f1 = f_measure(m.precision, m.recall);
    m.support = tp + fn;
  };
  fill(rep.deceased, rep.tp, rep.fp, rep.fn);
  fill(rep.living, rep.tn, rep.fn, rep.fp);

  rep.macro_precision = (rep.living.precision + rep.deceased.precision) / 2.0;
  rep.macro_recall = (rep.living.recall + rep.deceased.recall) / 2.0;
  rep.macro_f1 = (rep.living.f1 + rep.deceased.f1) / 2.0;
  const double n = static_cast<double>(rep.n_scoreable);
  const double wl = static_cast<double>(rep.living.support) / n;
  const double wd = static_cast<double>(rep.deceased.support) / n;
  rep.weighted_precision = wl * rep.living.precision + wd * rep.deceased.precision;
  rep.weighted_recall = wl * rep.living.recall + wd * rep.deceased.recall;
  rep.weighted_f1 = wl * rep.living.f1 + wd * rep.deceased.f1;
  rep.accuracy = static_cast<double>(rep.tp + rep.tn) / n;
  return rep;
}

RegressionReport regression_report(std::span<const std::optional<double>> predictions, std::span<const double> truths) {
  if (predictions.size() != truths.size()) throw std::invalid_argument("predictions and truths differ in length");
  RegressionReport rep;
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (!predictions[i]) {
      ++rep.n_missing;
      continue;
    }
    ++rep.n_scoreable;
    const double d = *predictions[i] - truths[i];
    abs_sum += std::abs(d);
    sq_sum += d * d;
  }
  if (rep.n_scoreable == 0) throw AllMissing("no scoreable predictions");
  const double n = static_cast<double>(rep.n_scoreable);
  rep.mae = abs_sum / n;
  // Power-mean inequality; max() only absorbs last-ulp rounding.
  rep.rmse = std::max(std::sqrt(sq_sum / n), rep.mae);
  return rep;
}

}  // namespace oncoalign
