// SPDX-License-Identifier: Apache-2.0

#include "oncoalign/trace_codec.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

#include "oncoalign/text_util.hpp"

namespace oncoalign {

namespace {

struct Block {
  std::string_view name;
  std::string open;
  std::string close;
};

std::vector<Block> blocks_for(SchemaProfile p) {
  auto make = [](std::string_view n) {
    return Block{n, "<" + std::string(n) + ">", "</" + std::string(n) + ">"};
  };
  if (p == SchemaProfile::RewardSchema) return {make("reasoning"), make("answer")};
  return {make("reasoning"), make("comment"), make("prediction")};
}

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

// Body [begin, end) of each block in order.
using Spans = std::vector<std::pair<std::size_t, std::size_t>>;

ReasoningTrace build_trace(std::string_view text, SchemaProfile profile, const Spans& bodies) {
  ReasoningTrace trace;
  trace.profile = profile;
  trace.raw = std::string(text);
  trace.reasoning = std::string(trim(text.substr(bodies[0].first, bodies[0].second - bodies[0].first)));
  trace.steps = split_steps(trace.reasoning);
  if (trace.steps.empty()) throw FormatError(FormatErrorKind::EmptyReasoning, "reasoning block is empty");
  if (profile == SchemaProfile::ClinicalSchema) {
    trace.comment = std::string(trim(text.substr(bodies[1].first, bodies[1].second - bodies[1].first)));
  }
  const auto& last = bodies.back();
  trace.prediction = extract_prediction(text.substr(last.first, last.second - last.first));
  return trace;
}

// First decimal token at or after `from` that starts on a word boundary.
// Returns {begin, end} of the digits (sign excluded) and whether a minus
// sign preceded it.
struct NumberToken {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool negative = false;
};

std::optional<NumberToken> find_number(std::string_view text, std::size_t from) {
  for (std::size_t i = from; i < text.size(); ++i) {
    if (!is_digit(text[i])) continue;
    if (i > 0 && (is_alpha(text[i - 1]) || is_digit(text[i - 1]))) {
      // inside a word such as "CA19"; skip the rest of the run
      while (i + 1 < text.size() && (is_digit(text[i + 1]) || text[i + 1] == '.')) ++i;
      continue;
    }
    NumberToken tok;
    tok.begin = i;
    tok.negative = i > 0 && text[i - 1] == '-';
    std::size_t j = i;
    while (j < text.size() && is_digit(text[j])) ++j;
    if (j + 1 < text.size() && text[j] == '.' && is_digit(text[j + 1])) {
      ++j;
      while (j < text.size() && is_digit(text[j])) ++j;
    }
    tok.end = j;
    return tok;
  }
  return std::nullopt;
}

// Positions of "Step N:" markers as {marker_begin, content_begin}.
Spans find_step_markers(std::string_view text) {
  Spans out;
  for (std::size_t i = 0; i + 4 < text.size(); ++i) {
    if ((text[i] != 'S' && text[i] != 's') || (i > 0 && !is_ws(text[i - 1]))) continue;
    if (to_lower(text.substr(i, 4)) != "step") continue;
    std::size_t j = i + 4;
    while (j < text.size() && (text[j] == ' ' || text[j] == '\t')) ++j;
    const std::size_t digits = j;
    while (j < text.size() && is_digit(text[j])) ++j;
    if (j == digits) continue;
    while (j < text.size() && (text[j] == ' ' || text[j] == '\t')) ++j;
    if (j < text.size() && text[j] == ':') out.emplace_back(i, j + 1);
  }
  return out;
}

// Line-leading "N." / "N)" list markers followed by whitespace.
Spans find_list_markers(std::string_view text) {
  Spans out;
  std::size_t line = 0;
  while (line < text.size()) {
    std::size_t i = line;
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < text.size() && is_digit(text[i])) ++i;
    if (i > start && i + 1 < text.size() && (text[i] == '.' || text[i] == ')') && is_ws(text[i + 1])) {
      out.emplace_back(start, i + 1);
    }
    const auto nl = text.find('\n', line);
    if (nl == std::string_view::npos) break;
    line = nl + 1;
  }
  return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if ((c == '.' || c == '!' || c == '?') && (i + 1 == text.size() || is_ws(text[i + 1]))) {
      auto seg = trim(text.substr(begin, i + 1 - begin));
      if (!seg.empty()) out.emplace_back(seg);
      begin = i + 1;
    }
  }
  auto tail = trim(text.substr(begin));
  if (!tail.empty()) out.emplace_back(tail);
  return out;
}

std::vector<std::string> split_at_markers(std::string_view text, const Spans& markers) {
  std::vector<std::string> out;
  auto head = trim(text.substr(0, markers.front().first));
  if (!head.empty()) out.emplace_back(head);
  for (std::size_t m = 0; m < markers.size(); ++m) {
    const std::size_t from = markers[m].second;
    const std::size_t to = m + 1 < markers.size() ? markers[m + 1].first : text.size();
    auto seg = trim(text.substr(from, to - from));
    if (!seg.empty()) out.emplace_back(seg);
  }
  return out;
}

}  // namespace

std::string_view profile_name(SchemaProfile p) {
  return p == SchemaProfile::RewardSchema ? "reward" : "clinical";
}

std::optional<SchemaProfile> parse_profile(std::string_view text) {
  const auto k = normalize_key(text);
  if (k == "reward" || k == "rewardschema" || k == "answer") return SchemaProfile::RewardSchema;
  if (k == "clinical" || k == "clinicalschema" || k == "prediction") return SchemaProfile::ClinicalSchema;
  return std::nullopt;
}

std::string_view format_error_name(FormatErrorKind k) {
  switch (k) {
    case FormatErrorKind::MissingTag: return "missing_tag";
    case FormatErrorKind::DuplicateTag: return "duplicate_tag";
    case FormatErrorKind::OutOfOrder: return "out_of_order";
    case FormatErrorKind::TrailingContent: return "trailing_content";
    case FormatErrorKind::EmptyReasoning: return "empty_reasoning";
  }
  return "";
}

FormatError::FormatError(FormatErrorKind kind, std::string detail)
    : TraceError(std::string(format_error_name(kind)) + ": " + detail), kind_(kind) {}

PredictionParseError::PredictionParseError(PredictionErrorKind kind, std::string detail)
    : TraceError(std::string(kind == PredictionErrorKind::NoStatus ? "no_status" : "no_months") +
                 ": " + detail),
      kind_(kind) {}

ReasoningTrace parse_strict(std::string_view text, SchemaProfile profile) {
  const auto blocks = blocks_for(profile);
  for (const auto& b : blocks) {
    if (count_occurrences(text, b.open) == 0) throw FormatError(FormatErrorKind::MissingTag, b.open);
    if (count_occurrences(text, b.close) == 0) throw FormatError(FormatErrorKind::MissingTag, b.close);
  }
  for (const auto& b : blocks) {
    if (count_occurrences(text, b.open) > 1) throw FormatError(FormatErrorKind::DuplicateTag, b.open);
    if (count_occurrences(text, b.close) > 1) throw FormatError(FormatErrorKind::DuplicateTag, b.close);
  }

  Spans bodies;
  std::size_t prev_end = 0;
  for (const auto& b : blocks) {
    const auto open = text.find(b.open);
    const auto close = text.find(b.close);
    if (open < prev_end || close < open + b.open.size()) {
      throw FormatError(FormatErrorKind::OutOfOrder, std::string(b.name) + " block out of order");
    }
    bodies.emplace_back(open + b.open.size(), close);
    prev_end = close + b.close.size();
  }

  std::size_t gap_begin = 0;
  for (std::size_t i = 0; i <= blocks.size(); ++i) {
    const std::size_t gap_end = i < blocks.size() ? bodies[i].first - blocks[i].open.size() : text.size();
    if (!is_blank(text.substr(gap_begin, gap_end - gap_begin))) {
      throw FormatError(FormatErrorKind::TrailingContent, "text outside the tagged blocks");
    }
    if (i < blocks.size()) gap_begin = bodies[i].second + blocks[i].close.size();
  }
  return build_trace(text, profile, bodies);
}

ReasoningTrace parse_soft(std::string_view text, SchemaProfile profile) {
  const auto blocks = blocks_for(profile);
  for (const auto& b : blocks) {
    if (text.find(b.open) == std::string_view::npos) throw FormatError(FormatErrorKind::MissingTag, b.open);
    if (text.find(b.close) == std::string_view::npos) throw FormatError(FormatErrorKind::MissingTag, b.close);
  }
  Spans bodies;
  std::size_t pos = 0;
  for (const auto& b : blocks) {
    const auto open = text.find(b.open, pos);
    if (open == std::string_view::npos) {
      throw FormatError(FormatErrorKind::OutOfOrder, std::string(b.name) + " block out of order");
    }
    const auto close = text.find(b.close, open + b.open.size());
    if (close == std::string_view::npos) {
      throw FormatError(FormatErrorKind::OutOfOrder, std::string(b.name) + " block not closed in order");
    }
    bodies.emplace_back(open + b.open.size(), close);
    pos = close + b.close.size();
  }
  return build_trace(text, profile, bodies);
}

Prediction extract_prediction(std::string_view text) {
  const std::string lower = to_lower(text);
  const auto living = lower.find("0:living");
  const auto deceased = lower.find("1:deceased");
  if (living == std::string::npos && deceased == std::string::npos) {
    throw PredictionParseError(PredictionErrorKind::NoStatus, "no 0:LIVING or 1:DECEASED token");
  }
  Prediction p;
  std::size_t status_end = 0;
  if (deceased != std::string::npos && (living == std::string::npos || deceased < living)) {
    p.status = SurvivalStatus::Deceased;
    status_end = deceased + 10;
  } else {
    p.status = SurvivalStatus::Living;
    status_end = living + 8;
  }

  std::size_t search_from = status_end;
  if (const auto label = lower.find("months)"); label != std::string::npos) {
    search_from = label + 7;
  }
  const auto tok = find_number(text, search_from);
  if (!tok) throw PredictionParseError(PredictionErrorKind::NoMonths, "no number after the months label");
  if (tok->negative) throw PredictionParseError(PredictionErrorKind::NoMonths, "negative survival months");

  p.months_raw_text = std::string(text.substr(tok->begin, tok->end - tok->begin));
  double value = 0.0;
  const auto* first = p.months_raw_text.data();
  const auto* last = first + p.months_raw_text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
    throw PredictionParseError(PredictionErrorKind::NoMonths, "months not a finite number");
  }
  p.months = value;
  return p;
}

std::vector<std::string> split_steps(std::string_view reasoning_text) {
  if (is_blank(reasoning_text)) return {};
  for (const auto& markers : {find_step_markers(reasoning_text), find_list_markers(reasoning_text)}) {
    if (!markers.empty()) return split_at_markers(reasoning_text, markers);
  }
  return split_sentences(reasoning_text);
}

std::optional<Prediction> find_prediction(std::string_view text, SchemaProfile profile) {
  try {
    return parse_soft(text, profile).prediction;
  } catch (const FormatError&) {
    // no usable structure; fall back to the whole text
  } catch (const PredictionParseError&) {
    return std::nullopt;
  }
  try {
    return extract_prediction(text);
  } catch (const PredictionParseError&) {
    return std::nullopt;
  }
}

}  // namespace oncoalign
