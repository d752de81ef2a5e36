// SPDX-License-Identifier: Apache-2.0
//
// Parsing of generated reasoning traces.
//
// Two tag grammars are recognised:
//
//   RewardSchema:    <reasoning>...</reasoning> <answer>...</answer>
//   ClinicalSchema:  <reasoning>...</reasoning> <comment>...</comment>
//                    <prediction>...</prediction>
//
// parse_strict accepts exactly the profile's blocks, in order, each opened
// and closed once, with only whitespace outside them. parse_soft accepts the
// blocks in order anywhere in the text. Tags are case-sensitive and carry no
// attributes. Every failure is a TraceError subclass.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "oncoalign/clinical_records.hpp"

namespace oncoalign {

enum class SchemaProfile { RewardSchema, ClinicalSchema };

std::string_view profile_name(SchemaProfile p);
std::optional<SchemaProfile> parse_profile(std::string_view text);

class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FormatErrorKind { MissingTag, DuplicateTag, OutOfOrder, TrailingContent, EmptyReasoning };

std::string_view format_error_name(FormatErrorKind k);

class FormatError : public TraceError {
 public:
  FormatError(FormatErrorKind kind, std::string detail);
  FormatErrorKind kind() const { return kind_; }

 private:
  FormatErrorKind kind_;
};

enum class PredictionErrorKind { NoStatus, NoMonths };

class PredictionParseError : public TraceError {
 public:
  PredictionParseError(PredictionErrorKind kind, std::string detail);
  PredictionErrorKind kind() const { return kind_; }

 private:
  PredictionErrorKind kind_;
};

struct Prediction {
  SurvivalStatus status = SurvivalStatus::Living;
  double months = 0.0;
  std::string months_raw_text;  // exact extracted token, e.g. "27.9"

  bool operator==(const Prediction&) const = default;
};

struct ReasoningTrace {
  std::vector<std::string> steps;
  std::optional<std::string> comment;
  Prediction prediction;
  SchemaProfile profile = SchemaProfile::ClinicalSchema;
  std::string reasoning;  // trimmed body of the reasoning block
  std::string raw;

  bool operator==(const ReasoningTrace&) const = default;
};

ReasoningTrace parse_strict(std::string_view text, SchemaProfile profile);
ReasoningTrace parse_soft(std::string_view text, SchemaProfile profile);

/// Status from the first "0:LIVING" / "1:DECEASED" (any case). Months from
/// the first decimal after the "(months):" label, or, when the label is
/// absent, the first decimal after the status token.
Prediction extract_prediction(std::string_view text);

/// Splits on "Step N:" markers when present, else on line-leading "N." list
/// markers, else into sentences. Segments are trimmed; empty input gives
/// an empty list.
std::vector<std::string> split_steps(std::string_view reasoning_text);

/// Non-throwing prediction lookup used for scoring and evaluation: the
/// soft-parsed block when the structure is present, otherwise the whole text.
/// Returns nullopt when no prediction can be extracted.
std::optional<Prediction> find_prediction(std::string_view text, SchemaProfile profile);

}  // namespace oncoalign
