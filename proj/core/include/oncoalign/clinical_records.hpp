// SPDX-License-Identifier: Apache-2.0
//
// Structured patient records: ingestion, cancer-type attribute selection,
// tumour-marker trends and the natural-language summary/prompt rendering.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace oncoalign {

class MalformedRecord : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A lab series value (or day) that is not a number.
class RecordTypeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CancerKind { Breast, Colorectal, NSCLC, Pancreatic, Prostate, Other };

struct CancerType {
  CancerKind kind = CancerKind::Other;
  std::string other_name;  // only meaningful for Other

  /// Accepts canonical names and common aliases ("Non-Small Cell Lung Cancer").
  static CancerType parse(std::string_view text);
  /// Canonical key used in records and the attribute map ("NSCLC").
  std::string name() const;
  /// Heading used in summaries ("Non-Small Cell Lung Cancer").
  std::string display_name() const;

  bool operator==(const CancerType&) const = default;
};

enum class Sex { Unspecified, Female, Male };

struct Demographics {
  std::optional<double> age;  // years, >= 0
  Sex sex = Sex::Unspecified;
  std::string smoking_history;

  bool operator==(const Demographics&) const = default;
};

enum class Modality { Chemotherapy, Immunotherapy, Radiation, Investigational, Surgery };

std::string_view modality_name(Modality m);
std::optional<Modality> parse_modality(std::string_view text);

struct TreatmentSpan {
  Modality modality = Modality::Chemotherapy;
  std::vector<std::string> agents;
  std::optional<int> day_start;  // days relative to diagnosis, may be negative
  std::optional<int> day_end;

  bool operator==(const TreatmentSpan&) const = default;
};

enum class SurvivalStatus { Living = 0, Deceased = 1 };

/// "0:LIVING" / "1:DECEASED".
std::string_view status_label(SurvivalStatus s);
/// Accepts 0/1, "0:LIVING", "LIVING", "1:DECEASED", "DECEASED" (any case).
std::optional<SurvivalStatus> parse_status(const nlohmann::json& value);

struct SurvivalOutcome {
  SurvivalStatus status = SurvivalStatus::Living;
  double months = 0.0;

  bool operator==(const SurvivalOutcome&) const = default;
};

struct LabPoint {
  int day = 0;
  double value = 0.0;

  bool operator==(const LabPoint&) const = default;
};

/// Insertion-ordered name/value pairs; order is preserved into summaries.
using AttributeList = std::vector<std::pair<std::string, std::string>>;

struct PatientRecord {
  std::string patient_id;
  CancerType cancer_type;
  Demographics demographics;
  std::string stage;
  AttributeList clinical_attributes;
  AttributeList biomarkers;
  std::set<std::string> tumor_sites;
  std::vector<TreatmentSpan> treatments;
  std::map<std::string, std::vector<LabPoint>> lab_series;  // sorted by day
  AttributeList sample_info;
  SurvivalOutcome outcome;

  bool operator==(const PatientRecord&) const = default;
};

PatientRecord parse_record(const nlohmann::ordered_json& raw);
PatientRecord parse_record_text(std::string_view json_text);
nlohmann::ordered_json serialize_record(const PatientRecord& record);

/// Reads a JSONL file of records. Errors carry the 1-based line number.
std::vector<PatientRecord> load_records(const std::string& path);

// ---------------------------------------------------------------------------
// Attribute selection

/// Per-cancer-type ordered attribute names plus a general fallback set.
///
/// Text format, one entry per line, '#' starts a comment:
///
///     general: Stage, Age, Sex
///     Breast: HER2, ER, PR, HR, CA15-3, Stage, Age, Sex
///
/// Names are matched against record keys case-insensitively with
/// punctuation ignored, on word boundaries ("PD-L1" matches "PD-L1 Expression").
class AttributePriorityMap {
 public:
  static AttributePriorityMap parse(std::string_view text);
  static AttributePriorityMap load(const std::string& path);
  /// The mapping shipped in data/attribute_priority.txt, compiled in.
  static const AttributePriorityMap& builtin();

  const std::vector<std::string>& general() const { return general_; }
  /// Ordered names for the cancer type, or nullptr when it has no entry.
  const std::vector<std::string>* for_type(const CancerType& type) const;

 private:
  std::vector<std::string> general_;
  std::map<std::string, std::vector<std::string>> by_type_;  // normalized key
};

/// Attributes for the summary, in priority order. Names are display names
/// ("Cancer Stage", "Current Age", or the record's own key).
AttributeList select_attributes(const PatientRecord& record,
                                const AttributePriorityMap& map = AttributePriorityMap::builtin());

// ---------------------------------------------------------------------------
// Tumour-marker trends

enum class TrendClass { Rising, Falling, Flat, InsufficientData };

std::string_view trend_name(TrendClass c);

struct TrendSummary {
  std::string marker;
  std::optional<double> slope;  // value units per day; unset when n_points < 2
  std::size_t n_points = 0;
  TrendClass classification = TrendClass::InsufficientData;
};

inline constexpr double kDefaultFlatThreshold = 0.01;

/// Ordinary-least-squares slope of value on day. A series whose days are all
/// equal has no defined slope and is reported as Flat with slope 0.
TrendSummary marker_trend(const std::vector<LabPoint>& series,
                          double flat_threshold = kDefaultFlatThreshold,
                          std::string marker = {});

// ---------------------------------------------------------------------------
// Summaries and prompts

struct SummaryOptions {
  double flat_threshold = kDefaultFlatThreshold;
  const AttributePriorityMap* attribute_map = nullptr;  // builtin when null
};

std::string build_summary(const PatientRecord& record, const SummaryOptions& options = {});

struct PromptBundle {
  std::string instruction;
  std::string summary;
  bool cot_mode = false;
  std::optional<SurvivalOutcome> target;

  /// Instruction followed by the "### Input:" block.
  std::string render() const;
};

PromptBundle build_prompt(const PatientRecord& record, bool cot_mode,
                          const SummaryOptions& options = {});

/// The instruction text alone.
std::string prompt_instruction(bool cot_mode);

/// The prediction block a model is trained to emit for this outcome.
std::string prediction_block(const SurvivalOutcome& outcome);

}  // namespace oncoalign
