// SPDX-License-Identifier: Apache-2.0

#include "oncoalign/clinical_records.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "oncoalign/text_util.hpp"

namespace oncoalign {

// Generated from data/attribute_priority.txt at configure time.
extern const char* const kBuiltinAttributePriority;

namespace {

using ojson = nlohmann::ordered_json;

struct CancerAlias {
  CancerKind kind;
  const char* key;
  const char* display;
  std::vector<const char*> aliases;  // normalized
};

const std::vector<CancerAlias>& cancer_aliases() {
  static const std::vector<CancerAlias> table = {
      {CancerKind::Breast, "Breast", "Breast Cancer", {"breast", "breastcancer"}},
      {CancerKind::Colorectal, "Colorectal", "Colorectal Cancer",
       {"colorectal", "colorectalcancer", "crc"}},
      {CancerKind::NSCLC, "NSCLC", "Non-Small Cell Lung Cancer",
       {"nsclc", "nonsmallcelllungcancer", "nsclclung", "lung"}},
      {CancerKind::Pancreatic, "Pancreatic", "Pancreatic Cancer",
       {"pancreatic", "pancreaticcancer", "pancreas"}},
      {CancerKind::Prostate, "Prostate", "Prostate Cancer", {"prostate", "prostatecancer"}},
  };
  return table;
}

std::string scalar_text(const ojson& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return format_number(v.get<double>());
  if (v.is_null()) return {};
  return v.dump();
}

AttributeList read_attribute_object(const ojson& obj, const char* field) {
  AttributeList out;
  if (obj.is_null()) return out;
  if (!obj.is_object()) throw MalformedRecord(std::string(field) + " must be an object");
  for (const auto& [k, v] : obj.items()) out.emplace_back(k, scalar_text(v));
  return out;
}

std::optional<int> read_day(const ojson& v, const char* what) {
  if (v.is_null()) return std::nullopt;
  if (v.is_number_integer()) return static_cast<int>(v.get<long long>());
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d)) return static_cast<int>(d);
  }
  throw RecordTypeError(std::string(what) + " must be an integer day");
}

double read_lab_value(const ojson& v, const std::string& marker) {
  if (!v.is_number()) throw RecordTypeError("lab value for " + marker + " is not numeric");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw RecordTypeError("lab value for " + marker + " is not finite");
  return d;
}

Sex parse_sex(std::string_view text) {
  const auto k = normalize_key(text);
  if (k == "female" || k == "f") return Sex::Female;
  if (k == "male" || k == "m") return Sex::Male;
  return Sex::Unspecified;
}

std::string_view sex_name(Sex s) {
  switch (s) {
    case Sex::Female: return "Female";
    case Sex::Male: return "Male";
    case Sex::Unspecified: break;
  }
  return "";
}

const std::set<std::string>& known_fields() {
  static const std::set<std::string> fields = {
      "patient_id", "cancer_type", "demographics", "stage",       "clinical_attributes",
      "biomarkers", "tumor_sites", "treatments",   "lab_series",  "sample_info",
      "outcome"};
  return fields;
}

}  // namespace

// ---------------------------------------------------------------------------

CancerType CancerType::parse(std::string_view text) {
  const auto k = normalize_key(text);
  for (const auto& entry : cancer_aliases()) {
    for (const char* alias : entry.aliases) {
      if (k == alias) return {entry.kind, {}};
    }
  }
  return {CancerKind::Other, std::string(trim(text))};
}

std::string CancerType::name() const {
  for (const auto& entry : cancer_aliases()) {
    if (entry.kind == kind) return entry.key;
  }
  return other_name;
}

std::string CancerType::display_name() const {
  for (const auto& entry : cancer_aliases()) {
    if (entry.kind == kind) return entry.display;
  }
  return other_name;
}

std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::Chemotherapy: return "Chemotherapy";
    case Modality::Immunotherapy: return "Immunotherapy";
    case Modality::Radiation: return "Radiation";
    case Modality::Investigational: return "Investigational";
    case Modality::Surgery: return "Surgery";
  }
  return "";
}

std::optional<Modality> parse_modality(std::string_view text) {
  const auto k = normalize_key(text);
  if (k == "chemotherapy" || k == "chemo") return Modality::Chemotherapy;
  if (k == "immunotherapy" || k == "immuno") return Modality::Immunotherapy;
  if (k == "radiation" || k == "radiationtherapy" || k == "radiotherapy") return Modality::Radiation;
  if (k == "investigational" || k == "investigationaltherapy") return Modality::Investigational;
  if (k == "surgery") return Modality::Surgery;
  return std::nullopt;
}

std::string_view status_label(SurvivalStatus s) {
  return s == SurvivalStatus::Deceased ? "1:DECEASED" : "0:LIVING";
}

std::optional<SurvivalStatus> parse_status(const nlohmann::json& value) {
  if (value.is_number_integer()) {
    const auto v = value.get<long long>();
    if (v == 0) return SurvivalStatus::Living;
    if (v == 1) return SurvivalStatus::Deceased;
    return std::nullopt;
  }
  if (value.is_boolean()) return value.get<bool>() ? SurvivalStatus::Deceased : SurvivalStatus::Living;
  if (!value.is_string()) return std::nullopt;
  const auto k = normalize_key(value.get<std::string>());
  if (k == "0living" || k == "living" || k == "0") return SurvivalStatus::Living;
  if (k == "1deceased" || k == "deceased" || k == "1") return SurvivalStatus::Deceased;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Parsing

PatientRecord parse_record(const ojson& raw) {
  if (!raw.is_object()) throw MalformedRecord("record must be a JSON object");

  PatientRecord r;
  const auto id_it = raw.find("patient_id");
  if (id_it == raw.end() || !id_it->is_string() || id_it->get<std::string>().empty()) {
    throw MalformedRecord("missing patient_id");
  }
  r.patient_id = id_it->get<std::string>();
  const std::string ctx = " (patient " + r.patient_id + ")";

  if (auto it = raw.find("cancer_type"); it != raw.end() && it->is_string()) {
    r.cancer_type = CancerType::parse(it->get<std::string>());
  }
  if (auto it = raw.find("stage"); it != raw.end()) r.stage = scalar_text(*it);

  if (auto it = raw.find("demographics"); it != raw.end() && !it->is_null()) {
    if (!it->is_object()) throw MalformedRecord("demographics must be an object" + ctx);
    if (auto a = it->find("age"); a != it->end() && !a->is_null()) {
      if (!a->is_number()) throw RecordTypeError("age must be numeric" + ctx);
      const double age = a->get<double>();
      if (!(age >= 0.0) || !std::isfinite(age)) throw MalformedRecord("age must be >= 0" + ctx);
      r.demographics.age = age;
    }
    if (auto s = it->find("sex"); s != it->end() && s->is_string()) {
      r.demographics.sex = parse_sex(s->get<std::string>());
    }
    if (auto s = it->find("smoking_history"); s != it->end() && !s->is_null()) {
      r.demographics.smoking_history = scalar_text(*s);
    }
  }

  if (auto it = raw.find("clinical_attributes"); it != raw.end()) {
    r.clinical_attributes = read_attribute_object(*it, "clinical_attributes");
  }
  if (auto it = raw.find("biomarkers"); it != raw.end()) {
    r.biomarkers = read_attribute_object(*it, "biomarkers");
  }
  if (auto it = raw.find("sample_info"); it != raw.end()) {
    r.sample_info = read_attribute_object(*it, "sample_info");
  }

  if (auto it = raw.find("tumor_sites"); it != raw.end() && !it->is_null()) {
    if (it->is_array()) {
      for (const auto& s : *it) {
        if (!s.is_string()) throw MalformedRecord("tumor_sites entries must be strings" + ctx);
        r.tumor_sites.insert(s.get<std::string>());
      }
    } else if (it->is_object()) {
      // Affirmative site flags: {"Bone": true, "Liver": false}
      for (const auto& [site, flag] : it->items()) {
        if (flag.is_boolean() ? flag.get<bool>() : normalize_key(scalar_text(flag)) == "yes") {
          r.tumor_sites.insert(site);
        }
      }
    } else {
      throw MalformedRecord("tumor_sites must be an array or object" + ctx);
    }
  }

  if (auto it = raw.find("treatments"); it != raw.end() && !it->is_null()) {
    if (!it->is_array()) throw MalformedRecord("treatments must be an array" + ctx);
    for (const auto& t : *it) {
      if (!t.is_object() || !t.contains("modality") || !t["modality"].is_string()) {
        throw MalformedRecord("treatment without modality" + ctx);
      }
      auto modality = parse_modality(t["modality"].get<std::string>());
      if (!modality) {
        throw MalformedRecord("unknown treatment modality '" + t["modality"].get<std::string>() +
                              "'" + ctx);
      }
      TreatmentSpan span;
      span.modality = *modality;
      if (auto a = t.find("agents"); a != t.end() && a->is_array()) {
        for (const auto& agent : *a) span.agents.push_back(scalar_text(agent));
      }
      if (auto d = t.find("day_start"); d != t.end()) span.day_start = read_day(*d, "day_start");
      if (auto d = t.find("day_end"); d != t.end()) span.day_end = read_day(*d, "day_end");
      if (span.day_start && span.day_end && *span.day_start > *span.day_end) {
        throw MalformedRecord("treatment day_start after day_end" + ctx);
      }
      r.treatments.push_back(std::move(span));
    }
  }

  if (auto it = raw.find("lab_series"); it != raw.end() && !it->is_null()) {
    if (!it->is_object()) throw MalformedRecord("lab_series must be an object" + ctx);
    for (const auto& [marker, points] : it->items()) {
      if (!points.is_array()) throw MalformedRecord("lab series " + marker + " must be an array" + ctx);
      std::vector<LabPoint> series;
      for (const auto& p : points) {
        LabPoint lp;
        if (p.is_array() && p.size() == 2) {
          auto day = read_day(p[0], "lab day");
          if (!day) throw RecordTypeError("lab day missing for " + marker + ctx);
          lp.day = *day;
          lp.value = read_lab_value(p[1], marker);
        } else if (p.is_object() && p.contains("day") && p.contains("value")) {
          auto day = read_day(p["day"], "lab day");
          if (!day) throw RecordTypeError("lab day missing for " + marker + ctx);
          lp.day = *day;
          lp.value = read_lab_value(p["value"], marker);
        } else {
          throw MalformedRecord("lab point for " + marker + " must be [day, value]" + ctx);
        }
        series.push_back(lp);
      }
      std::stable_sort(series.begin(), series.end(),
                       [](const LabPoint& a, const LabPoint& b) { return a.day < b.day; });
      r.lab_series[marker] = std::move(series);
    }
  }

  const auto out_it = raw.find("outcome");
  if (out_it == raw.end() || !out_it->is_object()) throw MalformedRecord("missing outcome" + ctx);
  {
    const auto& o = *out_it;
    auto status = o.contains("status") ? parse_status(nlohmann::json(o["status"])) : std::nullopt;
    if (!status) throw MalformedRecord("outcome.status must be 0:LIVING or 1:DECEASED" + ctx);
    if (!o.contains("months") || !o["months"].is_number()) {
      throw MalformedRecord("outcome.months must be numeric" + ctx);
    }
    const double months = o["months"].get<double>();
    if (!std::isfinite(months) || months < 0.0) {
      throw MalformedRecord("outcome.months must be a non-negative number" + ctx);
    }
    r.outcome = {*status, months};
  }

  // Unknown fields are kept as clinical attributes.
  for (const auto& [k, v] : raw.items()) {
    if (known_fields().count(k) == 0) r.clinical_attributes.emplace_back(k, scalar_text(v));
  }
  return r;
}

PatientRecord parse_record_text(std::string_view json_text) {
  ojson doc;
  try {
    doc = ojson::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedRecord(std::string("invalid JSON: ") + e.what());
  }
  return parse_record(doc);
}

ojson serialize_record(const PatientRecord& r) {
  ojson j;
  j["patient_id"] = r.patient_id;
  j["cancer_type"] = r.cancer_type.name();
  j["stage"] = r.stage;
  ojson demo = ojson::object();
  if (r.demographics.age) demo["age"] = *r.demographics.age;
  if (r.demographics.sex != Sex::Unspecified) demo["sex"] = std::string(sex_name(r.demographics.sex));
  if (!r.demographics.smoking_history.empty()) demo["smoking_history"] = r.demographics.smoking_history;
  j["demographics"] = demo;

  auto attrs = [](const AttributeList& list) {
    ojson o = ojson::object();
    for (const auto& [k, v] : list) o[k] = v;
    return o;
  };
  j["clinical_attributes"] = attrs(r.clinical_attributes);
  j["biomarkers"] = attrs(r.biomarkers);
  j["tumor_sites"] = ojson::array();
  for (const auto& s : r.tumor_sites) j["tumor_sites"].push_back(s);
  j["treatments"] = ojson::array();
  for (const auto& t : r.treatments) {
    ojson tj;
    tj["modality"] = std::string(modality_name(t.modality));
    tj["agents"] = t.agents;
    if (t.day_start) tj["day_start"] = *t.day_start;
    if (t.day_end) tj["day_end"] = *t.day_end;
    j["treatments"].push_back(std::move(tj));
  }
  j["lab_series"] = ojson::object();
  for (const auto& [marker, series] : r.lab_series) {
    ojson arr = ojson::array();
    for (const auto& p : series) arr.push_back(ojson::array({p.day, p.value}));
    j["lab_series"][marker] = std::move(arr);
  }
  j["sample_info"] = attrs(r.sample_info);
  j["outcome"] = {{"status", std::string(status_label(r.outcome.status))},
                  {"months", r.outcome.months}};
  return j;
}

std::vector<PatientRecord> load_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedRecord("cannot open records file " + path);
  std::vector<PatientRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    try {
      out.push_back(parse_record_text(line));
    } catch (const MalformedRecord& e) {
      throw MalformedRecord(path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const RecordTypeError& e) {
      throw RecordTypeError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Attribute selection

AttributePriorityMap AttributePriorityMap::parse(std::string_view text) {
  AttributePriorityMap map;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (is_blank(line)) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      throw std::invalid_argument("attribute map line " + std::to_string(lineno) + ": missing ':'");
    }
    const std::string type(trim(std::string_view(line).substr(0, colon)));
    std::vector<std::string> names;
    std::string_view rest = std::string_view(line).substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = trim(rest.substr(0, comma));
      if (!item.empty()) names.emplace_back(item);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (normalize_key(type) == "general") {
      map.general_ = std::move(names);
    } else {
      map.by_type_[normalize_key(CancerType::parse(type).name())] = std::move(names);
    }
  }
  return map;
}

AttributePriorityMap AttributePriorityMap::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open attribute map " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const AttributePriorityMap& AttributePriorityMap::builtin() {
  static const AttributePriorityMap map = parse(kBuiltinAttributePriority);
  return map;
}

const std::vector<std::string>* AttributePriorityMap::for_type(const CancerType& type) const {
  auto it = by_type_.find(normalize_key(type.name()));
  return it == by_type_.end() ? nullptr : &it->second;
}

namespace {

// True when the leading words of `key` spell `wanted` (both normalized).
bool key_matches(std::string_view key, const std::string& wanted) {
  if (normalize_key(key) == wanted) return true;
  std::string prefix;
  std::size_t i = 0;
  while (i < key.size()) {
    while (i < key.size() && (key[i] == ' ' || key[i] == '_')) ++i;
    std::size_t j = i;
    while (j < key.size() && key[j] != ' ' && key[j] != '_') ++j;
    prefix += normalize_key(key.substr(i, j - i));
    if (!prefix.empty() && prefix == wanted) return true;
    if (prefix.size() >= wanted.size()) return false;
    i = j;
  }
  return false;
}

std::optional<std::pair<std::string, std::string>> resolve_attribute(
    const PatientRecord& r, const std::string& name, std::vector<bool>& used_bio,
    std::vector<bool>& used_clin) {
  const auto want = normalize_key(name);
  if (want == "stage") {
    if (r.stage.empty()) return std::nullopt;
    return std::pair<std::string, std::string>{"Cancer Stage", r.stage};
  }
  if (want == "age") {
    if (!r.demographics.age) return std::nullopt;
    return std::pair<std::string, std::string>{"Current Age", format_number(*r.demographics.age)};
  }
  if (want == "sex") {
    if (r.demographics.sex == Sex::Unspecified) return std::nullopt;
    return std::pair<std::string, std::string>{"Sex", std::string(sex_name(r.demographics.sex))};
  }
  if (want == "smokinghistory" && !r.demographics.smoking_history.empty()) {
    return std::pair<std::string, std::string>{"Smoking History", r.demographics.smoking_history};
  }
  for (std::size_t i = 0; i < r.biomarkers.size(); ++i) {
    if (!used_bio[i] && !r.biomarkers[i].second.empty() && key_matches(r.biomarkers[i].first, want)) {
      used_bio[i] = true;
      return r.biomarkers[i];
    }
  }
  for (std::size_t i = 0; i < r.clinical_attributes.size(); ++i) {
    if (!used_clin[i] && !r.clinical_attributes[i].second.empty() &&
        key_matches(r.clinical_attributes[i].first, want)) {
      used_clin[i] = true;
      return r.clinical_attributes[i];
    }
  }
  return std::nullopt;
}

}  // namespace

AttributeList select_attributes(const PatientRecord& record, const AttributePriorityMap& map) {
  AttributeList out;
  std::vector<bool> used_bio(record.biomarkers.size(), false);
  std::vector<bool> used_clin(record.clinical_attributes.size(), false);
  std::set<std::string> seen;

  auto take = [&](const std::vector<std::string>& names) {
    for (const auto& name : names) {
      const auto key = normalize_key(name);
      if (seen.count(key)) continue;
      if (auto attr = resolve_attribute(record, name, used_bio, used_clin)) {
        seen.insert(key);
        out.push_back(std::move(*attr));
      }
    }
  };
  if (const auto* specific = map.for_type(record.cancer_type)) take(*specific);
  take(map.general());
  return out;
}

// ---------------------------------------------------------------------------
// Trends

std::string_view trend_name(TrendClass c) {
  switch (c) {
    case TrendClass::Rising: return "Rising";
    case TrendClass::Falling: return "Falling";
    case TrendClass::Flat: return "Flat";
    case TrendClass::InsufficientData: return "InsufficientData";
  }
  return "";
}

TrendSummary marker_trend(const std::vector<LabPoint>& series, double flat_threshold,
                          std::string marker) {
  TrendSummary t;
  t.marker = std::move(marker);
  t.n_points = series.size();
  if (series.size() < 2) return t;

  const double n = static_cast<double>(series.size());
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (const auto& p : series) {
    mean_x += p.day;
    mean_y += p.value;
  }
  mean_x /= n;
  mean_y /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (const auto& p : series) {
    const double dx = p.day - mean_x;
    sxy += dx * (p.value - mean_y);
    sxx += dx * dx;
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  t.slope = slope;
  if (std::abs(slope) <= flat_threshold) {
    t.classification = TrendClass::Flat;
  } else {
    t.classification = slope > 0.0 ? TrendClass::Rising : TrendClass::Falling;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::string render_attribute(const std::pair<std::string, std::string>& attr) {
  if (attr.first == "Cancer Stage") return "Cancer Stage " + attr.second;
  return attr.first + "=" + attr.second;
}

std::string modality_label(Modality m) {
  switch (m) {
    case Modality::Radiation: return "Radiation Therapy";
    case Modality::Investigational: return "Investigational Therapy";
    default: return std::string(modality_name(m));
  }
}

std::string render_treatment(const TreatmentSpan& t) {
  std::vector<std::string> parts;
  if (!t.agents.empty()) parts.push_back(join(t.agents, ", "));
  if (t.day_start && t.day_end && *t.day_start != *t.day_end) {
    parts.push_back("Days: " + std::to_string(*t.day_start) + "-" + std::to_string(*t.day_end));
  } else if (t.day_start || t.day_end) {
    parts.push_back("Days " + std::to_string(t.day_start ? *t.day_start : *t.day_end));
  }
  std::string line = "- " + modality_label(t.modality);
  if (!parts.empty()) line += ": " + join(parts, ", ");
  return line;
}

std::string render_trend(const TrendSummary& t) {
  std::string line = "- " + t.marker + ": ";
  if (t.classification == TrendClass::InsufficientData) {
    return line + "single measurement, no trend";
  }
  std::string word = t.classification == TrendClass::Rising    ? "rising"
                     : t.classification == TrendClass::Falling ? "falling"
                                                               : "stable";
  return line + word + " (slope " + format_fixed(*t.slope, 4) + " per day over " +
         std::to_string(t.n_points) + " measurements)";
}

}  // namespace

std::string build_summary(const PatientRecord& record, const SummaryOptions& options) {
  const auto& map = options.attribute_map ? *options.attribute_map : AttributePriorityMap::builtin();
  std::vector<std::string> lines;

  const auto attrs = select_attributes(record, map);
  if (!attrs.empty()) {
    std::vector<std::string> items;
    for (const auto& a : attrs) items.push_back(render_attribute(a));
    lines.push_back("Clinical Attributes: " + join(items, "; "));
  }
  if (!record.tumor_sites.empty()) {
    lines.push_back("Tumor Sites: " +
                    join(std::vector<std::string>(record.tumor_sites.begin(), record.tumor_sites.end()),
                         ", "));
  }
  if (!record.treatments.empty()) {
    lines.emplace_back("Treatments:");
    for (const auto& t : record.treatments) lines.push_back(render_treatment(t));
  }
  if (!record.sample_info.empty()) {
    lines.push_back("Sample-Specific Information (" + record.cancer_type.display_name() + "):");
    for (const auto& [k, v] : record.sample_info) lines.push_back("- " + k + ": " + v);
  }
  if (!record.lab_series.empty()) {
    std::vector<std::string> trends;
    for (const auto& [marker, series] : record.lab_series) {
      if (series.empty()) continue;
      trends.push_back(render_trend(marker_trend(series, options.flat_threshold, marker)));
    }
    if (!trends.empty()) {
      lines.emplace_back("Key Tumor Markers:");
      lines.insert(lines.end(), trends.begin(), trends.end());
    }
  }
  return join(lines, "\n");
}

std::string prompt_instruction(bool cot_mode) {
  std::string s =
      "### Instruction:\n"
      "You are a cancer clinical outcome prediction model. Based on the patient data provided, "
      "predict the treatment outcome. Focus on key clinical factors such as disease stage, tumor "
      "site(s), patient age, smoking history, cancer type, and treatment details.\n\n";
  if (cot_mode) {
    s +=
        "Your response should include:\n"
        "1. Step-by-step reasoning using relevant clinical knowledge.\n"
        "2. A concise comment on the patient's prognosis.\n"
        "3. Final prediction in the specified format.\n\n"
        "Format your response as follows:\n"
        "<reasoning>\n[Step-by-step explanation]\n</reasoning>\n\n"
        "<comment>\n[Prognosis summary]\n</comment>\n\n";
  } else {
    s +=
        "Your response should include:\n"
        "1. Final prediction in the specified format.\n\n"
        "Format your response as follows:\n";
  }
  s +=
      "<prediction>\n"
      "Overall Survival Status: '0:LIVING' or '1:DECEASED'\n"
      "Estimated Overall Survival (months): [float value]\n"
      "</prediction>";
  return s;
}

std::string PromptBundle::render() const {
  return instruction + "\n\n### Input:\n" + summary + "\n";
}

PromptBundle build_prompt(const PatientRecord& record, bool cot_mode, const SummaryOptions& options) {
  PromptBundle b;
  b.instruction = prompt_instruction(cot_mode);
  b.summary = build_summary(record, options);
  b.cot_mode = cot_mode;
  b.target = record.outcome;
  return b;
}

std::string prediction_block(const SurvivalOutcome& outcome) {
  return "<prediction>\nOverall Survival Status: " + std::string(status_label(outcome.status)) +
         "\nEstimated Overall Survival (months): " + format_number(outcome.months) +
         "\n</prediction>";
}

}  // namespace oncoalign
