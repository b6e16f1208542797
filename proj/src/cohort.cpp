#include "riskforge/cohort.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace riskforge::cohort {

namespace {

std::string_view strip(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string code_text(const Column& c, std::size_t row) {
  if (c.is_numeric()) {
    double v = c.number(row);
    return format_number(v);
  }
  return std::string(strip(c.text(row)));
}

}  // namespace

void CohortConfig::validate() const {
  if (icd_codes.empty()) throw Error(ErrorCode::ConfigInvalid, "cohort.icd_codes: must be non-empty");
  if (min_age < 0) throw Error(ErrorCode::ConfigInvalid, "cohort.min_age: must be >= 0");
}

bool code_matches(std::string_view code, std::string_view pattern) {
  code = strip(code);
  pattern = strip(pattern);
  if (pattern.empty()) return false;
  bool prefix = false;
  if (pattern.back() == '*') {
    pattern.remove_suffix(1);
    prefix = true;
  } else if (std::isalpha(static_cast<unsigned char>(pattern.front()))) {
    prefix = true;
  }
  if (prefix) return code.substr(0, pattern.size()) == pattern;
  return code == pattern;
}

PatientFrame filter_by_diagnosis(const PatientFrame& diagnoses, const CohortConfig& cfg,
                                 Warnings* warnings) {
  cfg.validate();
  const Column& codes = diagnoses.column(cfg.code_column);
  const Column& hadm = diagnoses.column("hadm_id");
  std::set<double> seen;
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < diagnoses.rows(); ++r) {
    if (codes.is_missing(r) || hadm.is_missing(r)) continue;
    const std::string code = code_text(codes, r);
    bool hit = std::any_of(cfg.icd_codes.begin(), cfg.icd_codes.end(),
                           [&](const std::string& p) { return code_matches(code, p); });
    if (!hit) continue;
    if (!seen.insert(hadm.number(r)).second) continue;  // duplicate admission
    keep.push_back(r);
  }
  if (keep.empty()) {
    warn(warnings, ErrorCode::EmptyCohort, "no diagnosis rows matched the configured ICD codes");
  }
  return diagnoses.take_rows(keep);
}

PatientFrame first_icu_stay(const PatientFrame& stays) {
  const Column& intime = stays.column("intime");
  const Column& stay = stays.column("stay_id");
  std::vector<std::size_t> keep;
  for (const auto& group : group_rows(stays, "subject_id")) {
    std::size_t best = group.front();
    for (std::size_t r : group) {
      if (intime.is_missing(r)) {
        throw Error(ErrorCode::MissingIntime, "row " + std::to_string(r));
      }
    }
    for (std::size_t r : group) {
      const double t = intime.number(r), tb = intime.number(best);
      if (t < tb || (t == tb && stay.number(r) < stay.number(best))) best = r;
    }
    keep.push_back(best);
  }
  return stays.take_rows(keep);
}

PatientFrame label_mortality(const PatientFrame& admissions) {
  const Column& disch = admissions.column("dischtime");
  const auto death_idx = admissions.find("deathtime");
  std::vector<double> label(admissions.rows(), 0.0);
  for (std::size_t r = 0; r < admissions.rows(); ++r) {
    if (disch.is_missing(r)) {
      throw Error(ErrorCode::MissingDischtime, "row " + std::to_string(r));
    }
    if (!death_idx) continue;
    const Column& death = admissions.column(*death_idx);
    if (!death.is_missing(r) && death.number(r) <= disch.number(r)) label[r] = 1.0;
  }
  return admissions.with_column(Column::numeric("in_hospital_death", std::move(label)));
}

PatientFrame apply_age_filter(const PatientFrame& frame, const CohortConfig& cfg) {
  const Column& age = frame.column(cfg.age_column);
  if (!age.is_numeric()) throw Error(ErrorCode::NonNumericColumn, cfg.age_column);
  return frame.filter_rows([&](std::size_t r) {
    return !age.is_missing(r) && age.number(r) >= static_cast<double>(cfg.min_age);
  });
}

Schema diagnoses_schema() {
  return {{"subject_id", ColumnType::Numeric, true},
          {"hadm_id", ColumnType::Numeric, true},
          {"icd_code", ColumnType::Categorical, true}};
}

Schema patients_schema() {
  return {{"subject_id", ColumnType::Numeric, true}, {"anchor_age", ColumnType::Numeric, true}};
}

Schema icustays_schema() {
  return {{"subject_id", ColumnType::Numeric, true},
          {"hadm_id", ColumnType::Numeric, true},
          {"stay_id", ColumnType::Numeric, true},
          {"intime", ColumnType::Timestamp, true},
          {"outtime", ColumnType::Timestamp, false}};
}

Schema admissions_schema() {
  return {{"subject_id", ColumnType::Numeric, true},
          {"hadm_id", ColumnType::Numeric, true},
          {"dischtime", ColumnType::Timestamp, true},
          {"deathtime", ColumnType::Timestamp, false}};
}

PatientFrame build_cohort(const CohortTables& tables, const CohortConfig& cfg, Warnings* warnings) {
  const std::vector<std::string> dx_keys{"subject_id", "hadm_id"};
  PatientFrame dx = filter_by_diagnosis(tables.diagnoses, cfg, warnings).select(dx_keys);

  const std::vector<std::string> stay_cols{"subject_id", "hadm_id", "stay_id", "intime"};
  PatientFrame stays = join(dx, tables.icustays.select(stay_cols),
                            {{JoinKey::SubjectId, JoinKey::HadmId}, JoinKind::Inner});
  stays = first_icu_stay(stays);

  const std::vector<std::string> patient_cols{"subject_id", cfg.age_column};
  PatientFrame aged = join(stays, tables.patients.select(patient_cols),
                           {{JoinKey::SubjectId}, JoinKind::Inner});
  aged = apply_age_filter(aged, cfg);

  std::vector<std::string> adm_cols{"hadm_id", "dischtime"};
  if (tables.admissions.has("deathtime")) adm_cols.emplace_back("deathtime");
  PatientFrame labeled = join(aged, tables.admissions.select(adm_cols),
                              {{JoinKey::HadmId}, JoinKind::Inner});
  if (!labeled.has("deathtime")) {
    labeled = labeled.with_column(Column::missing_numeric("deathtime", labeled.rows()));
  }
  labeled = label_mortality(labeled);
  if (cfg.age_column != "anchor_age") {
    labeled = labeled.with_column(labeled.column(cfg.age_column).renamed("anchor_age"));
  }
  if (labeled.rows() == 0) {
    warn(warnings, ErrorCode::EmptyCohort, "cohort is empty after linkage and eligibility filters");
  }
  const std::vector<std::string> out_cols{"subject_id", "hadm_id", "stay_id", "anchor_age",
                                          "intime", "dischtime", "deathtime", "in_hospital_death"};
  return labeled.select(out_cols);
}

}  // namespace riskforge::cohort
