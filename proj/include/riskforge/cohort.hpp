#pragma once

#include <string>
#include <vector>

#include "riskforge/csv.hpp"
#include "riskforge/error.hpp"
#include "riskforge/frame.hpp"

namespace riskforge::cohort {

struct CohortConfig {
  /// Purely numeric codes (ICD-9) match exactly; codes starting with a letter
  /// (ICD-10 stems) or ending in '*' match as prefixes.
  std::vector<std::string> icd_codes{"4275", "I46", "I462", "I468", "I469"};
  int min_age = 18;
  std::string code_column = "icd_code";
  std::string age_column = "anchor_age";

  void validate() const;
};

bool code_matches(std::string_view code, std::string_view pattern);

PatientFrame filter_by_diagnosis(const PatientFrame& diagnoses, const CohortConfig& cfg,
                                 Warnings* warnings = nullptr);

/// Earliest intime per subject_id; equal intimes resolve to the smaller stay_id.
PatientFrame first_icu_stay(const PatientFrame& stays);

/// Adds in_hospital_death = 1 iff deathtime is present and deathtime <= dischtime.
PatientFrame label_mortality(const PatientFrame& admissions);

/// Keeps rows with age >= min_age; a masked age is ineligible.
PatientFrame apply_age_filter(const PatientFrame& frame, const CohortConfig& cfg);

struct CohortTables {
  PatientFrame diagnoses;   // subject_id, hadm_id, icd_code
  PatientFrame patients;    // subject_id, anchor_age
  PatientFrame icustays;    // subject_id, hadm_id, stay_id, intime, outtime?
  PatientFrame admissions;  // subject_id, hadm_id, dischtime, deathtime?
};

Schema diagnoses_schema();
Schema patients_schema();
Schema icustays_schema();
Schema admissions_schema();

/// Diagnosis filter -> ICU linkage -> first stay -> age filter -> outcome.
/// Output columns: subject_id, hadm_id, stay_id, anchor_age, intime,
/// dischtime, deathtime, in_hospital_death.
PatientFrame build_cohort(const CohortTables& tables, const CohortConfig& cfg,
                          Warnings* warnings = nullptr);

}  // namespace riskforge::cohort
