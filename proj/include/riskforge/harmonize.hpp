#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "riskforge/csv.hpp"
#include "riskforge/error.hpp"
#include "riskforge/frame.hpp"

namespace riskforge::harmonize {

struct PlausibilityRule {
  std::string variable;
  double lower = 0.0;
  double upper = 0.0;
  bool lower_inclusive = true;
  bool upper_inclusive = true;
  std::string unit;

  bool admits(double value) const;
  void validate() const;
};

/// Vital, lab and GCS limits. Only WBC, glucose and lactate bounds come from
/// the clinical source; the rest are conservative physiological limits.
std::vector<PlausibilityRule> default_plausibility();

struct PlausibilityResult {
  PatientFrame frame;
  std::vector<std::pair<std::string, std::size_t>> removed;  // per rule, in rule order
};

/// Out-of-range cells are masked; rows are never dropped.
PlausibilityResult apply_plausibility(const PatientFrame& frame,
                                      const std::vector<PlausibilityRule>& rules);

enum class TempUnit { Celsius, Fahrenheit, Unknown };

TempUnit parse_temp_unit(std::string_view label);

/// Returns degrees Fahrenheit. Unknown units below 50 are read as Celsius.
double convert_temperature(double value, TempUnit unit);
double fahrenheit_to_celsius(double value);

double mean_bp(double sbp, double dbp);

struct GcsComponents {
  double eye = 0.0;
  double verbal = 0.0;
  double motor = 0.0;
};

/// Sum of (possibly fractional, averaged) components; throws
/// ComponentOutOfRange when a component leaves eye [1,4], verbal [1,5],
/// motor [1,6].
double gcs_total(const GcsComponents& components);

/// GCS_Total from GCS_Eye / GCS_Verbal / GCS_Motor; masked where any
/// component is masked.
Column gcs_total_column(const PatientFrame& frame);

struct WindowResult {
  PatientFrame events;
  std::size_t unlinked = 0;  // no matching stay or masked time
  std::size_t outside = 0;   // linked but outside the window
};

/// Keeps events with intime <= t < intime + hours. Events are linked on
/// stay_id when they carry one, otherwise on hadm_id; the output always has a
/// stay_id column.
WindowResult window_24h(const PatientFrame& events, const PatientFrame& stays,
                        std::string_view time_column = "charttime", double hours = 24.0);

struct ItemMapping {
  std::int64_t itemid = 0;
  std::string variable;
  TempUnit unit = TempUnit::Unknown;  // temperature items only
};

struct VariableCatalog {
  std::vector<ItemMapping> items;
  std::vector<std::string> variables() const;  // distinct, first-seen order
};

VariableCatalog default_vital_catalog();
VariableCatalog default_lab_catalog();
VariableCatalog default_gcs_catalog();

/// Long events (stay_id, charttime, itemid, valuenum[, valueuom]) to one row
/// per (stay_id, charttime) with one column per catalog variable. Multiple
/// values of a variable at one timestamp (arterial and non-invasive pressure)
/// are averaged. Temperatures are converted to Fahrenheit.
PatientFrame pivot_events(const PatientFrame& events, const VariableCatalog& catalog);

/// Fills masked MBP cells from SBP and DBP at the same timestamp.
PatientFrame derive_mbp(const PatientFrame& wide);

struct FlagDefinition {
  std::string name;
  std::vector<std::string> icd_codes;  // comorbidities
  std::vector<std::int64_t> itemids;   // treatments
};

struct FlagConfig {
  std::vector<FlagDefinition> comorbidities;
  std::vector<FlagDefinition> treatments;
};

FlagConfig default_flags();

/// One row per cohort stay with a 0/1 column per flag. Comorbidities link on
/// hadm_id across all diagnoses; treatments must already be windowed.
PatientFrame binary_flags(const PatientFrame& cohort, const PatientFrame& diagnoses,
                          const PatientFrame& treatments, const FlagConfig& flags);

Schema chartevents_schema();
Schema labevents_schema();
Schema treatment_schema();

struct HarmonizeInputs {
  PatientFrame cohort;
  PatientFrame chartevents;
  PatientFrame labevents;
  PatientFrame diagnoses;
  PatientFrame procedureevents;
  PatientFrame inputevents;
};

struct HarmonizeConfig {
  std::vector<PlausibilityRule> plausibility = default_plausibility();
  VariableCatalog vitals = default_vital_catalog();
  VariableCatalog labs = default_lab_catalog();
  VariableCatalog gcs = default_gcs_catalog();
  FlagConfig flags = default_flags();
  double window_hours = 24.0;
};

struct HarmonizeReport {
  std::size_t unlinked_events = 0;
  std::size_t outside_window = 0;
  std::vector<std::pair<std::string, std::size_t>> plausibility_removed;
};

/// Patient-level structured frame: cohort keys, anchor_age,
/// in_hospital_death, `<var>_mean/_min/_max` for every vital and lab,
/// GCS component means with GCS_Total, and the binary flags.
PatientFrame harmonize_structured(const HarmonizeInputs& inputs, const HarmonizeConfig& cfg,
                                  HarmonizeReport* report = nullptr);

/// Vital and lab variable names, in output order.
std::vector<std::string> panel_variables(const HarmonizeConfig& cfg);

}  // namespace riskforge::harmonize
