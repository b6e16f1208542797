#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "riskforge/error.hpp"
#include "riskforge/frame.hpp"
#include "riskforge/glm.hpp"

namespace riskforge::impute {

enum class Method { Mean, Median, Mice, Zero, None };

std::string_view to_string(Method m);
Method parse_method(std::string_view text);

struct ImputePolicy {
  std::string variable;
  Method method = Method::None;
};

/// BT, lactate, pH, PT -> MICE; HR, DBP, sodium, bicarbonate -> mean;
/// SBP, MBP, RR, SpO2, creatinine, glucose -> median. Variables not listed
/// here are handled by `fallback_policy`.
std::vector<ImputePolicy> default_policies();

/// Policy for variables without an explicit entry: mean for GCS components,
/// zero for text-derived columns, median otherwise. A policy for "HR" also
/// covers HR_mean / HR_min / HR_max.
Method fallback_policy(std::string_view variable);

/// Mean/median/zero policies fill masked cells with the statistic of the
/// unmasked cells; mice/none columns are left untouched.
PatientFrame impute_single(const PatientFrame& frame, const std::vector<ImputePolicy>& policies);

struct MiceConfig {
  int m = 5;
  int max_iter = 10;
  std::uint64_t seed = 0;
  double ridge_penalty = 1e-3;

  void validate() const;
};

/// Chained-equation imputation. Every numeric column except the id keys
/// participates as a predictor; every column with masked cells is imputed.
/// Masked cells start at the column mean; each sweep regresses each
/// incomplete column on all others (ridge on standardized predictors, fit on
/// the column's originally observed rows) and redraws its masked cells as
/// prediction + N(0, residual sd). Chain k uses seed + k. Observed cells are
/// never altered.
std::vector<PatientFrame> mice_impute(const PatientFrame& frame, const MiceConfig& cfg,
                                      Warnings* warnings = nullptr);

struct RubinPooled {
  std::vector<double> beta_mi;
  std::vector<double> within_var;   // V
  std::vector<double> between_var;  // B
  std::vector<double> total_var;    // T = V + (1 + 1/m) B
  std::vector<double> pooled_se;
  std::vector<double> z;
  std::vector<double> p;
  std::vector<glm::GlmFit> per_imputation_fits;
  int m = 0;
};

RubinPooled rubin_pool(const std::vector<glm::GlmFit>& fits, int m);

struct MissingSummary {
  std::string variable;
  std::size_t missing = 0;
  std::size_t rows = 0;
  std::string method;
};

std::vector<MissingSummary> missing_report(const PatientFrame& frame,
                                           const std::vector<ImputePolicy>& policies,
                                           const std::vector<std::string>& variables);

/// "Variable,Missing Count,Missing %,Method" table.
PatientFrame missing_report_frame(const std::vector<MissingSummary>& rows);

}  // namespace riskforge::impute
