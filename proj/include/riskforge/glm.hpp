#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "riskforge/feature_matrix.hpp"
#include "riskforge/frame.hpp"

namespace riskforge::glm {

inline constexpr double kZ975 = 1.959964;
inline constexpr std::string_view kIntercept = "(Intercept)";

enum class FitStatus { Converged, Separation, MaxIterations };

std::string_view to_string(FitStatus s);

/// Logistic regression fit. Index 0 of every vector is the intercept.
struct GlmFit {
  std::vector<std::string> names;
  std::vector<double> coef;
  std::vector<double> se;
  std::vector<double> z;
  std::vector<double> p;
  std::vector<double> ci_low;
  std::vector<double> ci_high;
  double loglik = 0.0;
  double loglik_null = 0.0;
  double pseudo_r2 = 0.0;
  std::size_t n = 0;
  int iterations = 0;
  double max_abs_score = 0.0;
  bool converged = false;
  FitStatus status = FitStatus::MaxIterations;
};

struct LogisticOptions {
  double score_tolerance = 1e-8;
  int max_iter = 100;
};

/// Newton/IRLS maximum likelihood with an unpenalized intercept. Perfect
/// separation is reported through `status` (the fit is returned
/// non-converged); a singular information matrix is retried once with a
/// 1e-8 ridge and otherwise throws SingularHessian.
GlmFit fit_logistic(const FeatureMatrix& x, std::span<const double> y, const LogisticOptions& opts = {});

/// Probabilities for the rows of `x`, whose columns are matched to the fit by name.
std::vector<double> predict_proba(const GlmFit& fit, const FeatureMatrix& x);

/// Sum-scale log-likelihood of the intercept-only model.
double null_loglik(std::span<const double> y);

double normal_two_sided_p(double z);

struct ScreenRow {
  std::string variable;
  double coef = 0.0;
  double se = 0.0;
  double p = 1.0;
  bool significant = false;
  std::string reason;  // empty when the single-predictor fit converged
};

std::vector<ScreenRow> univariate_screen(const FeatureMatrix& x, std::span<const double> y,
                                         double alpha = 0.05);

/// "<0.0001" below 1e-4, otherwise four decimals.
std::string format_p_value(double p);

/// Variable, Coefficient, P-value, Significant, Reason.
PatientFrame screen_report_frame(const std::vector<ScreenRow>& rows);

/// Variable, Coefficient, Std.Error, z, P-value, CI lower, CI upper, then
/// pseudo-R2 / log-likelihood rows.
PatientFrame model_summary_frame(const GlmFit& fit);

struct VifConfig {
  double warn_threshold = 5.0;
  double drop_threshold = 10.0;
  /// (keep, drop) pairs consulted before the max-VIF rule.
  std::vector<std::pair<std::string, std::string>> preferences{
      {"PT", "INR"}, {"Hemoglobin", "Hematocrit"}, {"MBP", "DBP"}};
  std::vector<std::string> exempt;
};

struct VifDrop {
  std::string dropped;
  std::string kept_instead;
  std::string reason;
  double vif = 0.0;
};

struct VifReport {
  std::vector<std::string> variables;
  std::vector<double> initial_vif;
  std::vector<std::string> final_variables;
  std::vector<double> final_vif;
  std::vector<VifDrop> drop_sequence;
  std::vector<std::string> warned;  // final VIF in (warn, drop] range
};

/// VIF_j = 1 / (1 - R_j^2), R_j^2 from least squares of column j on all
/// other columns plus an intercept. Constant or exactly collinear columns
/// get +infinity.
std::vector<double> compute_vif(const Eigen::MatrixXd& x);

/// Iterative resolution: constant columns go first; then, while any
/// non-exempt VIF exceeds the drop threshold, a preference pair with an
/// offending member drops its non-preferred member, otherwise the max-VIF
/// column is dropped (ties: the later column).
VifReport vif(const FeatureMatrix& x, const VifConfig& cfg = {});

PatientFrame vif_report_frame(const VifReport& report);

/// Union preserving order: LASSO names first, then unseen GBT names.
std::vector<std::string> consolidate_features(std::span<const std::string> lasso_set,
                                              std::span<const std::string> gbt_set);

}  // namespace riskforge::glm
