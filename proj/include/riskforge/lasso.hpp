#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskforge/feature_matrix.hpp"
#include "riskforge/frame.hpp"

namespace riskforge::lasso {

struct LassoOptions {
  double tolerance = 1e-7;  // max coefficient change over an outer step
  long max_sweeps = 100000;
};

struct LassoFit {
  double lambda = 0.0;
  double intercept = 0.0;
  Eigen::VectorXd coef;
  long sweeps = 0;

  std::size_t nonzero() const;
};

/// max_j |x_j'(y - ybar)| / n: the smallest penalty with an all-zero solution.
double lambda_max(const Eigen::MatrixXd& x, std::span<const double> y);

/// Minimizes (1/n) sum logistic loss + lambda * ||beta||_1 with an unpenalized
/// intercept. Proximal Newton: each outer step solves the weighted
/// least-squares lasso of the local quadratic expansion by coordinate descent
/// and backtracks until the penalized objective does not increase. Converged
/// when an outer step moves no coefficient by more than `tolerance`. Throws
/// NonConvergence after max_sweeps coordinate sweeps.
LassoFit fit_lasso(const Eigen::MatrixXd& x, std::span<const double> y, double lambda,
                   const LassoOptions& opts = {}, const LassoFit* warm = nullptr);

struct LassoPath {
  std::vector<double> lambda_grid;  // descending
  std::vector<LassoFit> fits;
  std::vector<std::size_t> nonzero_counts;
};

/// `count` log-spaced values from lambda_max down to lambda_max * ratio.
std::vector<double> lambda_grid(double lambda_max, std::size_t count = 100, double ratio = 1e-4);

/// Warm-started fits along a descending grid.
LassoPath fit_path(const Eigen::MatrixXd& x, std::span<const double> y, std::span<const double> grid,
                   const LassoOptions& opts = {});

enum class Rule { Min, OneSe, Pct75 };

std::string_view to_string(Rule r);
Rule parse_rule(std::string_view text);

struct CvConfig {
  int folds = 10;
  std::size_t grid_size = 100;
  double min_ratio = 1e-4;
  std::uint64_t seed = 0;
  Rule rule = Rule::Pct75;
  LassoOptions fit;

  void validate() const;
};

struct CvCurve {
  std::vector<double> lambda_grid;
  std::vector<double> mean_deviance;
  std::vector<double> se_deviance;
  std::vector<std::size_t> nonzero_counts;  // full-data path
  double lambda_min = 0.0;
  double lambda_1se = 0.0;
  double lambda_selected = 0.0;
  int fold_count = 0;
  std::uint64_t seed = 0;
};

/// Stratified fold labels. Within each class rows are ordered by a seeded
/// hash of their id and dealt round-robin, so labels follow row identity
/// rather than position. Throws DegenerateFold when a class has fewer rows
/// than folds.
std::vector<int> assign_folds(std::span<const double> y, std::span<const std::int64_t> ids, int folds,
                              std::uint64_t seed);

/// Deviance = -2 * mean held-out log-likelihood per fold; mean and standard
/// error (sd / sqrt(K)) across folds at each grid value.
CvCurve cv_deviance(const Eigen::MatrixXd& x, std::span<const double> y, std::span<const std::int64_t> ids,
                    const CvConfig& cfg);

/// pct75 is exp(log lmin + 0.75 (log l1se - log lmin)).
double select_lambda(const CvCurve& curve, Rule rule);

/// Refit on all rows at `lambda`; names of exactly nonzero coefficients in
/// column order.
std::vector<std::string> selected_features(const FeatureMatrix& x, std::span<const double> y, double lambda,
                                           const LassoOptions& opts = {});

/// lambda, mean_deviance, se_deviance, nonzero, plus marker columns.
PatientFrame cv_curve_frame(const CvCurve& curve);

}  // namespace riskforge::lasso
