#include "riskforge/glm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "riskforge/csv.hpp"
#include "riskforge/error.hpp"

namespace riskforge::glm {

namespace {

constexpr double kSeparationResidual = 1e-6;
constexpr double kJitter = 1e-8;
constexpr double kMinRcond = 1e-14;

double log1pexp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Sum-scale Bernoulli log-likelihood from the linear predictor.
double loglik_from_eta(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y[i] * eta[i] - log1pexp(eta[i]);
  return ll;
}

void check_inputs(const FeatureMatrix& x, std::span<const double> y) {
  if (static_cast<Eigen::Index>(y.size()) != x.rows()) {
    throw Error(ErrorCode::InvalidArgument, "outcome length does not match design rows");
  }
  if (y.empty()) throw Error(ErrorCode::TooFewRows, "logistic fit needs at least one row");
  for (double v : y) {
    if (v != 0.0 && v != 1.0) throw Error(ErrorCode::InvalidArgument, "outcome must be 0/1");
  }
  if (!x.values.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "design matrix has missing or non-finite cells");
  }
}

// Cholesky of the information matrix; one ridge retry, then SingularHessian.
Eigen::LLT<Eigen::MatrixXd> factor_information(Eigen::MatrixXd info) {
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() == Eigen::Success && llt.rcond() > kMinRcond) return llt;
  info.diagonal().array() += kJitter;
  llt.compute(info);
  if (llt.info() == Eigen::Success && llt.rcond() > kMinRcond) return llt;
  throw Error(ErrorCode::SingularHessian, "information matrix is singular after ridge retry");
}

}  // namespace

std::string_view to_string(FitStatus s) {
  switch (s) {
    case FitStatus::Converged: return "Converged";
    case FitStatus::Separation: return "Separation";
    case FitStatus::MaxIterations: return "MaxIterations";
  }
  return "?";
}

double null_loglik(std::span<const double> y) {
  const double n = static_cast<double>(y.size());
  double k = 0.0;
  for (double v : y) k += v;
  if (k == 0.0 || k == n) return 0.0;
  return k * std::log(k / n) + (n - k) * std::log1p(-k / n);
}

double normal_two_sided_p(double z) {
  if (!std::isfinite(z)) return std::isnan(z) ? std::numeric_limits<double>::quiet_NaN() : 0.0;
  return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

GlmFit fit_logistic(const FeatureMatrix& x, std::span<const double> y, const LogisticOptions& opts) {
  check_inputs(x, y);
  const Eigen::Index n = x.rows();
  const Eigen::Index k = x.cols() + 1;
  Eigen::MatrixXd design(n, k);
  design.col(0).setOnes();
  if (x.cols() > 0) design.rightCols(x.cols()) = x.values;
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), n);

  GlmFit fit;
  fit.n = static_cast<std::size_t>(n);
  fit.names.emplace_back(kIntercept);
  fit.names.insert(fit.names.end(), x.names.begin(), x.names.end());
  fit.loglik_null = null_loglik(y);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  const double ybar = yv.mean();
  if (ybar > 0.0 && ybar < 1.0) beta[0] = std::log(ybar / (1.0 - ybar));

  Eigen::VectorXd eta = design * beta;
  double ll = loglik_from_eta(eta, yv);
  Eigen::VectorXd p(n), w(n);
  fit.status = FitStatus::MaxIterations;

  for (int it = 0; it <= opts.max_iter; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      p[i] = sigmoid(eta[i]);
      w[i] = p[i] * (1.0 - p[i]);
    }
    const Eigen::VectorXd resid = yv - p;
    const Eigen::VectorXd score = design.transpose() * resid;
    fit.max_abs_score = score.cwiseAbs().maxCoeff();
    fit.iterations = it;
    if (k > 1 && resid.cwiseAbs().maxCoeff() < kSeparationResidual) {
      fit.status = FitStatus::Separation;
      break;
    }
    if (fit.max_abs_score < opts.score_tolerance) {
      fit.status = FitStatus::Converged;
      break;
    }
    if (it == opts.max_iter) break;
    const Eigen::MatrixXd info = design.transpose() * w.asDiagonal() * design;
    const Eigen::VectorXd step = factor_information(info).solve(score);
    double scale = 1.0;
    Eigen::VectorXd trial = beta + step;
    Eigen::VectorXd trial_eta = design * trial;
    double trial_ll = loglik_from_eta(trial_eta, yv);
    // slack for summation rounding in ll near the optimum
    const double slack = 1e-12 * (1.0 + std::abs(ll));
    for (int h = 0; h < 30 && !(trial_ll >= ll - slack); ++h) {
      scale *= 0.5;
      trial = beta + scale * step;
      trial_eta = design * trial;
      trial_ll = loglik_from_eta(trial_eta, yv);
    }
    beta = trial;
    eta = trial_eta;
    ll = trial_ll;
  }

  fit.converged = fit.status == FitStatus::Converged;
  fit.loglik = k == 1 ? fit.loglik_null : ll;
  fit.pseudo_r2 = fit.loglik_null < 0.0 ? std::max(0.0, 1.0 - fit.loglik / fit.loglik_null) : 0.0;

  Eigen::VectorXd se = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::quiet_NaN());
  if (fit.status != FitStatus::Separation) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pi = sigmoid(eta[i]);
      w[i] = pi * (1.0 - pi);
    }
    const Eigen::MatrixXd info = design.transpose() * w.asDiagonal() * design;
    const Eigen::MatrixXd cov = factor_information(info).solve(Eigen::MatrixXd::Identity(k, k));
    se = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  }
  for (Eigen::Index j = 0; j < k; ++j) {
    const double b = beta[j], s = se[j];
    const double z = b / s;
    fit.coef.push_back(b);
    fit.se.push_back(s);
    fit.z.push_back(z);
    fit.p.push_back(normal_two_sided_p(z));
    fit.ci_low.push_back(b - kZ975 * s);
    fit.ci_high.push_back(b + kZ975 * s);
  }
  return fit;
}

std::vector<double> predict_proba(const GlmFit& fit, const FeatureMatrix& x) {
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(x.rows(), fit.coef.at(0));
  for (std::size_t j = 1; j < fit.names.size(); ++j) {
    eta += fit.coef[j] * x.values.col(x.index_of(fit.names[j]));
  }
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = sigmoid(eta[i]);
  return out;
}

std::vector<ScreenRow> univariate_screen(const FeatureMatrix& x, std::span<const double> y, double alpha) {
  std::vector<ScreenRow> rows;
  rows.reserve(x.names.size());
  for (const std::string& name : x.names) {
    ScreenRow row;
    row.variable = name;
    const std::string one[] = {name};
    try {
      const GlmFit fit = fit_logistic(x.select(one), y);
      row.coef = fit.coef[1];
      row.se = fit.se[1];
      row.p = fit.p[1];
      if (!fit.converged) row.reason = std::string(to_string(fit.status));
      row.significant = fit.converged && row.p < alpha;
    } catch (const Error& e) {
      row.coef = std::numeric_limits<double>::quiet_NaN();
      row.se = std::numeric_limits<double>::quiet_NaN();
      row.p = 1.0;
      row.reason = std::string(riskforge::to_string(e.code()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_p_value(double p) {
  if (std::isnan(p)) return "NA";
  if (p < 1e-4) return "<0.0001";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", p);
  return buf;
}

namespace {

std::string fixed4(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "NA" : (v > 0 ? "inf" : "-inf");
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  std::string s = buf;
  return s == "-0.0000" ? "0.0000" : s;
}

}  // namespace

PatientFrame screen_report_frame(const std::vector<ScreenRow>& rows) {
  std::vector<std::string> var, coef, pval, sig, reason;
  for (const ScreenRow& r : rows) {
    var.push_back(r.variable);
    coef.push_back(fixed4(r.coef));
    pval.push_back(format_p_value(r.p));
    sig.push_back(r.significant ? "Yes" : "No");
    reason.push_back(r.reason);
  }
  return PatientFrame({Column::categorical("Variable", std::move(var)),
                       Column::categorical("Coefficient", std::move(coef)),
                       Column::categorical("P-value", std::move(pval)),
                       Column::categorical("Significant", std::move(sig)),
                       Column::categorical("Reason", std::move(reason))});
}

PatientFrame model_summary_frame(const GlmFit& fit) {
  std::vector<std::string> var = fit.names;
  std::vector<double> coef = fit.coef, se = fit.se, z = fit.z, p = fit.p, lo = fit.ci_low, hi = fit.ci_high;
  const std::size_t k = var.size();
  const std::pair<const char*, double> extra[] = {{"Pseudo R2", fit.pseudo_r2},
                                                  {"Log-Likelihood", fit.loglik},
                                                  {"LL-Null", fit.loglik_null},
                                                  {"N", static_cast<double>(fit.n)}};
  for (const auto& [label, value] : extra) {
    var.emplace_back(label);
    coef.push_back(value);
  }
  const std::size_t rows = var.size();
  auto padded = [&](const char* name, std::vector<double> v) {
    std::vector<std::uint8_t> miss(rows, 0);
    v.resize(rows, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < rows; ++i) miss[i] = i >= k || std::isnan(v[i]);
    return Column::numeric(name, std::move(v), std::move(miss));
  };
  return PatientFrame({Column::categorical("Variable", std::move(var)),
                       Column::numeric("Coefficient", std::move(coef)), padded("Std.Error", se),
                       padded("z", z), padded("P-value", p), padded("CI lower", lo),
                       padded("CI upper", hi)});
}

std::vector<double> compute_vif(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows(), k = x.cols();
  std::vector<double> out(static_cast<std::size_t>(k), std::numeric_limits<double>::infinity());
  if (n == 0) return out;
  Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  for (Eigen::Index j = 0; j < k; ++j) {
    const double tss = centered.col(j).squaredNorm();
    const double norm = std::sqrt(tss);
    if (!(norm > 1e-12 * std::max(1.0, x.col(j).cwiseAbs().maxCoeff()) * std::sqrt(double(n)))) {
      continue;  // constant column
    }
    if (k == 1) {
      out[static_cast<std::size_t>(j)] = 1.0;
      continue;
    }
    Eigen::MatrixXd others(n, k - 1);
    others << centered.leftCols(j), centered.rightCols(k - j - 1);
    const Eigen::VectorXd target = centered.col(j) / norm;
    const Eigen::VectorXd b = others.colPivHouseholderQr().solve(target);
    const double rss = (target - others * b).squaredNorm();
    const double one_minus_r2 = std::clamp(rss, 0.0, 1.0);
    out[static_cast<std::size_t>(j)] =
        one_minus_r2 < 1e-12 ? std::numeric_limits<double>::infinity() : 1.0 / one_minus_r2;
  }
  return out;
}

VifReport vif(const FeatureMatrix& x, const VifConfig& cfg) {
  if (x.cols() < 2) throw Error(ErrorCode::InvalidArgument, "vif needs at least two columns");
  if (!x.values.allFinite()) throw Error(ErrorCode::InvalidArgument, "vif input has missing cells");
  VifReport report;
  report.variables = x.names;
  report.initial_vif = compute_vif(x.values);

  const std::set<std::string> exempt(cfg.exempt.begin(), cfg.exempt.end());
  std::vector<std::size_t> active(x.names.size());
  for (std::size_t j = 0; j < active.size(); ++j) active[j] = j;

  auto submatrix = [&] {
    Eigen::MatrixXd m(x.rows(), static_cast<Eigen::Index>(active.size()));
    for (std::size_t c = 0; c < active.size(); ++c) m.col(c) = x.values.col(active[c]);
    return m;
  };

  // Constant columns have undefined VIF and go before anything else.
  for (std::size_t c = active.size(); c-- > 0;) {
    const auto col = x.values.col(active[c]);
    if ((col.array() == col[0]).all()) {
      report.drop_sequence.push_back({x.names[active[c]], "", "ConstantColumn",
                                      std::numeric_limits<double>::infinity()});
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(c));
    }
  }
  std::reverse(report.drop_sequence.begin(), report.drop_sequence.end());

  std::vector<double> current = active.size() >= 1 ? compute_vif(submatrix()) : std::vector<double>{};
  while (active.size() >= 2) {
    auto pos_of = [&](const std::string& name) -> std::ptrdiff_t {
      for (std::size_t c = 0; c < active.size(); ++c) {
        if (x.names[active[c]] == name) return static_cast<std::ptrdiff_t>(c);
      }
      return -1;
    };
    auto offends = [&](std::size_t c) {
      return !exempt.count(x.names[active[c]]) && current[c] > cfg.drop_threshold;
    };
    bool any = false;
    for (std::size_t c = 0; c < active.size(); ++c) any = any || offends(c);
    if (!any) break;

    std::ptrdiff_t drop = -1;
    std::string kept, reason;
    double best_pair_vif = -1.0;
    for (const auto& [keep_name, drop_name] : cfg.preferences) {
      const auto kp = pos_of(keep_name), dp = pos_of(drop_name);
      if (kp < 0 || dp < 0 || exempt.count(drop_name)) continue;
      if (!offends(static_cast<std::size_t>(kp)) && !offends(static_cast<std::size_t>(dp))) continue;
      const double pair_vif = std::max(current[kp], current[dp]);
      if (pair_vif > best_pair_vif) {
        best_pair_vif = pair_vif;
        drop = dp;
        kept = keep_name;
        reason = "preference";
      }
    }
    if (drop < 0) {
      double best = -1.0;
      for (std::size_t c = 0; c < active.size(); ++c) {
        if (offends(c) && current[c] >= best) {
          best = current[c];
          drop = static_cast<std::ptrdiff_t>(c);
        }
      }
      reason = "max_vif";
    }
    report.drop_sequence.push_back({x.names[active[drop]], kept, reason, current[drop]});
    active.erase(active.begin() + drop);
    current = compute_vif(submatrix());
  }
  if (active.size() == 1) current = {1.0};

  for (std::size_t c = 0; c < active.size(); ++c) {
    const std::string& name = x.names[active[c]];
    report.final_variables.push_back(name);
    report.final_vif.push_back(current[c]);
    if (current[c] > cfg.warn_threshold) report.warned.push_back(name);
  }
  return report;
}

PatientFrame vif_report_frame(const VifReport& report) {
  std::vector<std::string> var, status, kept, reason;
  std::vector<double> initial, final_vif;
  std::vector<std::uint8_t> final_missing;
  for (std::size_t j = 0; j < report.variables.size(); ++j) {
    const std::string& name = report.variables[j];
    var.push_back(name);
    initial.push_back(report.initial_vif[j]);
    auto fit = std::find(report.final_variables.begin(), report.final_variables.end(), name);
    auto dropped = std::find_if(report.drop_sequence.begin(), report.drop_sequence.end(),
                                [&](const VifDrop& d) { return d.dropped == name; });
    if (fit != report.final_variables.end()) {
      const double v = report.final_vif[static_cast<std::size_t>(fit - report.final_variables.begin())];
      final_vif.push_back(v);
      final_missing.push_back(0);
      const bool warned =
          std::find(report.warned.begin(), report.warned.end(), name) != report.warned.end();
      status.emplace_back(warned ? "retained_warn" : "retained");
      kept.emplace_back();
      reason.emplace_back();
    } else {
      final_vif.push_back(std::numeric_limits<double>::quiet_NaN());
      final_missing.push_back(1);
      const auto order = dropped - report.drop_sequence.begin() + 1;
      status.push_back("dropped_" + std::to_string(order));
      kept.push_back(dropped->kept_instead);
      reason.push_back(dropped->reason);
    }
  }
  std::vector<std::string> initial_text;
  for (double v : initial) initial_text.push_back(std::isinf(v) ? "inf" : format_number(v));
  return PatientFrame({Column::categorical("Variable", std::move(var)),
                       Column::categorical("Initial VIF", std::move(initial_text)),
                       Column::numeric("Final VIF", std::move(final_vif), std::move(final_missing)),
                       Column::categorical("Status", std::move(status)),
                       Column::categorical("Kept Instead", std::move(kept)),
                       Column::categorical("Reason", std::move(reason))});
}

std::vector<std::string> consolidate_features(std::span<const std::string> lasso_set,
                                              std::span<const std::string> gbt_set) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (auto set : {lasso_set, gbt_set}) {
    for (const std::string& name : set) {
      if (seen.insert(name).second) out.push_back(name);
    }
  }
  return out;
}

}  // namespace riskforge::glm
