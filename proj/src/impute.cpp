#include "riskforge/impute.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "riskforge/rng.hpp"

namespace riskforge::impute {

namespace {

bool is_key(std::string_view name) {
  return name == "subject_id" || name == "hadm_id" || name == "stay_id";
}

std::string_view base_name(std::string_view name) {
  for (std::string_view suffix : {"_mean", "_min", "_max"}) {
    if (name.size() > suffix.size() && name.ends_with(suffix)) {
      return name.substr(0, name.size() - suffix.size());
    }
  }
  return name;
}

Method method_for(std::string_view column, const std::vector<ImputePolicy>& policies) {
  for (const auto& p : policies) {
    if (p.variable == column) return p.method;
  }
  const std::string_view base = base_name(column);
  for (const auto& p : policies) {
    if (p.variable == base) return p.method;
  }
  return fallback_policy(column);
}

std::vector<double> observed(const Column& c) {
  std::vector<double> v;
  for (std::size_t r = 0; r < c.size(); ++r) {
    if (!c.is_missing(r)) v.push_back(c.number(r));
  }
  return v;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Column filled(const Column& c, double value) {
  Column out = c;
  for (std::size_t r = 0; r < c.size(); ++r) {
    if (c.is_missing(r)) out.set_number(r, value);
  }
  return out;
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Mean: return "mean";
    case Method::Median: return "median";
    case Method::Mice: return "mice";
    case Method::Zero: return "zero";
    case Method::None: return "none";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  for (Method m : {Method::Mean, Method::Median, Method::Mice, Method::Zero, Method::None}) {
    if (to_string(m) == text) return m;
  }
  throw Error(ErrorCode::ConfigInvalid, "impute method: unknown value '" + std::string(text) + "'");
}

std::vector<ImputePolicy> default_policies() {
  std::vector<ImputePolicy> out;
  for (const char* v : {"BT", "Lactate", "pH", "PT"}) out.push_back({v, Method::Mice});
  for (const char* v : {"HR", "DBP", "Sodium", "Bicarbonate"}) out.push_back({v, Method::Mean});
  for (const char* v : {"SBP", "MBP", "RR", "SpO2", "Creatinine", "Glucose"}) {
    out.push_back({v, Method::Median});
  }
  return out;
}

Method fallback_policy(std::string_view variable) {
  if (variable.starts_with("GCS_")) return Method::Mean;
  if (variable.starts_with("has_") || variable.find("_tfidf_svd_") != std::string_view::npos ||
      variable.find("_bert_pca_") != std::string_view::npos) {
    return Method::Zero;
  }
  return Method::Median;
}

PatientFrame impute_single(const PatientFrame& frame, const std::vector<ImputePolicy>& policies) {
  for (const auto& p : policies) {
    bool present = frame.has(p.variable);
    for (const auto& c : frame.columns()) present = present || base_name(c.name()) == p.variable;
    if (!present) throw Error(ErrorCode::MissingColumn, p.variable);
  }
  PatientFrame out = frame;
  for (const Column& c : frame.columns()) {
    if (!c.is_numeric() || is_key(c.name()) || c.missing_count() == 0) continue;
    const Method m = method_for(c.name(), policies);
    if (m == Method::Mice || m == Method::None) continue;
    if (m == Method::Zero) {
      out = out.with_column(filled(c, 0.0));
      continue;
    }
    const std::vector<double> obs = observed(c);
    if (obs.empty()) throw Error(ErrorCode::AllMissingColumn, c.name());
    out = out.with_column(filled(c, m == Method::Mean ? mean_of(obs) : median_of(obs)));
  }
  return out;
}

void MiceConfig::validate() const {
  if (m < 2) throw Error(ErrorCode::ConfigInvalid, "mice.m: must be >= 2");
  if (max_iter < 1) throw Error(ErrorCode::ConfigInvalid, "mice.max_iter: must be >= 1");
  if (!(ridge_penalty > 0.0)) throw Error(ErrorCode::ConfigInvalid, "mice.ridge_penalty: must be > 0");
}

std::vector<PatientFrame> mice_impute(const PatientFrame& frame, const MiceConfig& cfg, Warnings* warnings) {
  cfg.validate();
  std::vector<std::size_t> vars;
  for (std::size_t j = 0; j < frame.cols(); ++j) {
    const Column& c = frame.column(j);
    if (c.is_numeric() && !is_key(c.name())) vars.push_back(j);
  }
  if (vars.size() < 2) throw Error(ErrorCode::InvalidArgument, "mice needs at least two numeric columns");

  const Eigen::Index n = static_cast<Eigen::Index>(frame.rows());
  const Eigen::Index p = static_cast<Eigen::Index>(vars.size());
  Eigen::MatrixXd base(n, p);
  std::vector<std::vector<Eigen::Index>> obs_rows(vars.size()), miss_rows(vars.size());
  std::vector<std::size_t> incomplete;
  for (Eigen::Index v = 0; v < p; ++v) {
    const Column& c = frame.column(vars[v]);
    const std::vector<double> obs = observed(c);
    if (obs.empty()) throw Error(ErrorCode::AllMissingColumn, c.name());
    const double mu = mean_of(obs);
    for (Eigen::Index r = 0; r < n; ++r) {
      if (c.is_missing(r)) {
        base(r, v) = mu;
        miss_rows[v].push_back(r);
      } else {
        base(r, v) = c.number(r);
        obs_rows[v].push_back(r);
      }
    }
    if (!miss_rows[v].empty()) incomplete.push_back(static_cast<std::size_t>(v));
  }

  std::set<std::string> warned;
  std::vector<PatientFrame> out;
  out.reserve(static_cast<std::size_t>(cfg.m));
  for (int k = 0; k < cfg.m; ++k) {
    Eigen::MatrixXd cur = base;
    Rng rng(cfg.seed + static_cast<std::uint64_t>(k));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int sweep = 0; sweep < cfg.max_iter && !incomplete.empty(); ++sweep) {
      for (std::size_t v : incomplete) {
        const auto& rows = obs_rows[v];
        const Eigen::Index nobs = static_cast<Eigen::Index>(rows.size());
        // Standardized predictors, dropping those constant over observed rows.
        std::vector<Eigen::Index> preds;
        std::vector<double> mu, sd;
        for (Eigen::Index u = 0; u < p; ++u) {
          if (u == static_cast<Eigen::Index>(v)) continue;
          double m1 = 0.0;
          for (auto r : rows) m1 += cur(r, u);
          m1 /= static_cast<double>(nobs);
          double ss = 0.0;
          for (auto r : rows) ss += (cur(r, u) - m1) * (cur(r, u) - m1);
          const double s = nobs > 1 ? std::sqrt(ss / static_cast<double>(nobs - 1)) : 0.0;
          if (s < 1e-12) continue;
          preds.push_back(u);
          mu.push_back(m1);
          sd.push_back(s);
        }
        const Eigen::Index q = static_cast<Eigen::Index>(preds.size());
        Eigen::MatrixXd z(nobs, q);
        Eigen::VectorXd target(nobs);
        for (Eigen::Index i = 0; i < nobs; ++i) {
          target[i] = cur(rows[i], static_cast<Eigen::Index>(v));
          for (Eigen::Index a = 0; a < q; ++a) z(i, a) = (cur(rows[i], preds[a]) - mu[a]) / sd[a];
        }
        const double ybar = target.mean();
        bool singular = nobs < 2 || q == 0;
        Eigen::VectorXd beta;
        if (!singular) {
          Eigen::MatrixXd gram = z.transpose() * z;
          gram.diagonal().array() += cfg.ridge_penalty;
          Eigen::LLT<Eigen::MatrixXd> llt(gram);
          singular = llt.info() != Eigen::Success;
          if (!singular) beta = llt.solve(z.transpose() * (target.array() - ybar).matrix());
          singular = singular || !beta.allFinite();
        }
        if (singular) {
          const std::string& name = frame.column(vars[v]).name();
          if (warned.insert(name).second) {
            warn(warnings, ErrorCode::SingularDesign, "mice: mean fill for column " + name);
          }
          for (auto r : miss_rows[v]) cur(r, static_cast<Eigen::Index>(v)) = base(r, static_cast<Eigen::Index>(v));
          continue;
        }
        const Eigen::VectorXd resid = (target.array() - ybar).matrix() - z * beta;
        const double dof = static_cast<double>(std::max<Eigen::Index>(nobs - q - 1, 1));
        const double sigma = std::sqrt(resid.squaredNorm() / dof);
        for (auto r : miss_rows[v]) {
          double pred = ybar;
          for (Eigen::Index a = 0; a < q; ++a) pred += beta[a] * (cur(r, preds[a]) - mu[a]) / sd[a];
          cur(r, static_cast<Eigen::Index>(v)) = pred + sigma * normal(rng);
        }
      }
    }
    PatientFrame done = frame;
    for (std::size_t v : incomplete) {
      Column c = frame.column(vars[v]);
      for (auto r : miss_rows[v]) c.set_number(static_cast<std::size_t>(r), cur(r, static_cast<Eigen::Index>(v)));
      done = done.with_column(std::move(c));
    }
    out.push_back(std::move(done));
  }
  return out;
}

RubinPooled rubin_pool(const std::vector<glm::GlmFit>& fits, int m) {
  if (m < 1 || static_cast<std::size_t>(m) != fits.size()) {
    throw Error(ErrorCode::LayoutMismatch, "expected " + std::to_string(m) + " fits, got " +
                                               std::to_string(fits.size()));
  }
  const std::size_t k = fits.front().coef.size();
  for (const auto& f : fits) {
    if (f.coef.size() != k || f.se.size() != k || f.names != fits.front().names) {
      throw Error(ErrorCode::LayoutMismatch, "per-imputation fits differ in coefficient layout");
    }
  }
  RubinPooled out;
  out.m = m;
  out.per_imputation_fits = fits;
  const double md = static_cast<double>(m);
  for (std::size_t j = 0; j < k; ++j) {
    double mean = 0.0, v = 0.0;
    for (const auto& f : fits) {
      mean += f.coef[j];
      v += f.se[j] * f.se[j];
    }
    mean /= md;
    v /= md;
    double b = 0.0;
    if (m > 1) {
      for (const auto& f : fits) b += (f.coef[j] - mean) * (f.coef[j] - mean);
      b /= md - 1.0;
    }
    const double t = v + (1.0 + 1.0 / md) * b;
    const double se = std::sqrt(t);
    out.beta_mi.push_back(mean);
    out.within_var.push_back(v);
    out.between_var.push_back(b);
    out.total_var.push_back(t);
    out.pooled_se.push_back(se);
    out.z.push_back(mean / se);
    out.p.push_back(glm::normal_two_sided_p(mean / se));
  }
  return out;
}

std::vector<MissingSummary> missing_report(const PatientFrame& frame, const std::vector<ImputePolicy>& policies,
                                           const std::vector<std::string>& variables) {
  std::vector<MissingSummary> out;
  for (const auto& v : variables) {
    const Column& c = frame.column(v);
    out.push_back({v, c.missing_count(), c.size(), std::string(to_string(method_for(v, policies)))});
  }
  return out;
}

PatientFrame missing_report_frame(const std::vector<MissingSummary>& rows) {
  std::vector<std::string> var, method;
  std::vector<double> count, pct;
  for (const auto& r : rows) {
    var.push_back(r.variable);
    count.push_back(static_cast<double>(r.missing));
    const double share = r.rows == 0 ? 0.0 : 100.0 * static_cast<double>(r.missing) / static_cast<double>(r.rows);
    pct.push_back(std::round(share * 100.0) / 100.0);
    method.push_back(r.missing == 0 ? "none" : r.method);
  }
  return PatientFrame({Column::categorical("Variable", std::move(var)),
                       Column::numeric("Missing Count", std::move(count)),
                       Column::numeric("Missing %", std::move(pct)),
                       Column::categorical("Method", std::move(method))});
}

}  // namespace riskforge::impute
