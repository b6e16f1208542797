#include "riskforge/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "riskforge/error.hpp"
#include "riskforge/rng.hpp"

namespace riskforge::lasso {

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log1pexp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double soft_threshold(double z, double g) {
  if (z > g) return z - g;
  if (z < -g) return z + g;
  return 0.0;
}

double logit(double p) { return std::log(p / (1.0 - p)); }

void check(const Eigen::MatrixXd& x, std::span<const double> y) {
  if (static_cast<Eigen::Index>(y.size()) != x.rows() || y.empty()) {
    throw Error(ErrorCode::InvalidArgument, "outcome length does not match design rows");
  }
  if (!x.allFinite()) throw Error(ErrorCode::InvalidArgument, "design matrix has missing cells");
  double k = 0.0;
  for (double v : y) {
    if (v != 0.0 && v != 1.0) throw Error(ErrorCode::InvalidArgument, "outcome must be 0/1");
    k += v;
  }
  if (k == 0.0 || k == static_cast<double>(y.size())) {
    throw Error(ErrorCode::SingleClass, "lasso needs both outcome classes");
  }
}

constexpr double kMinWeight = 1e-5;

// Proximal Newton on one design. Each outer step replaces the log-likelihood
// by its second-order expansion, solves the weighted least-squares lasso by
// coordinate descent, then halves the step until the penalized objective does
// not increase.
class Solver {
 public:
  Solver(const Eigen::MatrixXd& x, std::span<const double> y, double lambda, const LassoOptions& opts)
      : x_(x), y_(Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()))),
        lambda_(lambda), n_(static_cast<double>(y.size())), opts_(opts) {}

  void start(double b0, const Eigen::VectorXd& beta) {
    b0_ = b0;
    beta_ = beta;
    eta_ = (x_ * beta_).array() + b0_;
  }

  long solve() {
    double obj = objective(eta_, beta_);
    while (true) {
      const Eigen::VectorXd p = eta_.unaryExpr(&sigmoid);
      const Eigen::VectorXd w = (p.array() * (1.0 - p.array())).max(kMinWeight);
      Eigen::VectorXd res = (y_ - p).array() / w.array();
      double nb0 = b0_;
      Eigen::VectorXd nbeta = beta_;
      const Eigen::VectorXd target = eta_ + res;
      inner(w, target, res, nb0, nbeta);

      const double d0 = nb0 - b0_;
      const Eigen::VectorXd d = nbeta - beta_;
      const Eigen::VectorXd deta = (x_ * d).array() + d0;
      double t = 1.0;
      double new_obj = 0.0;
      Eigen::VectorXd cand_beta, cand_eta;
      for (int halvings = 0;; ++halvings) {
        cand_beta = beta_ + t * d;
        cand_eta = eta_ + t * deta;
        new_obj = objective(cand_eta, cand_beta);
        if (new_obj <= obj + 1e-13 * std::max(1.0, std::fabs(obj)) || halvings == 40) break;
        t *= 0.5;
      }
      const double change = t * std::max(std::fabs(d0), d.size() ? d.cwiseAbs().maxCoeff() : 0.0);
      if (t == 1.0) {
        b0_ = nb0;
        beta_ = nbeta;  // exact zeros from the inner solve survive
      } else {
        b0_ += t * d0;
        beta_ = cand_beta;
      }
      eta_ = cand_eta;
      obj = new_obj;
      if (change < opts_.tolerance) break;
      // Inexact Newton: inner solves tighten as the outer steps shrink.
      inner_tol_ = std::clamp(0.1 * change, 0.1 * opts_.tolerance, inner_tol_);
    }
    return sweeps_;
  }

  double b0() const { return b0_; }
  const Eigen::VectorXd& beta() const { return beta_; }

 private:
  double objective(const Eigen::VectorXd& eta, const Eigen::VectorXd& beta) const {
    double loss = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) loss += log1pexp(eta[i]) - y_[i] * eta[i];
    return loss / n_ + lambda_ * beta.lpNorm<1>();
  }

  void count() {
    if (++sweeps_ > opts_.max_sweeps) {
      throw Error(ErrorCode::NonConvergence, "lasso did not converge at lambda " + std::to_string(lambda_));
    }
  }

  // Weighted least-squares lasso toward the working response `target`; res
  // holds target - b0 - x beta throughout.
  void inner(const Eigen::VectorXd& w, const Eigen::VectorXd& target, Eigen::VectorXd& res, double& b0,
             Eigen::VectorXd& beta) {
    const Eigen::Index p = beta.size();
    const double wsum = w.sum();
    std::vector<double> curv(static_cast<std::size_t>(p), -1.0);
    const double tol = inner_tol_;
    auto coordinate = [&](Eigen::Index j) {
      const auto xj = x_.col(j);
      double& c = curv[static_cast<std::size_t>(j)];
      if (c < 0.0) c = (xj.array().square() * w.array()).sum() / n_;
      if (c <= 0.0) return 0.0;
      const double b = beta[j];
      const double g = (xj.array() * w.array() * res.array()).sum() / n_ + c * b;
      const double nb = soft_threshold(g, lambda_) / c;
      const double d = nb - b;
      if (d == 0.0) return 0.0;
      beta[j] = nb;
      res -= d * xj;
      return std::fabs(d);
    };
    auto intercept = [&] {
      const double d = w.dot(res) / wsum;
      b0 += d;
      res.array() -= d;
      return std::fabs(d);
    };
    // Anderson extrapolation over the last kDepth active sweeps; kept only
    // when it lowers the weighted least-squares objective.
    constexpr int kDepth = 5;
    std::vector<Eigen::VectorXd> history;
    auto stacked = [&] {
      Eigen::VectorXd v(p + 1);
      v[0] = b0;
      v.tail(p) = beta;
      return v;
    };
    auto quad = [&](const Eigen::VectorXd& r, const Eigen::VectorXd& b) {
      return 0.5 * (w.array() * r.array().square()).sum() / n_ + lambda_ * b.lpNorm<1>();
    };
    auto extrapolate = [&] {
      Eigen::MatrixXd u(p + 1, kDepth);
      for (int k = 0; k < kDepth; ++k) u.col(k) = history[k + 1] - history[k];
      Eigen::MatrixXd gram = u.transpose() * u;
      gram.diagonal().array() += 1e-10 * std::max(gram.trace(), 1e-300);
      const Eigen::VectorXd z = gram.ldlt().solve(Eigen::VectorXd::Ones(kDepth));
      if (!z.allFinite() || z.sum() == 0.0) return;
      const Eigen::VectorXd c = z / z.sum();
      Eigen::VectorXd ext = Eigen::VectorXd::Zero(p + 1);
      for (int k = 0; k < kDepth; ++k) ext += c[k] * history[k + 1];
      Eigen::VectorXd r = target.array() - ext[0];
      for (Eigen::Index j = 0; j < p; ++j) {
        if (ext[j + 1] != 0.0) r -= ext[j + 1] * x_.col(j);
      }
      const Eigen::VectorXd eb = ext.tail(p);
      if (quad(r, eb) < quad(res, beta)) {
        b0 = ext[0];
        beta = eb;
        res = r;
      }
    };
    while (true) {
      count();
      double change = intercept();
      for (Eigen::Index j = 0; j < p; ++j) change = std::max(change, coordinate(j));
      if (change < tol) break;
      history.clear();
      while (true) {
        count();
        double active = intercept();
        for (Eigen::Index j = 0; j < p; ++j) {
          if (beta[j] != 0.0) active = std::max(active, coordinate(j));
        }
        if (active < tol) break;
        history.push_back(stacked());
        if (history.size() == kDepth + 1) {
          extrapolate();
          history.clear();
        }
      }
    }
  }

  const Eigen::MatrixXd& x_;
  Eigen::VectorXd y_;
  double lambda_;
  double n_;
  LassoOptions opts_;
  long sweeps_ = 0;
  double inner_tol_ = 1e-3;
  double b0_ = 0.0;
  Eigen::VectorXd beta_, eta_;
};

}  // namespace

std::size_t LassoFit::nonzero() const {
  return static_cast<std::size_t>((coef.array() != 0.0).count());
}

double lambda_max(const Eigen::MatrixXd& x, std::span<const double> y) {
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  const Eigen::VectorXd centered = yv.array() - yv.mean();
  if (x.cols() == 0) return 0.0;
  return (x.transpose() * centered).cwiseAbs().maxCoeff() / static_cast<double>(y.size());
}

LassoFit fit_lasso(const Eigen::MatrixXd& x, std::span<const double> y, double lambda, const LassoOptions& opts,
                   const LassoFit* warm) {
  check(x, y);
  if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");
  LassoFit fit;
  fit.lambda = lambda;
  const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  if (lambda >= lambda_max(x, y)) {
    fit.intercept = logit(ybar);
    fit.coef = Eigen::VectorXd::Zero(x.cols());
    return fit;
  }
  Solver solver(x, y, lambda, opts);
  if (warm != nullptr && warm->coef.size() == x.cols()) {
    solver.start(warm->intercept, warm->coef);
  } else {
    solver.start(logit(ybar), Eigen::VectorXd::Zero(x.cols()));
  }
  const long sweeps = solver.solve();
  fit.intercept = solver.b0();
  fit.coef = solver.beta();
  fit.sweeps = sweeps;
  return fit;
}

std::vector<double> lambda_grid(double lmax, std::size_t count, double ratio) {
  std::vector<double> grid;
  if (count == 0) return grid;
  if (count == 1) return {lmax};
  const double lo = std::log(lmax * ratio), hi = std::log(lmax);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(count - 1);
    grid.push_back(i == 0 ? lmax : std::exp(hi + t * (lo - hi)));
  }
  return grid;
}

LassoPath fit_path(const Eigen::MatrixXd& x, std::span<const double> y, std::span<const double> grid,
                   const LassoOptions& opts) {
  LassoPath path;
  path.lambda_grid.assign(grid.begin(), grid.end());
  const LassoFit* prev = nullptr;
  for (double lam : grid) {
    path.fits.push_back(fit_lasso(x, y, lam, opts, prev));
    path.nonzero_counts.push_back(path.fits.back().nonzero());
    prev = &path.fits.back();
  }
  return path;
}

std::string_view to_string(Rule r) {
  switch (r) {
    case Rule::Min: return "min";
    case Rule::OneSe: return "1se";
    case Rule::Pct75: return "pct75";
  }
  return "?";
}

Rule parse_rule(std::string_view text) {
  for (Rule r : {Rule::Min, Rule::OneSe, Rule::Pct75}) {
    if (to_string(r) == text) return r;
  }
  throw Error(ErrorCode::ConfigInvalid, "lasso.rule: unknown value '" + std::string(text) + "'");
}

void CvConfig::validate() const {
  if (folds < 2) throw Error(ErrorCode::ConfigInvalid, "lasso.folds: must be >= 2");
  if (grid_size < 2) throw Error(ErrorCode::ConfigInvalid, "lasso.grid_size: must be >= 2");
  if (!(min_ratio > 0.0 && min_ratio < 1.0)) {
    throw Error(ErrorCode::ConfigInvalid, "lasso.min_ratio: must lie in (0, 1)");
  }
}

std::vector<int> assign_folds(std::span<const double> y, std::span<const std::int64_t> ids, int folds,
                              std::uint64_t seed) {
  if (ids.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "ids and outcome differ in length");
  std::vector<int> out(y.size(), -1);
  for (double cls : {0.0, 1.0}) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] == cls) rows.push_back(i);
    }
    if (rows.size() < static_cast<std::size_t>(folds)) {
      throw Error(ErrorCode::DegenerateFold, "class " + std::to_string(static_cast<int>(cls)) + " has " +
                                                 std::to_string(rows.size()) + " rows for " +
                                                 std::to_string(folds) + " folds");
    }
    std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
      const auto ha = keyed_hash(seed, ids[a]), hb = keyed_hash(seed, ids[b]);
      return ha != hb ? ha < hb : ids[a] < ids[b];
    });
    for (std::size_t k = 0; k < rows.size(); ++k) out[rows[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));
  }
  return out;
}

CvCurve cv_deviance(const Eigen::MatrixXd& x, std::span<const double> y, std::span<const std::int64_t> ids,
                    const CvConfig& cfg) {
  cfg.validate();
  check(x, y);
  const std::vector<int> fold = assign_folds(y, ids, cfg.folds, cfg.seed);
  CvCurve curve;
  curve.fold_count = cfg.folds;
  curve.seed = cfg.seed;
  curve.lambda_grid = lambda_grid(lambda_max(x, y), cfg.grid_size, cfg.min_ratio);
  const std::size_t g = curve.lambda_grid.size();
  std::vector<std::vector<double>> dev(g, std::vector<double>(static_cast<std::size_t>(cfg.folds)));

  for (int f = 0; f < cfg.folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (std::size_t i = 0; i < y.size(); ++i) (fold[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
    const Eigen::MatrixXd xtr = x(train, Eigen::all), xte = x(test, Eigen::all);
    std::vector<double> ytr, yte;
    for (auto i : train) ytr.push_back(y[static_cast<std::size_t>(i)]);
    for (auto i : test) yte.push_back(y[static_cast<std::size_t>(i)]);
    const LassoPath path = fit_path(xtr, ytr, curve.lambda_grid, cfg.fit);
    for (std::size_t l = 0; l < g; ++l) {
      const LassoFit& fit = path.fits[l];
      const Eigen::VectorXd eta = (xte * fit.coef).array() + fit.intercept;
      double ll = 0.0;
      for (Eigen::Index i = 0; i < eta.size(); ++i) ll += yte[static_cast<std::size_t>(i)] * eta[i] - log1pexp(eta[i]);
      dev[l][static_cast<std::size_t>(f)] = -2.0 * ll / static_cast<double>(eta.size());
    }
  }
  const double k = static_cast<double>(cfg.folds);
  for (std::size_t l = 0; l < g; ++l) {
    const double mean = std::accumulate(dev[l].begin(), dev[l].end(), 0.0) / k;
    double ss = 0.0;
    for (double d : dev[l]) ss += (d - mean) * (d - mean);
    curve.mean_deviance.push_back(mean);
    curve.se_deviance.push_back(std::sqrt(ss / (k - 1.0)) / std::sqrt(k));
  }
  std::size_t best = 0;
  for (std::size_t l = 1; l < g; ++l) {
    if (curve.mean_deviance[l] < curve.mean_deviance[best]) best = l;
  }
  curve.lambda_min = curve.lambda_grid[best];
  const double bound = curve.mean_deviance[best] + curve.se_deviance[best];
  curve.lambda_1se = curve.lambda_min;
  for (std::size_t l = 0; l <= best; ++l) {
    if (curve.mean_deviance[l] <= bound) {
      curve.lambda_1se = curve.lambda_grid[l];
      break;
    }
  }
  curve.nonzero_counts = fit_path(x, y, curve.lambda_grid, cfg.fit).nonzero_counts;
  curve.lambda_selected = select_lambda(curve, cfg.rule);
  return curve;
}

double select_lambda(const CvCurve& curve, Rule rule) {
  switch (rule) {
    case Rule::Min: return curve.lambda_min;
    case Rule::OneSe: return curve.lambda_1se;
    case Rule::Pct75: {
      if (curve.lambda_min == curve.lambda_1se) return curve.lambda_min;
      const double lo = std::log(curve.lambda_min), hi = std::log(curve.lambda_1se);
      return std::exp(lo + 0.75 * (hi - lo));
    }
  }
  return curve.lambda_min;
}

std::vector<std::string> selected_features(const FeatureMatrix& x, std::span<const double> y, double lambda,
                                           const LassoOptions& opts) {
  const LassoFit fit = fit_lasso(x.values, y, lambda, opts);
  std::vector<std::string> out;
  for (Eigen::Index j = 0; j < fit.coef.size(); ++j) {
    if (fit.coef[j] != 0.0) out.push_back(x.names[static_cast<std::size_t>(j)]);
  }
  return out;
}

PatientFrame cv_curve_frame(const CvCurve& curve) {
  std::vector<double> lam, loglam, nz, is_min, is_1se, is_sel;
  for (std::size_t l = 0; l < curve.lambda_grid.size(); ++l) {
    const double v = curve.lambda_grid[l];
    lam.push_back(v);
    loglam.push_back(std::log(v));
    nz.push_back(l < curve.nonzero_counts.size() ? static_cast<double>(curve.nonzero_counts[l]) : 0.0);
    is_min.push_back(v == curve.lambda_min ? 1.0 : 0.0);
    is_1se.push_back(v == curve.lambda_1se ? 1.0 : 0.0);
    is_sel.push_back(v == curve.lambda_selected ? 1.0 : 0.0);
  }
  return PatientFrame({Column::numeric("lambda", std::move(lam)), Column::numeric("log_lambda", std::move(loglam)),
                       Column::numeric("mean_deviance", curve.mean_deviance),
                       Column::numeric("se_deviance", curve.se_deviance), Column::numeric("nonzero", std::move(nz)),
                       Column::numeric("is_lambda_min", std::move(is_min)),
                       Column::numeric("is_lambda_1se", std::move(is_1se)),
                       Column::numeric("is_selected", std::move(is_sel))});
}

}  // namespace riskforge::lasso
