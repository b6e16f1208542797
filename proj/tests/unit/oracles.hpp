#pragma once

// Brute-force reference implementations used only by tests.

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <vector>

namespace oracle {

// Pairwise Mann-Whitney count with half credit for ties.
inline double mann_whitney_auc(std::span<const double> s, std::span<const double> y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1.0) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0.0) continue;
      pairs += 1.0;
      if (s[i] > s[j]) wins += 1.0;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

// Plain Newton-Raphson logistic MLE with intercept in column 0 of the result.
inline Eigen::VectorXd newton_logistic(const Eigen::MatrixXd& x, std::span<const double> y, int iters = 60) {
  const Eigen::Index n = x.rows(), p = x.cols();
  Eigen::MatrixXd a(n, p + 1);
  a.col(0).setOnes();
  a.rightCols(p) = x;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p + 1);
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p + 1);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(p + 1, p + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = 1.0 / (1.0 + std::exp(-a.row(i).dot(b)));
      g += (y[i] - mu) * a.row(i).transpose();
      h += mu * (1.0 - mu) * a.row(i).transpose() * a.row(i);
    }
    b += h.ldlt().solve(g);
  }
  return b;
}

// Penalized objective (1/n) sum logistic loss + lambda |beta|_1.
inline double lasso_objective(const Eigen::MatrixXd& x, std::span<const double> y, double b0,
                              const Eigen::VectorXd& b, double lambda) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double eta = b0 + x.row(i).dot(b);
    loss += std::log1p(std::exp(-std::abs(eta))) + std::max(eta, 0.0) - y[i] * eta;
  }
  return loss / static_cast<double>(x.rows()) + lambda * b.lpNorm<1>();
}

// Eigenvalues of X'X (svd) or of the centered covariance (pca), descending.
inline std::vector<double> spectrum(const Eigen::MatrixXd& x, bool center) {
  Eigen::MatrixXd m = x;
  if (center) m = (m.rowwise() - m.colwise().mean()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.transpose() * m);
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::vector<double> out(ev.rbegin(), ev.rend());
  for (double& v : out) v = std::max(v, 0.0);
  return out;
}

inline int components_for(const std::vector<double>& ev, double target) {
  double total = 0.0;
  for (double v : ev) total += v;
  double cum = 0.0;
  for (std::size_t k = 0; k < ev.size(); ++k) {
    cum += ev[k];
    if (cum / total >= target) return static_cast<int>(k + 1);
  }
  return static_cast<int>(ev.size());
}

}  // namespace oracle
