#pragma once

#include <random>
#include <string>
#include <vector>

#include "riskforge/feature_matrix.hpp"

inline riskforge::FeatureMatrix make_matrix(const Eigen::MatrixXd& x, std::vector<std::string> names = {}) {
  riskforge::FeatureMatrix m;
  m.values = x;
  if (names.empty()) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) names.push_back("x" + std::to_string(j + 1));
  }
  m.names = std::move(names);
  m.provenance.assign(m.names.size(), riskforge::Provenance::Structured);
  return m;
}

// Logistic data with standard-normal features and the given coefficients.
struct Planted {
  Eigen::MatrixXd x;
  std::vector<double> y;
};

inline Planted planted_logistic(int n, const std::vector<double>& beta, double b0, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud;
  Planted d;
  d.x.resize(n, static_cast<Eigen::Index>(beta.size()));
  d.y.resize(n);
  for (int i = 0; i < n; ++i) {
    double eta = b0;
    for (std::size_t j = 0; j < beta.size(); ++j) {
      d.x(i, static_cast<Eigen::Index>(j)) = nd(rng);
      eta += beta[j] * d.x(i, static_cast<Eigen::Index>(j));
    }
    d.y[i] = ud(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
  }
  return d;
}
