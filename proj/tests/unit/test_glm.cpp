#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "riskforge/error.hpp"
#include "riskforge//glm.hpp"

using namespace riskforge;
using namespace riskforge::glm;

TEST(Glm, AllZeroColumnBalanced) {
  std::vector<double> y;
  for (int i = 0; i < 100; ++i) y.push_back(i % 2);
  auto fit = fit_logistic(make_matrix(Eigen::MatrixXd::Zero(100, 1)), y);
  EXPECT_NEAR(fit.coef[0], 0.0, 1e-9);
  EXPECT_NEAR(fit.p[0], 1.0, 1e-6);
  EXPECT_NEAR(fit.pseudo_r2, 0.0, 1e-12);
}

TEST(Glm, RecoversSlope) {
  auto d = planted_logistic(5000, {1.5}, 0.0, 21);
  auto fit = fit_logistic(make_matrix(d.x), d.y);
  EXPECT_EQ(fit.status, FitStatus::Converged);
  EXPECT_LT(std::abs(fit.coef[1] - 1.5), 3 * fit.se[1]);
  EXPECT_LT(std::abs(fit.coef[0]), 3 * fit.se[0]);
}

TEST(Glm, MatchesNewtonOracleAndScoreIsZero) {
  auto d = planted_logistic(800, {0.8, -0.5, 0.0, 0.3}, -0.4, 5);
  auto fit = fit_logistic(make_matrix(d.x), d.y);
  auto b = oracle::newton_logistic(d.x, d.y);
  for (Eigen::Index j = 0; j < b.size(); ++j) EXPECT_NEAR(fit.coef[j], b[j], 1e-8);
  EXPECT_LT(fit.max_abs_score, 1e-6);
  // SE from the inverse information at the optimum.
  Eigen::MatrixXd a(d.x.rows(), d.x.cols() + 1);
  a.col(0).setOnes();
  a.rightCols(d.x.cols()) = d.x;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(a.cols(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double mu = 1 / (1 + std::exp(-a.row(i).dot(b)));
    h += mu * (1 - mu) * a.row(i).transpose() * a.row(i);
  }
  Eigen::MatrixXd cov = h.inverse();
  for (Eigen::Index j = 0; j < b.size(); ++j) EXPECT_NEAR(fit.se[j], std::sqrt(cov(j, j)), 1e-8);
  EXPECT_NEAR(fit.ci_low[1], fit.coef[1] - kZ975 * fit.se[1], 1e-12);
}

TEST(Glm, SeparationReported) {
  Eigen::MatrixXd x(6, 1);
  x << -3, -2, -1, 1, 2, 3;
  std::vector<double> y{0, 0, 0, 1, 1, 1};
  auto fit = fit_logistic(make_matrix(x), y);
  EXPECT_EQ(fit.status, FitStatus::Separation);
  EXPECT_FALSE(fit.converged);
}

TEST(Glm, NullLoglik) {
  std::vector<double> y{1, 0, 0, 1, 1};
  const double p = 0.6;
  EXPECT_NEAR(null_loglik(y), 3 * std::log(p) + 2 * std::log(1 - p), 1e-12);
}

TEST(Glm, PredictMatchesByName) {
  auto d = planted_logistic(300, {1.0, -1.0}, 0.2, 9);
  auto fm = make_matrix(d.x, {"a", "b"});
  auto fit = fit_logistic(fm, d.y);
  Eigen::MatrixXd swapped(d.x.rows(), 2);
  swapped << d.x.col(1), d.x.col(0);
  auto p1 = predict_proba(fit, fm);
  auto p2 = predict_proba(fit, make_matrix(swapped, {"b", "a"}));
  for (std::size_t i = 0; i < p1.size(); ++i) EXPECT_NEAR(p1[i], p2[i], 1e-14);
}

TEST(Glm, ScreenStrongAndNoiseCalibration) {
  auto d = planted_logistic(2000, {1.0}, 0.0, 1);
  auto rows = univariate_screen(make_matrix(d.x), d.y);
  EXPECT_LT(rows[0].p, 1e-6);
  EXPECT_TRUE(rows[0].significant);

  int hits = 0;
  const int seeds = 200;
  for (int s = 0; s < seeds; ++s) {
    auto n = planted_logistic(2000, {0.0}, 0.0, 1000 + s);
    hits += univariate_screen(make_matrix(n.x), n.y)[0].significant;
  }
  // Binomial(200, 0.05): mean 10, sd ~3.1.
  EXPECT_GE(hits, 1);
  EXPECT_LE(hits, 22);
}

TEST(Glm, FormatP) {
  EXPECT_EQ(format_p_value(5e-5), "<0.0001");
  EXPECT_EQ(format_p_value(0.01234), "0.0123");
}

TEST(Vif, IdenticalColumnsInfiniteAndOneDropped) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(100, 3);
  for (Eigen::Index i = 0; i < 100; ++i) {
    x(i, 0) = nd(rng);
    x(i, 1) = x(i, 0);
    x(i, 2) = nd(rng);
  }
  auto v = compute_vif(x);
  EXPECT_TRUE(std::isinf(v[0]));
  EXPECT_TRUE(std::isinf(v[1]));
  auto rep = vif(make_matrix(x, {"a", "b", "c"}));
  ASSERT_EQ(rep.drop_sequence.size(), 1u);
  EXPECT_EQ(rep.final_variables.size(), 2u);
}

TEST(Vif, OrthogonalColumnsAreOne) {
  Eigen::MatrixXd x(8, 3);
  x << 1, 1, 1, -1, 1, 1, 1, -1, 1, -1, -1, 1, 1, 1, -1, -1, 1, -1, 1, -1, -1, -1, -1, -1;
  for (double v : compute_vif(x)) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Vif, MatchesRSquaredOracle) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(200, 4);
  for (Eigen::Index i = 0; i < 200; ++i) {
    x(i, 0) = nd(rng);
    x(i, 1) = 0.7 * x(i, 0) + nd(rng);
    x(i, 2) = nd(rng);
    x(i, 3) = x(i, 1) - x(i, 2) + 0.5 * nd(rng);
  }
  auto v = compute_vif(x);
  for (Eigen::Index j = 0; j < 4; ++j) {
    Eigen::MatrixXd a(200, 4);
    a.col(0).setOnes();
    int c = 1;
    for (Eigen::Index k = 0; k < 4; ++k) if (k != j) a.col(c++) = x.col(k);
    Eigen::VectorXd coef = a.colPivHouseholderQr().solve(x.col(j));
    Eigen::VectorXd r = x.col(j) - a * coef;
    const double tss = (x.col(j).array() - x.col(j).mean()).square().sum();
    EXPECT_NEAR(v[j], 1.0 / (r.squaredNorm() / tss), 1e-8);
  }
}

TEST(Vif, PreferencePairsDropNonPreferred) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  const int n = 300;
  Eigen::MatrixXd x(n, 4);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = nd(rng);                        // INR
    x(i, 1) = x(i, 0) + 0.14 * nd(rng);       // PT, r ~ 0.99
    x(i, 2) = nd(rng);
    x(i, 3) = nd(rng);
  }
  auto rep = vif(make_matrix(x, {"INR", "PT", "Age", "HR"}));
  ASSERT_EQ(rep.drop_sequence.size(), 1u);
  EXPECT_EQ(rep.drop_sequence[0].dropped, "INR");
  EXPECT_EQ(rep.drop_sequence[0].kept_instead, "PT");
  EXPECT_EQ(rep.final_variables, (std::vector<std::string>{"PT", "Age", "HR"}));
}

TEST(Vif, ConstantColumnDroppedFirst) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(50, 3);
  x.col(1).setConstant(2.0);
  auto rep = vif(make_matrix(x, {"a", "k", "b"}));
  ASSERT_FALSE(rep.drop_sequence.empty());
  EXPECT_EQ(rep.drop_sequence[0].dropped, "k");
}

TEST(Consolidate, Union) {
  using V = std::vector<std::string>;
  V a{"a", "b"}, b{"b", "c"};
  EXPECT_EQ(consolidate_features(a, b), (V{"a", "b", "c"}));
  V l{"1", "2", "3"}, g{"4", "5", "6", "7"};
  EXPECT_EQ(consolidate_features(l, g).size(), 7u);
  EXPECT_EQ(consolidate_features(a, a), a);
}
