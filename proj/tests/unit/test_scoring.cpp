#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "riskforge/error.hpp"
#include "riskforge//evaluate.hpp"
#include "riskforge/news2.hpp"

using namespace riskforge;

namespace {

news2::News2Input normal() { return {16, 98, 120, 70, 36.8, 15}; }

}  // namespace

TEST(News2, Examples) {
  EXPECT_EQ(news2::news2_score(normal()), 0);
  auto in = normal();
  in.rr = 26;
  EXPECT_EQ(news2::subscores(in)[0], 3);
  EXPECT_EQ(news2::news2_score(in), 3);
  in = normal();
  in.gcs_total = 14;
  EXPECT_EQ(news2::news2_score(in), 3);
}

TEST(News2, BandEdges) {
  auto s = [](double rr, double spo2, double sbp, double hr, double bt) {
    return news2::subscores({rr, spo2, sbp, hr, bt, 15});
  };
  EXPECT_EQ(s(8, 98, 120, 70, 37)[0], 3);
  EXPECT_EQ(s(9, 98, 120, 70, 37)[0], 1);
  EXPECT_EQ(s(20, 98, 120, 70, 37)[0], 0);
  EXPECT_EQ(s(21, 98, 120, 70, 37)[0], 2);
  EXPECT_EQ(s(16, 91, 120, 70, 37)[1], 3);
  EXPECT_EQ(s(16, 93, 120, 70, 37)[1], 2);
  EXPECT_EQ(s(16, 95, 120, 70, 37)[1], 1);
  EXPECT_EQ(s(16, 98, 90, 70, 37)[2], 3);
  EXPECT_EQ(s(16, 98, 220, 70, 37)[2], 3);
  EXPECT_EQ(s(16, 98, 219, 70, 37)[2], 0);
  EXPECT_EQ(s(16, 98, 120, 131, 37)[3], 3);
  EXPECT_EQ(s(16, 98, 120, 40, 37)[3], 3);
  EXPECT_EQ(s(16, 98, 120, 41, 37)[3], 1);
  EXPECT_EQ(s(16, 98, 120, 70, 35.0)[4], 3);
  EXPECT_EQ(s(16, 98, 120, 70, 39.1)[4], 2);
  EXPECT_EQ(s(16, 98, 120, 70, 38.0)[4], 0);
  EXPECT_EQ(s(16, 98, 120, 70, 38.05)[4], 1);
  EXPECT_EQ(s(16, 98, 120, 70, 35.05)[4], 1);
}

TEST(News2, ScoreFrameConvertsFahrenheit) {
  PatientFrame f({Column::numeric("RR", {16}), Column::numeric("SpO2", {98}), Column::numeric("SBP", {120}),
                  Column::numeric("HR", {70}), Column::numeric("BT", {95.0}), Column::numeric("GCS_Total", {15})});
  EXPECT_EQ(news2::score_frame(f)[0], 3.0);  // 35.0 C
}

TEST(News2, RangeAndInvalid) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 2000; ++i) {
    news2::News2Input in{4 + 40 * u(rng), 70 + 30 * u(rng), 60 + 200 * u(rng), 30 + 150 * u(rng), 33 + 9 * u(rng),
                         3 + 12 * u(rng)};
    const int s = news2::news2_score(in);
    EXPECT_GE(s, 0);
    EXPECT_LE(s, 18);
  }
  auto bad = normal();
  bad.spo2 = 140;
  EXPECT_THROW(news2::news2_score(bad), Error);
}

TEST(Roc, Extremes) {
  std::vector<double> y{0, 0, 1, 1};
  EXPECT_EQ(eval::roc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, y).auc, 1.0);
  EXPECT_EQ(eval::roc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y).auc, 0.5);
  EXPECT_THROW(eval::roc(std::vector<double>{0.1, 0.2}, std::vector<double>{1, 1}), Error);
}

TEST(Roc, MannWhitneyOracle) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 30; ++t) {
    const int n = 20 + t * 5;
    std::vector<double> s(n), y(n);
    for (int i = 0; i < n; ++i) {
      y[i] = i % 3 == 0;
      s[i] = std::floor(std::uniform_real_distribution<double>(0, 8)(rng) + y[i]) / 8;
    }
    auto c = eval::roc(s, y);
    EXPECT_NEAR(c.auc, oracle::mann_whitney_auc(s, y), 1e-12);
    EXPECT_EQ(c.tpr.front(), 0.0);
    EXPECT_EQ(c.tpr.back(), 1.0);
    EXPECT_EQ(c.fpr.back(), 1.0);
  }
}

TEST(Calibration, SimulatedRates) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  const int n = 100000;
  std::vector<double> p(n), y(n);
  for (int i = 0; i < n; ++i) {
    p[i] = u(rng);
    y[i] = u(rng) < p[i];
  }
  auto bins = eval::calibration(p, y, 10);
  ASSERT_EQ(bins.size(), 10u);
  for (const auto& b : bins) EXPECT_LT(std::abs(b.mean_prob - b.event_rate), 0.02);
}

TEST(Calibration, TiedProbabilitiesSingleBin) {
  std::vector<double> p(20, 0.5), y;
  for (int i = 0; i < 20; ++i) y.push_back(i % 2);
  auto bins = eval::calibration(p, y, 10);
  ASSERT_EQ(bins.size(), 1u);
  EXPECT_EQ(bins[0].mean_prob, 0.5);
  EXPECT_EQ(bins[0].event_rate, 0.5);
  EXPECT_EQ(bins[0].count, 20u);
}

TEST(Calibration, TooFewRows) {
  std::vector<double> p(9, 0.3), y(9, 0.0);
  try {
    eval::calibration(p, y, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewRows);
  }
}

TEST(Calibration, EqualFrequencyWithoutTies) {
  std::vector<double> p, y;
  for (int i = 0; i < 95; ++i) {
    p.push_back((i * 37 % 95) / 100.0);
    y.push_back(i % 2);
  }
  auto bins = eval::calibration(p, y, 10);
  ASSERT_EQ(bins.size(), 10u);
  std::size_t lo = 1000, hi = 0, total = 0;
  for (const auto& b : bins) {
    lo = std::min(lo, b.count);
    hi = std::max(hi, b.count);
    total += b.count;
  }
  EXPECT_LE(hi - lo, 1u);
  EXPECT_EQ(total, 95u);
}

TEST(Dca, Identities) {
  std::vector<double> y, perfect, noisy;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 200; ++i) {
    y.push_back(i % 4 == 0);
    perfect.push_back(y.back());
    noisy.push_back(u(rng));
  }
  const double pi = 0.25;
  auto grid = eval::dca_grid();
  ASSERT_EQ(grid.size(), 99u);
  EXPECT_NEAR(grid.front(), 0.01, 1e-15);
  EXPECT_NEAR(grid.back(), 0.99, 1e-15);
  auto d = eval::decision_curve(perfect, y, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    EXPECT_NEAR(d.net_benefit[k], pi, 1e-12);
    EXPECT_EQ(d.nb_treat_none[k], 0.0);
    EXPECT_NEAR(d.nb_treat_all[k], pi - (1 - pi) * grid[k] / (1 - grid[k]), 1e-12);
  }
  EXPECT_NEAR(d.nb_treat_all[24], 0.0, 1e-12);  // t = 0.25
  auto e = eval::decision_curve(noisy, y, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (noisy[i] >= grid[k]) (y[i] == 1 ? tp : fp) += 1;
    }
    EXPECT_NEAR(e.net_benefit[k], tp / 200 - fp / 200 * grid[k] / (1 - grid[k]), 1e-15);
    EXPECT_NEAR(e.standardized_net_benefit[k], e.net_benefit[k] / pi, 1e-12);
  }
}

TEST(ThresholdMetrics, Cases) {
  std::vector<double> y{1, 0, 1, 0};
  auto m = eval::threshold_metrics(std::vector<double>{0.9, 0.1, 0.7, 0.2}, y);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.f1_pos, 1.0);
  std::vector<double> y52, ones;
  for (int i = 0; i < 100; ++i) {
    y52.push_back(i < 52);
    ones.push_back(0.9);
  }
  auto a = eval::threshold_metrics(ones, y52);
  EXPECT_EQ(a.recall_pos, 1.0);
  EXPECT_NEAR(a.accuracy, 0.52, 1e-15);
  EXPECT_EQ(a.specificity, 0.0);
}
