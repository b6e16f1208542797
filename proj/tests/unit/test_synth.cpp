#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "riskforge/error.hpp"
#include "riskforge//csv.hpp"
#include "riskforge/glm.hpp"
#include "riskforge/synth.hpp"

using namespace riskforge;
using namespace riskforge::synth;

TEST(Synth, Deterministic) {
  SynthConfig cfg;
  cfg.n_patients = 300;
  cfg.embedding_dim = 16;
  auto a = generate(cfg);
  auto b = generate(cfg);
  EXPECT_EQ(to_csv(a.latent), to_csv(b.latent));
  EXPECT_EQ(to_csv(a.tables.chartevents), to_csv(b.tables.chartevents));
  EXPECT_EQ(to_csv(a.tables.discharge), to_csv(b.tables.discharge));
  cfg.seed = 8;
  EXPECT_NE(to_csv(generate_latent(cfg).latent), to_csv(a.latent));
}

TEST(Synth, PrevalenceOnTarget) {
  for (double target : {0.52, 0.2}) {
    SynthConfig cfg;
    cfg.n_patients = 5000;
    cfg.prevalence_target = target;
    auto r = generate_latent(cfg);
    double s = 0;
    for (double v : r.latent.column("in_hospital_death").numbers()) s += v;
    EXPECT_NEAR(s / 5000, target, 0.02);
  }
  SynthConfig bad;
  bad.prevalence_target = 1.0;
  EXPECT_THROW(generate_latent(bad), Error);
}

TEST(Synth, UnivariateSignsRecovered) {
  SynthConfig cfg;
  cfg.n_patients = 20000;
  cfg.missing_rate = 0.0;
  cfg.seed = 3;
  auto r = generate_latent(cfg);
  std::vector<double> y(r.latent.column("in_hospital_death").numbers().begin(),
                        r.latent.column("in_hospital_death").numbers().end());
  for (const auto& [name, beta] : cfg.true_beta) {
    if (std::abs(beta) < 0.3) continue;
    const auto col = r.latent.column(name).numbers();
    Eigen::MatrixXd x(static_cast<Eigen::Index>(col.size()), 1);
    for (std::size_t i = 0; i < col.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = col[i];
    auto row = glm::univariate_screen(make_matrix(x, {name}), y)[0];
    EXPECT_TRUE(row.significant) << name << " coef " << row.coef << " p " << row.p << " reason " << row.reason;
    EXPECT_EQ(row.coef > 0, beta > 0) << name;
  }
}

TEST(Synth, MissingRateApplied) {
  SynthConfig cfg;
  cfg.n_patients = 4000;
  cfg.missing_rate = 0.1;
  cfg.missing_rates["Lactate"] = 0.3;
  auto r = generate_latent(cfg);
  EXPECT_NEAR(r.latent.column("HR").missing_count() / 4000.0, 0.1, 0.02);
  EXPECT_NEAR(r.latent.column("Lactate").missing_count() / 4000.0, 0.3, 0.03);
}

TEST(Synth, NullBetaGivesIntercept) {
  SynthConfig cfg;
  cfg.n_patients = 4000;
  for (auto& [k, v] : cfg.true_beta) v = 0.0;
  cfg.text_signal_strength = 0.0;
  auto r = generate_latent(cfg);
  EXPECT_NEAR(1.0 / (1.0 + std::exp(-r.truth.intercept)), cfg.prevalence_target, 0.02);
  EXPECT_NEAR(r.truth.bayes_auc, 0.5, 1e-9);
}
