#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "riskforge/error.hpp"
#include "riskforge//reduce.hpp"
#include "riskforge/text.hpp"

using namespace riskforge;
using namespace riskforge::text;

TEST(Text, Normalize) {
  using V = std::vector<std::string>;
  EXPECT_EQ(normalize_text("Chest X-Ray 2: no edema."), (V{"chest", "x", "ray", "no", "edema"}));
  EXPECT_TRUE(normalize_text("").empty());
  EXPECT_TRUE(normalize_text("THE the The").empty());
  EXPECT_TRUE(stopwords().count("the"));
  EXPECT_FALSE(stopwords().count("no"));
  EXPECT_FALSE(stopwords().count("not"));
}

TEST(Text, Idf) {
  auto m = fit_tfidf({{"a", "b"}, {"a"}});
  ASSERT_EQ(m.vocabulary.size(), 2u);
  EXPECT_NEAR(m.idf[*m.index_of("a")], 1.0, 1e-12);
  EXPECT_NEAR(m.idf[*m.index_of("b")], std::log(1.5) + 1.0, 1e-12);
  EXPECT_NEAR(m.idf[*m.index_of("b")], 1.405, 1e-3);
}

TEST(Text, VocabularyCap) {
  std::vector<std::vector<std::string>> docs;
  for (int i = 0; i < 600; ++i) docs.push_back({"term" + std::to_string(i)});
  docs.push_back({"term5", "term7"});
  auto m = fit_tfidf(docs, 500);
  EXPECT_EQ(m.vocabulary.size(), 500u);
  // df 2 terms survive the cap; the rest are the lexicographically first df 1 terms.
  EXPECT_TRUE(m.index_of("term5").has_value());
  EXPECT_TRUE(m.index_of("term7").has_value());
  EXPECT_EQ(m.df[*m.index_of("term5")], 2u);
  std::vector<std::string> df1;
  for (int i = 0; i < 600; ++i) {
    if (i != 5 && i != 7) df1.push_back("term" + std::to_string(i));
  }
  std::sort(df1.begin(), df1.end());
  EXPECT_TRUE(m.index_of(df1[497]).has_value());
  EXPECT_FALSE(m.index_of(df1[498]).has_value());
}

TEST(Text, TransformNormalized) {
  auto m = fit_tfidf({{"a", "b"}, {"a", "c"}, {"c"}});
  auto one = transform_tfidf(m, {"b"});
  EXPECT_NEAR(one.norm(), 1.0, 1e-12);
  EXPECT_EQ(one[*m.index_of("b")], 1.0);
  EXPECT_EQ(transform_tfidf(m, {"zzz"}).norm(), 0.0);
  EXPECT_EQ(transform_tfidf(m, {}).norm(), 0.0);
  auto d = transform_tfidf(m, {"a", "b", "c"});
  auto dd = transform_tfidf(m, {"a", "b", "c", "a", "b", "c"});
  EXPECT_LT((d - dd).norm(), 1e-15);
  // Oracle: counts times idf, normalized.
  Eigen::VectorXd raw = Eigen::VectorXd::Zero(3);
  for (auto t : {"a", "b", "c"}) raw[*m.index_of(t)] = m.idf[*m.index_of(t)];
  EXPECT_LT((d - raw / raw.norm()).norm(), 1e-12);
}

TEST(Text, SelectNotesEarliest) {
  PatientFrame notes({Column::numeric("hadm_id", {1, 1, 1}), Column::numeric("charttime", {5, 2, 9}),
                      Column::categorical("text", {"five", "two", "nine"})});
  PatientFrame cohort({Column::numeric("subject_id", {1, 2}), Column::numeric("hadm_id", {1, 2}),
                       Column::numeric("stay_id", {1, 2})});
  Coverage cov;
  auto sel = select_notes(notes, cohort, NoteKind::Radiology, &cov);
  ASSERT_EQ(sel.size(), 1u);
  EXPECT_EQ(sel[0].text, "two");
  EXPECT_EQ(cov.admissions, 2u);
  EXPECT_EQ(cov.with_note, 1u);
}

TEST(Reduce, RankOne) {
  Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(20, 1, 2);
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(6, -1, 3);
  Eigen::MatrixXd x = u * v.transpose();
  auto b = fit_reduced_basis(x, BasisKind::Svd, 0.8);
  EXPECT_EQ(b.retained, 1);
  EXPECT_NEAR(b.explained_ratio[0], 1.0, 1e-12);
}

TEST(Reduce, IsotropicNeedsBoth) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(400, 2);
  for (Eigen::Index i = 0; i < x.rows(); ++i) x.row(i) << nd(rng), nd(rng);
  auto ev = oracle::spectrum(x, true);
  auto b = fit_reduced_basis(x, BasisKind::Pca, 0.9);
  EXPECT_EQ(b.retained, oracle::components_for(ev, 0.9));
  EXPECT_EQ(b.retained, 2);
}

TEST(Reduce, MatchesDenseOracle) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd f(60, 4), l(4, 15), e(60, 15);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = nd(rng) * (1 + i % 4);
    for (Eigen::Index i = 0; i < l.size(); ++i) l.data()[i] = nd(rng);
    for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = 0.3 * nd(rng);
    Eigen::MatrixXd x = f * l + e;
    for (auto [kind, target] : {std::pair{BasisKind::Svd, 0.8}, std::pair{BasisKind::Pca, 0.9}}) {
      auto ev = oracle::spectrum(x, kind == BasisKind::Pca);
      auto b = fit_reduced_basis(x, kind, target);
      EXPECT_EQ(b.retained, oracle::components_for(ev, target));
      EXPECT_GE(b.cumulative_ratio(), target);
      // Rows orthonormal.
      Eigen::MatrixXd g = b.components * b.components.transpose();
      EXPECT_LT((g - Eigen::MatrixXd::Identity(b.retained, b.retained)).norm(), 1e-10);
    }
  }
}

TEST(Reduce, ProjectionReconstructsLowRank) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd a(30, 2), c(2, 8);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = nd(rng);
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = nd(rng);
  Eigen::MatrixXd x = a * c;
  auto b = fit_reduced_basis(x, BasisKind::Svd, 0.999999);
  EXPECT_EQ(b.retained, 2);
  Eigen::MatrixXd back = project(b, x) * b.components;
  EXPECT_LT((back - x).norm() / x.norm(), 1e-10);
}

TEST(Reduce, BasisFileRoundTrip) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(10, 4);
  auto b = fit_reduced_basis(x, BasisKind::Pca, 0.9);
  auto path = std::filesystem::temp_directory_path() / "riskforge_basis.csv";
  write_basis(b, path);
  auto r = read_basis(path);
  std::filesystem::remove(path);
  EXPECT_EQ(r.retained, b.retained);
  EXPECT_EQ(r.kind, b.kind);
  EXPECT_EQ((project(r, x) - project(b, x)).norm(), 0.0);
}

TEST(Text, ApplyBlockZeroFillAndIndicators) {
  PatientFrame cohort({Column::numeric("subject_id", {1, 2}), Column::numeric("hadm_id", {10, 20}),
                       Column::numeric("stay_id", {100, 200})});
  TextBlock disch{"disch_tfidf_svd_", "has_discharge_note", 2, {{10, Eigen::Vector2d(0.5, -0.25)}}};
  TextBlock rad{"rad_tfidf_svd_", "has_radiology_note", 1, {{10, Eigen::VectorXd::Constant(1, 2.0)},
                                                             {20, Eigen::VectorXd::Constant(1, 3.0)}}};
  auto f = apply_text_block(cohort, {disch, rad});
  EXPECT_EQ(f.column("has_discharge_note").number(0), 1.0);
  EXPECT_EQ(f.column("has_radiology_note").number(0), 1.0);
  EXPECT_EQ(f.column("disch_tfidf_svd_1").number(0), 0.5);
  EXPECT_EQ(f.column("disch_tfidf_svd_2").number(0), -0.25);
  EXPECT_EQ(f.column("has_discharge_note").number(1), 0.0);
  EXPECT_EQ(f.column("disch_tfidf_svd_1").number(1), 0.0);
  EXPECT_EQ(f.column("disch_tfidf_svd_2").number(1), 0.0);
  EXPECT_EQ(f.column("rad_tfidf_svd_1").number(1), 3.0);
}

TEST(Text, ConfigValidation) {
  TextConfig c;
  c.svd_target = 1.5;
  EXPECT_THROW(c.validate(), Error);
}
