#include <gtest/gtest.h>

#include <filesystem>

#include "riskforge/config.hpp"
#include "riskforge/pipeline.hpp"

using namespace riskforge;

namespace {

std::string config_error(std::string_view text) {
  try {
    validate_config(parse_config(text, "/tmp"));
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigInvalid);
    return e.detail();
  }
  return "";
}

}  // namespace

TEST(Config, MissingSeedWarns) {
  Warnings w;
  auto cfg = parse_config("[synth]\nn_patients = 100\n", "/tmp", &w);
  EXPECT_EQ(cfg.seed, 42u);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_NE(w[0].message.find("split.seed"), std::string::npos);
}

TEST(Config, InvalidFieldsNamed) {
  EXPECT_EQ(config_error("[text]\nsvd_target = 1.5\n").rfind("text.svd_target", 0), 0u);
  EXPECT_EQ(config_error("[lasso]\nfolds = x\n").rfind("lasso.folds", 0), 0u);
  EXPECT_EQ(config_error("[lasso]\nbogus = 1\n").rfind("lasso.bogus", 0), 0u);
  EXPECT_EQ(config_error("[nope]\na = 1\n").rfind("nope", 0), 0u);
  EXPECT_EQ(config_error("[impute]\nHR = magic\n").rfind("impute.HR", 0), 0u);
}

TEST(Config, EchoRoundTrips) {
  const std::string text =
      "[split]\nseed = 7\ntrain_fraction = 0.75\n[lasso]\nrule = 1se\nmin_ratio = 0.0001\n"
      "[gbt]\nn_trees = 50\n[impute]\nHR = median\n[plausibility]\nWBC = (2, 40]\n[synth]\nseed = 3\n";
  auto cfg = parse_config(text, "/tmp");
  const std::string echo = echo_config(cfg);
  auto again = parse_config(echo, "/tmp");
  EXPECT_EQ(echo_config(again), echo);
  EXPECT_EQ(again.seed, 7u);
  EXPECT_EQ(again.lasso.rule, lasso::Rule::OneSe);
  EXPECT_EQ(again.lasso.min_ratio, 1e-4);
  EXPECT_EQ(again.gbt.n_trees, 50);
  EXPECT_EQ(again.train_fraction, 0.75);
  EXPECT_TRUE(again.synth_seed_set);
  EXPECT_EQ(again.synth.seed, 3u);
}

TEST(Config, StageSeedsDiffer) {
  auto cfg = parse_config("[split]\nseed = 7\n", "/tmp");
  EXPECT_NE(cfg.stage_seed("split"), cfg.stage_seed("impute.mice"));
  EXPECT_EQ(cfg.stage_seed("split"), parse_config("[split]\nseed = 7\n", "/var").stage_seed("split"));
}

TEST(Pipeline, StageNames) {
  EXPECT_EQ(pipeline::parse_stage("evaluate"), pipeline::Stage::Evaluate);
  EXPECT_THROW(pipeline::parse_stage("deploy"), Error);
  EXPECT_EQ(pipeline::stages().size(), 9u);
}

TEST(Pipeline, EvaluateWithoutFitIsMissingArtifact) {
  auto dir = std::filesystem::temp_directory_path() / "riskforge_missing_fit";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  auto cfg = parse_config("[split]\nseed = 7\n", dir);
  cfg.output_dir = dir;
  try {
    pipeline::run_stage(pipeline::Stage::Evaluate, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingArtifact);
    EXPECT_EQ(e.detail().rfind("fit", 0), 0u) << e.detail();
  }
  std::filesystem::remove_all(dir);
}

TEST(Pipeline, StratifiedSplit) {
  std::vector<double> stay, y;
  for (int i = 0; i < 103; ++i) {
    stay.push_back(500 + i);
    y.push_back(i % 4 == 0);
  }
  PatientFrame cohort({Column::numeric("stay_id", stay), Column::numeric("in_hospital_death", y)});
  auto s = pipeline::stratified_split(cohort, 0.8, 7);
  int train_pos = 0, train = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    train += s[i];
    train_pos += s[i] && y[i] == 1;
  }
  EXPECT_EQ(train_pos, static_cast<int>(std::llround(0.8 * 26)));
  EXPECT_EQ(train - train_pos, static_cast<int>(std::llround(0.8 * 77)));
  EXPECT_EQ(s, pipeline::stratified_split(cohort, 0.8, 7));
}

TEST(Pipeline, ModelingFrame) {
  PatientFrame f({Column::numeric("stay_id", {1}), Column::numeric("HR_mean", {80}), Column::numeric("HR_min", {60}),
                  Column::numeric("HR_max", {100}), Column::numeric("GCS_Eye", {4}),
                  Column::numeric("in_hospital_death", {0})});
  auto m = pipeline::modeling_frame(f);
  EXPECT_TRUE(m.has("HR"));
  EXPECT_FALSE(m.has("HR_min"));
  auto c = pipeline::candidate_features(m);
  EXPECT_EQ(c, std::vector<std::string>{"HR"});
}
