#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "riskforge/feature_matrix.hpp"
#include "riskforge/frame.hpp"

namespace riskforge::gbt {

struct GbtConfig {
  int max_depth = 3;
  double learning_rate = 0.05;
  int n_trees = 100;
  double subsample = 0.8;
  double reg_lambda = 1.0;
  double gamma = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Internal nodes have feature >= 0; rows with x < threshold or NaN go left.
struct Node {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double weight = 0.0;  // leaves only, -G/(H+lambda) before shrinkage
  double gain = 0.0;    // internal only
};

struct Tree {
  std::vector<Node> nodes;  // nodes[0] is the root

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
};

struct GbtModel {
  std::vector<std::string> feature_names;
  double base_score = 0.0;
  double learning_rate = 0.05;
  std::vector<Tree> trees;
  std::vector<double> importance_gain;  // per feature
};

/// Newton boosting for logistic loss with exact greedy splits.
GbtModel fit_gbt(const FeatureMatrix& x, std::span<const double> y, const GbtConfig& cfg);

Eigen::VectorXd predict_margin(const GbtModel& model, const FeatureMatrix& x);
std::vector<double> predict_proba(const GbtModel& model, const FeatureMatrix& x);

struct Importance {
  std::string feature;
  int index = 0;
  double gain = 0.0;
};

/// Features that were split on, by total gain descending, ties by index.
std::vector<Importance> gain_importance(const GbtModel& model);

std::vector<std::string> top_k_features(const GbtModel& model, std::size_t k);

PatientFrame importance_frame(const GbtModel& model);

std::string serialize(const GbtModel& model);
GbtModel deserialize(std::string_view text);

}  // namespace riskforge::gbt
