#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "riskforge/frame.hpp"

namespace riskforge {

enum class Provenance { Structured, Tfidf, Embedding, Indicator };

std::string_view to_string(Provenance p);

/// Guessed from the column name: `*_tfidf_svd_*` -> tfidf, `*_bert_pca_*` ->
/// embedding, `has_*` -> indicator, anything else structured.
Provenance infer_provenance(std::string_view name);

/// Dense numeric design matrix. Masked frame cells become NaN.
struct FeatureMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> names;
  std::vector<Provenance> provenance;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  Eigen::Index index_of(std::string_view name) const;  // throws MissingColumn

  FeatureMatrix select(std::span<const std::string> columns) const;
  FeatureMatrix take_rows(std::span<const std::size_t> rows) const;
};

FeatureMatrix to_feature_matrix(const PatientFrame& frame, std::span<const std::string> columns);

/// Outcome column as a vector; outcomes must be complete, so a masked cell
/// throws InvalidArgument.
std::vector<double> outcome_vector(const PatientFrame& frame, std::string_view column);

/// Z-scoring with statistics from the rows it was fitted on. Zero-variance
/// columns are centered but not scaled.
struct Standardizer {
  std::vector<std::string> names;
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const FeatureMatrix& x);
  FeatureMatrix apply(const FeatureMatrix& x) const;
};

}  // namespace riskforge
