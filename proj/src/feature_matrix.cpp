#include "riskforge/feature_matrix.hpp"

#include <cmath>
#include <limits>

#include "riskforge/error.hpp"

namespace riskforge {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Structured: return "structured";
    case Provenance::Tfidf: return "tfidf";
    case Provenance::Embedding: return "embedding";
    case Provenance::Indicator: return "indicator";
  }
  return "structured";
}

Provenance infer_provenance(std::string_view name) {
  if (name.find("_tfidf_svd_") != std::string_view::npos) return Provenance::Tfidf;
  if (name.find("_bert_pca_") != std::string_view::npos) return Provenance::Embedding;
  if (name.starts_with("has_")) return Provenance::Indicator;
  return Provenance::Structured;
}

Eigen::Index FeatureMatrix::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<Eigen::Index>(i);
  }
  throw Error(ErrorCode::MissingColumn, std::string(name));
}

FeatureMatrix FeatureMatrix::select(std::span<const std::string> columns) const {
  FeatureMatrix out;
  out.values.resize(rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const Eigen::Index src = index_of(columns[j]);
    out.values.col(static_cast<Eigen::Index>(j)) = values.col(src);
    out.names.push_back(columns[j]);
    out.provenance.push_back(provenance[static_cast<std::size_t>(src)]);
  }
  return out;
}

FeatureMatrix FeatureMatrix::take_rows(std::span<const std::size_t> rows_idx) const {
  FeatureMatrix out;
  out.names = names;
  out.provenance = provenance;
  out.values.resize(static_cast<Eigen::Index>(rows_idx.size()), cols());
  for (std::size_t i = 0; i < rows_idx.size(); ++i) {
    out.values.row(static_cast<Eigen::Index>(i)) = values.row(static_cast<Eigen::Index>(rows_idx[i]));
  }
  return out;
}

FeatureMatrix to_feature_matrix(const PatientFrame& frame, std::span<const std::string> columns) {
  FeatureMatrix out;
  out.values.resize(static_cast<Eigen::Index>(frame.rows()), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const Column& c = frame.column(columns[j]);
    if (!c.is_numeric()) throw Error(ErrorCode::NonNumericColumn, columns[j]);
    for (std::size_t r = 0; r < frame.rows(); ++r) {
      out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
          c.is_missing(r) ? std::numeric_limits<double>::quiet_NaN() : c.number(r);
    }
    out.names.push_back(columns[j]);
    out.provenance.push_back(infer_provenance(columns[j]));
  }
  return out;
}

std::vector<double> outcome_vector(const PatientFrame& frame, std::string_view column) {
  const Column& c = frame.column(column);
  std::vector<double> y(frame.rows());
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    if (c.is_missing(r)) {
      throw Error(ErrorCode::InvalidArgument, "outcome '" + std::string(column) + "' masked at row " +
                                                  std::to_string(r));
    }
    y[r] = c.number(r);
  }
  return y;
}

Standardizer Standardizer::fit(const FeatureMatrix& x) {
  Standardizer s;
  s.names = x.names;
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto col = x.values.col(j);
    const double mean = col.mean();
    const double var = n > 1 ? (col.array() - mean).square().sum() / (n - 1.0) : 0.0;
    const double sd = std::sqrt(var);
    s.mean.push_back(mean);
    s.scale.push_back(sd > 1e-12 ? sd : 1.0);
  }
  return s;
}

FeatureMatrix Standardizer::apply(const FeatureMatrix& x) const {
  FeatureMatrix out = x.select(names);
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const auto k = static_cast<std::size_t>(j);
    out.values.col(j) = (out.values.col(j).array() - mean[k]) / scale[k];
  }
  return out;
}

}  // namespace riskforge
