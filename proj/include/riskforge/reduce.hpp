#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace riskforge {

enum class BasisKind { Svd, Pca };

std::string_view to_string(BasisKind k);

/// Truncated SVD (raw matrix) or PCA (column-centered) basis.
struct ReducedBasis {
  BasisKind kind = BasisKind::Svd;
  Eigen::MatrixXd components;           // retained x features, orthonormal rows
  std::vector<double> explained_ratio;  // every computed component, descending
  Eigen::VectorXd center;               // empty for svd
  int retained = 0;

  double cumulative_ratio() const;  // over retained components
};

/// Retains the smallest k whose cumulative explained ratio reaches `target`.
/// Ratios are sigma^2 / ||X||_F^2 for svd and eigenvalue / trace for pca.
/// Component signs are fixed so the largest-magnitude entry is positive.
ReducedBasis fit_reduced_basis(const Eigen::MatrixXd& x, BasisKind kind, double target);

/// Rows of `x` in retained-component coordinates.
Eigen::MatrixXd project(const ReducedBasis& basis, const Eigen::MatrixXd& x);

void write_basis(const ReducedBasis& basis, const std::filesystem::path& path);
ReducedBasis read_basis(const std::filesystem::path& path);

}  // namespace riskforge
