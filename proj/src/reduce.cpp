#include "riskforge/reduce.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "riskforge/csv.hpp"
#include "riskforge/error.hpp"

namespace riskforge {

namespace {

constexpr double kResidualTolerance = 1e-8;

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index at = 0;
  v.cwiseAbs().maxCoeff(&at);
  if (v[at] < 0) v = -v;
}

}  // namespace

std::string_view to_string(BasisKind k) { return k == BasisKind::Svd ? "svd" : "pca"; }

double ReducedBasis::cumulative_ratio() const {
  double s = 0.0;
  for (int i = 0; i < retained; ++i) s += explained_ratio[static_cast<std::size_t>(i)];
  return s;
}

ReducedBasis fit_reduced_basis(const Eigen::MatrixXd& x, BasisKind kind, double target) {
  if (x.rows() < 2) throw Error(ErrorCode::TooFewRows, "reduced basis needs at least two rows");
  if (!(target > 0.0 && target <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "target variance must lie in (0, 1]");
  }
  if (!x.allFinite()) throw Error(ErrorCode::InvalidArgument, "reduced basis input has missing cells");

  ReducedBasis basis;
  basis.kind = kind;
  Eigen::MatrixXd work = x;
  if (kind == BasisKind::Pca) {
    basis.center = x.colwise().mean().transpose();
    work.rowwise() -= basis.center.transpose();
  }
  const double total = work.squaredNorm();
  const Eigen::Index n = work.rows(), d = work.cols();
  const bool feature_side = d <= n;
  const Eigen::MatrixXd gram = feature_side ? Eigen::MatrixXd(work.transpose() * work)
                                            : Eigen::MatrixXd(work * work.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::ConvergenceFailure, "eigensolver did not converge");
  }
  const Eigen::Index r = gram.rows();
  const Eigen::VectorXd values = eig.eigenvalues().reverse().cwiseMax(0.0);
  const Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();

  for (Eigen::Index i = 0; i < r; ++i) {
    basis.explained_ratio.push_back(total > 0.0 ? values[i] / total : 0.0);
  }
  if (total <= 0.0) {
    basis.retained = 0;
    basis.components.resize(0, d);
    return basis;
  }
  double cum = 0.0;
  int k = 0;
  while (k < r) {
    cum += basis.explained_ratio[static_cast<std::size_t>(k)];
    ++k;
    if (cum >= target - 1e-12) break;
  }
  basis.retained = k;
  basis.components.resize(k, d);
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXd v;
    if (feature_side) {
      v = vectors.col(i);
    } else {
      v = work.transpose() * vectors.col(i);
      const double norm = v.norm();
      if (norm <= 0.0) throw Error(ErrorCode::ConvergenceFailure, "degenerate component");
      v /= norm;
    }
    fix_sign(v);
    const Eigen::VectorXd xv = work * v;
    const double residual = (work.transpose() * xv - values[i] * v).norm() / std::max(values[0], 1e-300);
    if (!(residual < kResidualTolerance)) {
      throw Error(ErrorCode::ConvergenceFailure,
                  "component " + std::to_string(i + 1) + " residual " + format_number(residual));
    }
    basis.components.row(i) = v.transpose();
  }
  return basis;
}

Eigen::MatrixXd project(const ReducedBasis& basis, const Eigen::MatrixXd& x) {
  if (x.cols() != basis.components.cols()) {
    throw Error(ErrorCode::LayoutMismatch, "projection input has " + std::to_string(x.cols()) +
                                               " columns, basis expects " +
                                               std::to_string(basis.components.cols()));
  }
  if (basis.kind == BasisKind::Pca) {
    return (x.rowwise() - basis.center.transpose()) * basis.components.transpose();
  }
  return x * basis.components.transpose();
}

// Layout: header "label,ratio,v1..vd"; a "kind" row, an optional "center"
// row, one "component_i" row per retained component, then "ratio_i" rows
// carrying the explained ratios of unretained components.
void write_basis(const ReducedBasis& basis, const std::filesystem::path& path) {
  const Eigen::Index d = basis.components.cols();
  std::ostringstream out;
  out << "label,ratio";
  for (Eigen::Index j = 0; j < d; ++j) out << ",v" << (j + 1);
  out << '\n';
  out << "kind_" << to_string(basis.kind) << ',' << basis.retained;
  for (Eigen::Index j = 0; j < d; ++j) out << ',';
  out << '\n';
  if (basis.kind == BasisKind::Pca) {
    out << "center,";
    for (Eigen::Index j = 0; j < d; ++j) out << ',' << format_number(basis.center[j]);
    out << '\n';
  }
  for (std::size_t i = 0; i < basis.explained_ratio.size(); ++i) {
    const bool kept = static_cast<int>(i) < basis.retained;
    out << (kept ? "component_" : "ratio_") << (i + 1) << ',' << format_number(basis.explained_ratio[i]);
    for (Eigen::Index j = 0; j < d; ++j) {
      out << ',';
      if (kept) out << format_number(basis.components(static_cast<Eigen::Index>(i), j));
    }
    out << '\n';
  }
  write_text_atomic(path, out.str());
}

ReducedBasis read_basis(const std::filesystem::path& path) {
  const PatientFrame f = read_csv(path);
  const Column& label = f.column("label");
  const Column& ratio = f.column("ratio");
  const std::size_t d = f.cols() - 2;
  ReducedBasis basis;
  if (f.rows() == 0) throw Error(ErrorCode::IoFailure, path.string() + ": empty basis file");
  const std::string& kind = label.text(0);
  if (kind == "kind_svd") {
    basis.kind = BasisKind::Svd;
  } else if (kind == "kind_pca") {
    basis.kind = BasisKind::Pca;
  } else {
    throw Error(ErrorCode::IoFailure, path.string() + ": unknown basis kind '" + kind + "'");
  }
  basis.retained = static_cast<int>(ratio.number(0));
  basis.components.resize(basis.retained, static_cast<Eigen::Index>(d));
  int comp = 0;
  for (std::size_t r = 1; r < f.rows(); ++r) {
    const std::string& l = label.text(r);
    if (l == "center") {
      basis.center.resize(static_cast<Eigen::Index>(d));
      for (std::size_t j = 0; j < d; ++j) basis.center[j] = f.column(j + 2).number(r);
      continue;
    }
    basis.explained_ratio.push_back(ratio.number(r));
    if (l.starts_with("component_")) {
      for (std::size_t j = 0; j < d; ++j) basis.components(comp, static_cast<Eigen::Index>(j)) = f.column(j + 2).number(r);
      ++comp;
    }
  }
  if (comp != basis.retained) throw Error(ErrorCode::IoFailure, path.string() + ": component count mismatch");
  return basis;
}

}  // namespace riskforge
