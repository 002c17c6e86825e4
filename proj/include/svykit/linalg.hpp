#pragma once

#include <Eigen/Dense>
#include <sstream>

#include "svykit/errors.hpp"

namespace svykit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct SymSolveInfo {
  double cond = 0.0;        // ratio of largest to smallest retained |eigenvalue|
  Eigen::Index rank = 0;    // retained directions
  Eigen::Index null_dim = 0;
  double lambda_max = 0.0;  // largest |eigenvalue|
};

/// Solves A b = rhs for symmetric positive-definite A via eigendecomposition.
/// Throws RankError (with a condition estimate in the message) when A is not
/// numerically positive definite or its condition number exceeds max_cond.
inline Vector solve_spd_strict(const Matrix& a, const Vector& rhs,
                               double max_cond = 1e12, SymSolveInfo* info = nullptr) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) throw RankError("eigendecomposition failed");
  const Vector& ev = es.eigenvalues();
  const double lmax = ev.cwiseAbs().maxCoeff();
  const double lmin = ev.minCoeff();
  const double cond = (lmin > 0.0) ? lmax / lmin
                                   : std::numeric_limits<double>::infinity();
  if (!(lmin > 0.0) || cond > max_cond) {
    std::ostringstream msg;
    msg << "matrix is singular or ill-conditioned (condition estimate ";
    msg << cond << ", smallest eigenvalue " << lmin << ")";
    throw RankError(msg.str());
  }
  if (info) {
    info->cond = cond;
    info->rank = ev.size();
    info->null_dim = 0;
    info->lambda_max = lmax;
  }
  return es.eigenvectors() *
         (ev.cwiseInverse().asDiagonal() * (es.eigenvectors().transpose() * rhs));
}

/// Solves A b = rhs for symmetric (possibly indefinite) A, projecting out
/// near-null eigen-directions. A direction is treated as null when its
/// |eigenvalue| falls below rel_tol * max(|lambda|_max, abs_scale); the
/// solution component along null directions is zero. abs_scale should carry
/// the gross magnitude of the terms that assembled A, so matrices that are
/// zero up to cancellation noise project to the zero solution.
inline Vector solve_sym_projected(const Matrix& a, const Vector& rhs,
                                  double abs_scale, SymSolveInfo* info = nullptr,
                                  double rel_tol = 1e-10) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) throw RankError("eigendecomposition failed");
  const Vector& ev = es.eigenvalues();
  const double lmax = ev.cwiseAbs().maxCoeff();
  const double thresh = rel_tol * std::max(lmax, abs_scale);
  Vector inv = Vector::Zero(ev.size());
  Eigen::Index rank = 0;
  double kept_min = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const double mag = std::abs(ev[i]);
    if (mag > thresh) {
      inv[i] = 1.0 / ev[i];
      kept_min = (rank == 0) ? mag : std::min(kept_min, mag);
      ++rank;
    }
  }
  if (info) {
    info->cond = (rank > 0) ? lmax / kept_min : 0.0;
    info->rank = rank;
    info->null_dim = ev.size() - rank;
    info->lambda_max = lmax;
  }
  return es.eigenvectors() *
         (inv.asDiagonal() * (es.eigenvectors().transpose() * rhs));
}

}  // namespace svykit
