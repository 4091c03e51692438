#pragma once

#include <Eigen/Dense>

namespace roaid {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Length of the half-vectorization of an n x n symmetric matrix.
constexpr Index svec_dim(Index n) { return n * (n + 1) / 2; }

/// Scaled half-vectorization: lower triangle in column-major order with the
/// off-diagonal entries multiplied by sqrt(2), so <svec(X), svec(Y)> = tr(XY).
VectorXd svec(const Eigen::Ref<const MatrixXd>& x);

/// Inverse of svec. Only the first svec_dim(n) entries of v are read.
MatrixXd smat(const Eigen::Ref<const VectorXd>& v, Index n);

/// Unscaled half-vectorization: lower triangle in column-major order.
VectorXd vech(const Eigen::Ref<const MatrixXd>& x);

/// Inverse of vech, mirroring the lower triangle.
MatrixXd unvech(const Eigen::Ref<const VectorXd>& v, Index n);

/// Symmetric part (X + X^T) / 2.
MatrixXd sym(const Eigen::Ref<const MatrixXd>& x);

/// Smallest eigenvalue of the symmetric part of x.
double min_eigenvalue(const Eigen::Ref<const MatrixXd>& x);

/// Largest eigenvalue of the symmetric part of x.
double max_eigenvalue(const Eigen::Ref<const MatrixXd>& x);

/// Spectral norm (largest singular value).
double spectral_norm(const Eigen::Ref<const MatrixXd>& x);

}  // namespace roaid
