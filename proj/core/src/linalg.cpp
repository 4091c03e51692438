#include "roaid/linalg.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace roaid {

namespace {
const double kSqrt2 = std::sqrt(2.0);
}

VectorXd svec(const Eigen::Ref<const MatrixXd>& x) {
  if (x.rows() != x.cols()) throw std::invalid_argument("svec: matrix must be square");
  const Index n = x.rows();
  VectorXd v(svec_dim(n));
  Index k = 0;
  for (Index j = 0; j < n; ++j) {
    v(k++) = x(j, j);
    for (Index i = j + 1; i < n; ++i) v(k++) = kSqrt2 * 0.5 * (x(i, j) + x(j, i));
  }
  return v;
}

MatrixXd smat(const Eigen::Ref<const VectorXd>& v, Index n) {
  if (v.size() < svec_dim(n)) throw std::invalid_argument("smat: vector too short");
  MatrixXd x(n, n);
  Index k = 0;
  for (Index j = 0; j < n; ++j) {
    x(j, j) = v(k++);
    for (Index i = j + 1; i < n; ++i) {
      x(i, j) = v(k++) / kSqrt2;
      x(j, i) = x(i, j);
    }
  }
  return x;
}

VectorXd vech(const Eigen::Ref<const MatrixXd>& x) {
  if (x.rows() != x.cols()) throw std::invalid_argument("vech: matrix must be square");
  const Index n = x.rows();
  VectorXd v(svec_dim(n));
  Index k = 0;
  for (Index j = 0; j < n; ++j)
    for (Index i = j; i < n; ++i) v(k++) = x(i, j);
  return v;
}

MatrixXd unvech(const Eigen::Ref<const VectorXd>& v, Index n) {
  if (v.size() < svec_dim(n)) throw std::invalid_argument("unvech: vector too short");
  MatrixXd x(n, n);
  Index k = 0;
  for (Index j = 0; j < n; ++j) {
    for (Index i = j; i < n; ++i) {
      x(i, j) = v(k++);
      x(j, i) = x(i, j);
    }
  }
  return x;
}

MatrixXd sym(const Eigen::Ref<const MatrixXd>& x) { return 0.5 * (x + x.transpose()); }

double min_eigenvalue(const Eigen::Ref<const MatrixXd>& x) {
  if (x.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(x), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double max_eigenvalue(const Eigen::Ref<const MatrixXd>& x) {
  if (x.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(x), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

double spectral_norm(const Eigen::Ref<const MatrixXd>& x) {
  if (x.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(x);
  return svd.singularValues()(0);
}

}  // namespace roaid
