#pragma once

#include <string>
#include <vector>

#include "roaid/linalg.hpp"

namespace roaid {

enum class KernelFamily { gaussian, polynomial };

/// Scalar Mercer kernel k(x, y) and its hyperparameters.
///
///   gaussian:   k(x, y) = exp(-|x - y|^2 / (2 sigma^2))
///   polynomial: k(x, y) = (x^T y + offset)^degree
struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double sigma = 1.0;
  int degree = 2;
  double offset = 1.0;

  static KernelSpec gaussian(double sigma);
  static KernelSpec polynomial(int degree, double offset);

  /// Throws std::invalid_argument unless sigma > 0, degree >= 1, offset >= 0.
  void validate() const;
  std::string describe() const;

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

// Axis indices below are 0-based.

/// k(x, y).
double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const VectorXd>& x,
                   const Eigen::Ref<const VectorXd>& y);

/// d k / d x_j: derivative with respect to the FIRST argument.
double kernel_grad_first(const KernelSpec& spec, Index j, const Eigen::Ref<const VectorXd>& x,
                         const Eigen::Ref<const VectorXd>& y);

/// d^2 k / (d y_i d x_j): axis i of the second argument, axis j of the first.
double kernel_mixed_second(const KernelSpec& spec, Index i, Index j,
                           const Eigen::Ref<const VectorXd>& x,
                           const Eigen::Ref<const VectorXd>& y);

/// Ordered interpolation points: x_0 = 0, then the data points, then the grid
/// points. With p = n_s + n_g the derivative-augmented basis has m = 1 + p + n
/// functions.
class Centers {
 public:
  Centers() = default;
  Centers(Index dimension, const std::vector<VectorXd>& data_points,
          const std::vector<VectorXd>& grid_points);

  Index dimension() const { return points_.rows(); }
  Index n_s() const { return n_s_; }
  Index n_g() const { return n_g_; }
  Index p() const { return n_s_ + n_g_; }
  Index m() const { return 1 + p() + dimension(); }

  /// Center x_i for i = 0..p.
  Eigen::Ref<const VectorXd> point(Index i) const { return points_.col(i); }
  /// Index of the k-th grid point (k = 0..n_g-1) in the center ordering.
  Index grid_index(Index k) const { return 1 + n_s_ + k; }
  /// Index of the k-th data point (k = 0..n_s-1).
  Index data_index(Index k) const { return 1 + k; }
  /// Column of the first derivative section for axis j (j = 0..n-1).
  Index derivative_index(Index j) const { return p() + 1 + j; }

  /// n x (p + 1) matrix whose columns are x_0..x_p.
  const MatrixXd& points() const { return points_; }

 private:
  MatrixXd points_;
  Index n_s_ = 0;
  Index n_g_ = 0;
};

/// Derivative-augmented Gram matrix K (m x m) and the Jacobian J = Dk(0)
/// (m x n) of the feature map. Column i of K is K_i.
struct GramAssembly {
  MatrixXd K;
  MatrixXd J;

  Index m() const { return K.rows(); }
  auto column(Index i) const { return K.col(i); }
};

/// Feature vector k(x) = [k(x_0, x) .. k(x_p, x), d1_1 k(0, x) .. d1_n k(0, x)]
/// where d1_j differentiates the first (center) argument.
VectorXd assemble_feature_vector(const KernelSpec& spec, const Centers& centers,
                                 const Eigen::Ref<const VectorXd>& x);

/// Jacobian of the feature map at an arbitrary point (m x n).
MatrixXd feature_jacobian(const KernelSpec& spec, const Centers& centers,
                          const Eigen::Ref<const VectorXd>& x);

GramAssembly assemble_gram(const KernelSpec& spec, const Centers& centers);

}  // namespace roaid
