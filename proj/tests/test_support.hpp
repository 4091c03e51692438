#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <roaid/linalg.hpp>

namespace roaid::testing {

inline VectorXd random_vector(std::mt19937_64& rng, Index n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

inline MatrixXd random_matrix(std::mt19937_64& rng, Index r, Index c) {
  std::normal_distribution<double> g(0.0, 1.0);
  MatrixXd m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = g(rng);
  return m;
}

inline MatrixXd random_symmetric(std::mt19937_64& rng, Index n) {
  const MatrixXd m = random_matrix(rng, n, n);
  return 0.5 * (m + m.transpose());
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

/// Relative error with a floor on the denominator set by the problem scale.
inline double rel_err_scaled(double a, double b, double scale) {
  return std::abs(a - b) / std::max({std::abs(b), scale, 1e-300});
}

}  // namespace roaid::testing
