#include "roaid/kernels.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace roaid {

KernelSpec KernelSpec::gaussian(double sigma) {
  KernelSpec s;
  s.family = KernelFamily::gaussian;
  s.sigma = sigma;
  s.validate();
  return s;
}

KernelSpec KernelSpec::polynomial(int degree, double offset) {
  KernelSpec s;
  s.family = KernelFamily::polynomial;
  s.degree = degree;
  s.offset = offset;
  s.validate();
  return s;
}

void KernelSpec::validate() const {
  switch (family) {
    case KernelFamily::gaussian:
      if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("gaussian kernel requires sigma > 0");
      break;
    case KernelFamily::polynomial:
      if (degree < 1) throw std::invalid_argument("polynomial kernel requires degree >= 1");
      if (!(offset >= 0.0) || !std::isfinite(offset))
        throw std::invalid_argument("polynomial kernel requires offset >= 0");
      break;
  }
}

std::string KernelSpec::describe() const {
  std::ostringstream os;
  if (family == KernelFamily::gaussian) {
    os << "gaussian(sigma=" << sigma << ")";
  } else {
    os << "polynomial(degree=" << degree << ", offset=" << offset << ")";
  }
  return os.str();
}

namespace {

void check_dims(const Eigen::Ref<const VectorXd>& x, const Eigen::Ref<const VectorXd>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("kernel arguments differ in dimension");
}

void check_axis(Index j, Index n) {
  if (j < 0 || j >= n) throw std::out_of_range("kernel axis index out of range");
}

// s^e with the convention that the coefficient in front is zero when e < 0.
double poly_pow(double s, int e) { return e == 0 ? 1.0 : std::pow(s, e); }

}  // namespace

double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const VectorXd>& x,
                   const Eigen::Ref<const VectorXd>& y) {
  check_dims(x, y);
  if (spec.family == KernelFamily::gaussian) {
    return std::exp(-(x - y).squaredNorm() / (2.0 * spec.sigma * spec.sigma));
  }
  return poly_pow(x.dot(y) + spec.offset, spec.degree);
}

double kernel_grad_first(const KernelSpec& spec, Index j, const Eigen::Ref<const VectorXd>& x,
                         const Eigen::Ref<const VectorXd>& y) {
  check_dims(x, y);
  check_axis(j, x.size());
  if (spec.family == KernelFamily::gaussian) {
    const double s2 = spec.sigma * spec.sigma;
    return -(x(j) - y(j)) / s2 * kernel_eval(spec, x, y);
  }
  const int d = spec.degree;
  return d * poly_pow(x.dot(y) + spec.offset, d - 1) * y(j);
}

double kernel_mixed_second(const KernelSpec& spec, Index i, Index j,
                           const Eigen::Ref<const VectorXd>& x,
                           const Eigen::Ref<const VectorXd>& y) {
  check_dims(x, y);
  check_axis(i, x.size());
  check_axis(j, x.size());
  const double delta = (i == j) ? 1.0 : 0.0;
  if (spec.family == KernelFamily::gaussian) {
    const double s2 = spec.sigma * spec.sigma;
    const double k = kernel_eval(spec, x, y);
    return k * (delta / s2 - (x(j) - y(j)) * (x(i) - y(i)) / (s2 * s2));
  }
  const int d = spec.degree;
  const double s = x.dot(y) + spec.offset;
  double value = d * poly_pow(s, d - 1) * delta;
  if (d >= 2) value += d * (d - 1) * poly_pow(s, d - 2) * x(i) * y(j);
  return value;
}

Centers::Centers(Index dimension, const std::vector<VectorXd>& data_points,
                 const std::vector<VectorXd>& grid_points)
    : n_s_(static_cast<Index>(data_points.size())),
      n_g_(static_cast<Index>(grid_points.size())) {
  if (dimension < 1) throw std::invalid_argument("Centers: dimension must be positive");
  points_.setZero(dimension, 1 + n_s_ + n_g_);
  Index col = 1;
  for (const auto& x : data_points) {
    if (x.size() != dimension) throw std::invalid_argument("Centers: data point dimension mismatch");
    points_.col(col++) = x;
  }
  for (const auto& z : grid_points) {
    if (z.size() != dimension) throw std::invalid_argument("Centers: grid point dimension mismatch");
    if (z.squaredNorm() == 0.0) throw std::invalid_argument("Centers: grid points must be nonzero");
    points_.col(col++) = z;
  }
}

VectorXd assemble_feature_vector(const KernelSpec& spec, const Centers& centers,
                                 const Eigen::Ref<const VectorXd>& x) {
  const Index n = centers.dimension();
  if (x.size() != n) throw std::invalid_argument("feature vector: query dimension mismatch");
  const Index p = centers.p();
  VectorXd k(centers.m());
  for (Index i = 0; i <= p; ++i) k(i) = kernel_eval(spec, centers.point(i), x);
  const VectorXd origin = VectorXd::Zero(n);
  for (Index j = 0; j < n; ++j) k(p + 1 + j) = kernel_grad_first(spec, j, origin, x);
  return k;
}

MatrixXd feature_jacobian(const KernelSpec& spec, const Centers& centers,
                          const Eigen::Ref<const VectorXd>& x) {
  const Index n = centers.dimension();
  if (x.size() != n) throw std::invalid_argument("feature jacobian: query dimension mismatch");
  const Index p = centers.p();
  MatrixXd jac(centers.m(), n);
  // d/dx_j k(x_i, x) is the derivative in the second argument; by symmetry of
  // k it equals the first-argument derivative of k(x, x_i).
  for (Index i = 0; i <= p; ++i)
    for (Index j = 0; j < n; ++j) jac(i, j) = kernel_grad_first(spec, j, x, centers.point(i));
  const VectorXd origin = VectorXd::Zero(n);
  for (Index l = 0; l < n; ++l)
    for (Index j = 0; j < n; ++j) jac(p + 1 + l, j) = kernel_mixed_second(spec, j, l, origin, x);
  return jac;
}

GramAssembly assemble_gram(const KernelSpec& spec, const Centers& centers) {
  spec.validate();
  const Index n = centers.dimension();
  const Index p = centers.p();
  const Index m = centers.m();
  const VectorXd origin = VectorXd::Zero(n);

  GramAssembly g;
  g.K.resize(m, m);
  for (Index i2 = 0; i2 <= p; ++i2) {
    for (Index i1 = i2; i1 <= p; ++i1) {
      const double v = kernel_eval(spec, centers.point(i2), centers.point(i1));
      g.K(i1, i2) = v;
      g.K(i2, i1) = v;
    }
  }
  // Cross blocks: d1_j k(0, x_i) = d2_j k(x_i, 0).
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i <= p; ++i) {
      const double v = kernel_grad_first(spec, j, origin, centers.point(i));
      g.K(i, p + 1 + j) = v;
      g.K(p + 1 + j, i) = v;
    }
  }
  for (Index a = 0; a < n; ++a)
    for (Index b = 0; b < n; ++b)
      g.K(p + 1 + a, p + 1 + b) = kernel_mixed_second(spec, a, b, origin, origin);

  g.J = feature_jacobian(spec, centers, origin);
  return g;
}

}  // namespace roaid
