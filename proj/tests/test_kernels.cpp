#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <roaid/kernels.hpp>

#include "test_support.hpp"

using namespace roaid;
using roaid::testing::random_matrix;
using roaid::testing::random_vector;

namespace {

VectorXd v2(double a, double b) { return (VectorXd(2) << a, b).finished(); }

double fd_first(const KernelSpec& k, Index j, VectorXd x, const VectorXd& y, double h) {
  const double s = h * (1.0 + x.norm());
  x(j) += s;
  const double fp = kernel_eval(k, x, y);
  x(j) -= 2 * s;
  const double fm = kernel_eval(k, x, y);
  return (fp - fm) / (2 * s);
}

double fd_mixed(const KernelSpec& k, Index i, Index j, const VectorXd& x, const VectorXd& y, double h) {
  const double sx = h * (1.0 + x.norm()), sy = h * (1.0 + y.norm());
  auto f = [&](double dx, double dy) {
    VectorXd xx = x, yy = y;
    xx(j) += dx;
    yy(i) += dy;
    return kernel_eval(k, xx, yy);
  };
  return (f(sx, sy) - f(sx, -sy) - f(-sx, sy) + f(-sx, -sy)) / (4 * sx * sy);
}

std::vector<KernelSpec> random_specs(std::mt19937_64& rng, KernelFamily fam, int count) {
  std::uniform_real_distribution<double> s(0.4, 2.5), c(0.0, 2.0);
  std::uniform_int_distribution<int> d(1, 4);
  std::vector<KernelSpec> out;
  for (int i = 0; i < count; ++i)
    out.push_back(fam == KernelFamily::gaussian ? KernelSpec::gaussian(s(rng)) : KernelSpec::polynomial(d(rng), c(rng)));
  return out;
}

}  // namespace

TEST(KernelSpec, ValidateRejectsBadParameters) {
  EXPECT_THROW(KernelSpec::gaussian(0.0).validate(), std::invalid_argument);
  EXPECT_THROW(KernelSpec::gaussian(-1.0).validate(), std::invalid_argument);
  EXPECT_THROW(KernelSpec::polynomial(0, 1.0).validate(), std::invalid_argument);
  EXPECT_THROW(KernelSpec::polynomial(2, -0.1).validate(), std::invalid_argument);
  EXPECT_NO_THROW(KernelSpec::polynomial(1, 0.0).validate());
}

TEST(KernelEval, Examples) {
  EXPECT_DOUBLE_EQ(kernel_eval(KernelSpec::gaussian(1.0), v2(0.3, -0.7), v2(0.3, -0.7)), 1.0);
  EXPECT_DOUBLE_EQ(kernel_eval(KernelSpec::polynomial(2, 1.0), v2(0, 0), v2(0, 0)), 1.0);
  EXPECT_NEAR(kernel_eval(KernelSpec::gaussian(1.0), v2(1, 0), v2(0, 0)), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(kernel_eval(KernelSpec::gaussian(1.0), v2(1, 0), v2(0, 0)), 0.606531, 1e-6);
}

TEST(KernelEval, SymmetricInArguments) {
  std::mt19937_64 rng(1);
  for (auto fam : {KernelFamily::gaussian, KernelFamily::polynomial})
    for (const auto& k : random_specs(rng, fam, 10)) {
      const VectorXd x = random_vector(rng, 3), y = random_vector(rng, 3);
      EXPECT_DOUBLE_EQ(kernel_eval(k, x, y), kernel_eval(k, y, x));
    }
}

TEST(KernelEval, DimensionMismatchThrows) {
  EXPECT_THROW(kernel_eval(KernelSpec::gaussian(1.0), VectorXd::Zero(2), VectorXd::Zero(3)), std::invalid_argument);
}

TEST(KernelGradFirst, Examples) {
  const auto g = KernelSpec::gaussian(1.0);
  for (Index j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(kernel_grad_first(g, j, v2(0.4, 0.2), v2(0.4, 0.2)), 0.0);
  EXPECT_NEAR(kernel_grad_first(g, 0, v2(1, 0), v2(0, 0)), -std::exp(-0.5), 1e-15);
  EXPECT_NEAR(kernel_grad_first(KernelSpec::polynomial(1, 0.0), 1, v2(3, 4), v2(5, 6)), 6.0, 1e-14);
}

TEST(KernelGradFirst, AxisOutOfRangeThrows) {
  EXPECT_THROW(kernel_grad_first(KernelSpec::gaussian(1.0), 2, v2(0, 0), v2(1, 1)), std::out_of_range);
  EXPECT_THROW(kernel_grad_first(KernelSpec::gaussian(1.0), -1, v2(0, 0), v2(1, 1)), std::out_of_range);
}

TEST(KernelMixedSecond, Examples) {
  const auto g = KernelSpec::gaussian(1.0);
  EXPECT_NEAR(kernel_mixed_second(g, 0, 0, v2(0, 0), v2(0, 0)), 1.0, 1e-15);
  EXPECT_NEAR(kernel_mixed_second(g, 0, 1, v2(0, 0), v2(0, 0)), 0.0, 1e-15);
  std::mt19937_64 rng(2);
  const auto lin = KernelSpec::polynomial(1, 0.0);
  for (int t = 0; t < 5; ++t) {
    const VectorXd x = random_vector(rng, 3), y = random_vector(rng, 3);
    for (Index i = 0; i < 3; ++i) EXPECT_NEAR(kernel_mixed_second(lin, i, i, x, y), 1.0, 1e-14);
  }
}

TEST(KernelMixedSecond, SwapSymmetry) {
  std::mt19937_64 rng(3);
  for (auto fam : {KernelFamily::gaussian, KernelFamily::polynomial})
    for (const auto& k : random_specs(rng, fam, 10)) {
      const VectorXd x = random_vector(rng, 2), y = random_vector(rng, 2);
      for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 2; ++j)
          EXPECT_NEAR(kernel_mixed_second(k, i, j, x, y), kernel_mixed_second(k, j, i, y, x), 1e-12);
    }
}

TEST(KernelDerivatives, MatchFiniteDifferencesOn100Pairs) {
  std::mt19937_64 rng(4);
  for (auto fam : {KernelFamily::gaussian, KernelFamily::polynomial}) {
    const auto specs = random_specs(rng, fam, 100);
    double worst1 = 0.0, worst2 = 0.0;
    for (const auto& k : specs) {
      const VectorXd x = random_vector(rng, 2, -1.5, 1.5), y = random_vector(rng, 2, -1.5, 1.5);
      for (Index j = 0; j < 2; ++j) {
        const double fd = fd_first(k, j, x, y, 1e-5);
        worst1 = std::max(worst1, std::abs(kernel_grad_first(k, j, x, y) - fd) / std::max(1.0, std::abs(fd)));
        for (Index i = 0; i < 2; ++i) {
          const double fd2 = fd_mixed(k, i, j, x, y, 1e-4);
          worst2 = std::max(worst2, std::abs(kernel_mixed_second(k, i, j, x, y) - fd2) / std::max(1.0, std::abs(fd2)));
        }
      }
    }
    EXPECT_LE(worst1, 1e-6);
    EXPECT_LE(worst2, 1e-5);
  }
}

TEST(Centers, OrderingAndSizes) {
  const Centers c(2, {v2(1, 2), v2(3, 4)}, {v2(0.5, 0), v2(0, 0.5), v2(1, 1)});
  EXPECT_EQ(c.n_s(), 2);
  EXPECT_EQ(c.n_g(), 3);
  EXPECT_EQ(c.p(), 5);
  EXPECT_EQ(c.m(), 8);
  EXPECT_TRUE(c.point(0).isZero(0.0));
  EXPECT_EQ(c.point(c.data_index(1)), v2(3, 4));
  EXPECT_EQ(c.point(c.grid_index(2)), v2(1, 1));
  EXPECT_EQ(c.derivative_index(0), 6);
}

TEST(Centers, RejectsZeroGridPointAndBadDimension) {
  EXPECT_THROW(Centers(2, {}, {v2(0, 0)}), std::invalid_argument);
  EXPECT_THROW(Centers(2, {VectorXd::Zero(3)}, {}), std::invalid_argument);
}

TEST(FeatureVector, Examples) {
  const auto g = KernelSpec::gaussian(1.0);
  const Centers origin_only(2, {}, {});
  EXPECT_EQ(assemble_feature_vector(g, origin_only, v2(0, 0)), (VectorXd(3) << 1, 0, 0).finished());

  // First-argument sections: d/dc exp(-|c - x|^2/2) at c = 0 equals +x_1 e^{-1/2}.
  const VectorXd k = assemble_feature_vector(g, origin_only, v2(1, 0));
  EXPECT_NEAR(k(0), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(k(1), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(k(2), 0.0, 1e-15);
  EXPECT_NEAR(k(1), kernel_grad_first(g, 0, v2(0, 0), v2(1, 0)), 1e-15);

  std::mt19937_64 rng(5);
  const Centers c(2, {random_vector(rng, 2), random_vector(rng, 2)}, {random_vector(rng, 2)});
  for (const auto& spec : {g, KernelSpec::polynomial(3, 1.0)})
    for (Index i = 0; i <= c.p(); ++i) {
      const VectorXd xi = c.point(i);
      EXPECT_DOUBLE_EQ(assemble_feature_vector(spec, c, xi)(i), kernel_eval(spec, xi, xi));
    }
}

TEST(FeatureVector, DimensionMismatchThrows) {
  const Centers c(2, {}, {});
  EXPECT_THROW(assemble_feature_vector(KernelSpec::gaussian(1.0), c, VectorXd::Zero(3)), std::invalid_argument);
}

TEST(FeatureJacobian, MatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  const Centers c(2, {random_vector(rng, 2), random_vector(rng, 2)}, {random_vector(rng, 2)});
  for (const auto& spec : {KernelSpec::gaussian(0.8), KernelSpec::polynomial(3, 1.0)}) {
    const VectorXd x = random_vector(rng, 2);
    const MatrixXd D = feature_jacobian(spec, c, x);
    for (Index j = 0; j < 2; ++j) {
      VectorXd xp = x, xm = x;
      xp(j) += 1e-6;
      xm(j) -= 1e-6;
      const VectorXd fd = (assemble_feature_vector(spec, c, xp) - assemble_feature_vector(spec, c, xm)) / 2e-6;
      EXPECT_LE((D.col(j) - fd).cwiseAbs().maxCoeff(), 1e-7);
    }
  }
}

TEST(Gram, OriginOnlyExample) {
  const GramAssembly g = assemble_gram(KernelSpec::gaussian(1.0), Centers(2, {}, {}));
  ASSERT_EQ(g.m(), 3);
  EXPECT_DOUBLE_EQ(g.K(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(g.K(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(g.K(0, 2), 0.0);
  EXPECT_DOUBLE_EQ(g.K(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(g.K(2, 2), 1.0);
  EXPECT_DOUBLE_EQ(g.K(1, 2), 0.0);
}

TEST(Gram, SymmetricPsdAndConsistentWithFeatureVectors) {
  std::mt19937_64 rng(7);
  for (const auto& spec : {KernelSpec::gaussian(0.5), KernelSpec::gaussian(2.0), KernelSpec::polynomial(2, 1.0)}) {
    std::vector<VectorXd> data, grid;
    for (int i = 0; i < 5; ++i) data.push_back(random_vector(rng, 2));
    for (int i = 0; i < 4; ++i) grid.push_back(random_vector(rng, 2));
    const Centers c(2, data, grid);
    const GramAssembly g = assemble_gram(spec, c);
    EXPECT_EQ(g.m(), c.m());
    EXPECT_LE((g.K - g.K.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GE(min_eigenvalue(g.K), -1e-8 * g.K.trace() / static_cast<double>(g.m()));
    for (Index i = 0; i <= c.p(); ++i)
      EXPECT_LE((assemble_feature_vector(spec, c, c.point(i)) - g.K.col(i)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((feature_jacobian(spec, c, VectorXd::Zero(2)) - g.J).cwiseAbs().maxCoeff(), 1e-12);
    for (Index j = 0; j < 2; ++j)
      EXPECT_LE((g.J.col(j) - g.K.col(c.derivative_index(j))).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Gram, NormIdentityIsNonnegative) {
  std::mt19937_64 rng(8);
  const Centers c(2, {random_vector(rng, 2), random_vector(rng, 2), random_vector(rng, 2)}, {random_vector(rng, 2)});
  const GramAssembly g = assemble_gram(KernelSpec::gaussian(1.0), c);
  for (int t = 0; t < 20; ++t) {
    const MatrixXd A = random_matrix(rng, 2, g.m());
    EXPECT_GE((A * g.K * A.transpose()).trace(), -1e-10);
  }
}
