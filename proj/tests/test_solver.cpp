#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <roaid/dynamics.hpp>
#include <roaid/program.hpp>
#include <roaid/roa_grid.hpp>
#include <roaid/solver.hpp>

#include "test_support.hpp"

using namespace roaid;
using roaid::testing::random_matrix;
using roaid::testing::random_symmetric;

namespace {

VectorXd v2(double a, double b) { return (VectorXd(2) << a, b).finished(); }

CanonicalConic empty_problem(Index nvars) {
  CanonicalConic c;
  c.Q = MatrixXd::Zero(nvars, nvars);
  c.q = VectorXd::Zero(nvars);
  c.A_eq = MatrixXd::Zero(0, nvars);
  c.b_eq = VectorXd::Zero(0);
  c.G = MatrixXd::Zero(0, nvars);
  c.h = VectorXd::Zero(0);
  return c;
}

// minimize tr(P) subject to P - I PSD; x = svec(P).
CanonicalConic trace_problem() {
  CanonicalConic c = empty_problem(3);
  c.q = svec(MatrixXd::Identity(2, 2));
  c.G = -MatrixXd::Identity(3, 3);
  c.h = -svec(MatrixXd::Identity(2, 2));
  c.psd = {{2, ConeRole::generic}};
  return c;
}

// minimize |a - (3, 4)|^2 subject to a >= 0, a_2 <= 1.
CanonicalConic clipped_problem() {
  CanonicalConic c = empty_problem(2);
  c.Q = 2 * MatrixXd::Identity(2, 2);
  c.q = v2(-6, -8);
  c.c0 = 25;
  c.G = (MatrixXd(3, 2) << -1, 0, 0, -1, 0, 1).finished();
  c.h = (VectorXd(3) << 0, 0, 1).finished();
  c.n_nonneg = 3;
  return c;
}

// minimize x^2 subject to x = 5.
CanonicalConic pinned_problem() {
  CanonicalConic c = empty_problem(1);
  c.Q = MatrixXd::Constant(1, 1, 2.0);
  c.A_eq = MatrixXd::Ones(1, 1);
  c.b_eq = VectorXd::Constant(1, 5.0);
  return c;
}

void expect_certified(const CanonicalConic& c, const Solution& s) {
  ASSERT_TRUE(s.ok()) << to_string(s.status) << ": " << s.message;
  EXPECT_LE(s.primal_residual, 1e-7);
  EXPECT_LE(s.dual_residual, 1e-7);
  EXPECT_LE(s.rel_gap, 1e-7);
  const KKTReport r = verify_solution(c, s);
  EXPECT_LE(r.eq_residual, 1e-7);
  EXPECT_LE(r.ineq_violation, 1e-7);
  EXPECT_GE(r.psd_min_eig, -1e-7);
  ASSERT_TRUE(r.dual_residual.has_value());
  EXPECT_LE(*r.dual_residual, 1e-7);
  EXPECT_LE(*r.rel_gap, 1e-7);
}

struct Identification {
  DataSet data;
  Centers centers;
  GramAssembly gram;
  ConicProgram program;
};

Identification identification(const KernelSpec& k) {
  Identification id;
  id.data = sample_dataset(example_system(), {v2(1, -1), v2(-1, -1)}, 5, 3.0, 1e-3, 1);
  const GridSet grid = generate_polar_grid({2, 1.5}, 3, 5);
  id.centers = Centers(2, id.data.x, grid.points);
  id.gram = assemble_gram(k, id.centers);
  FitConfig cfg;
  cfg.lambda = 1e-2;
  id.program = assemble_program(id.gram, id.data, id.centers, cfg);
  return id;
}

}  // namespace

TEST(Solve, TraceMinimizationGivesIdentity) {
  const CanonicalConic c = trace_problem();
  const Solution s = solve(c);
  expect_certified(c, s);
  EXPECT_LE((smat(s.x, 2) - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_NEAR(s.objective, 2.0, 1e-7);
}

TEST(Solve, ClippedProjection) {
  const CanonicalConic c = clipped_problem();
  const Solution s = solve(c);
  expect_certified(c, s);
  EXPECT_NEAR(s.x(0), 3.0, 1e-6);
  EXPECT_NEAR(s.x(1), 1.0, 1e-6);
  EXPECT_NEAR(s.objective, 9.0, 1e-6);
}

TEST(Solve, EqualityPinnedQuadratic) {
  const CanonicalConic c = pinned_problem();
  const Solution s = solve(c);
  expect_certified(c, s);
  EXPECT_NEAR(s.x(0), 5.0, 1e-9);
  EXPECT_NEAR(s.objective, 25.0, 1e-7);
}

TEST(VerifySolution, PerturbationBreaksOptimality) {
  {
    const CanonicalConic c = clipped_problem();
    Solution s = solve(c);
    ASSERT_TRUE(s.ok());
    s.x *= 1.01;
    const KKTReport r = verify_solution(c, s);
    EXPECT_TRUE(r.ineq_violation > 1e-7 || *r.rel_gap > 1e-7);
  }
  {
    const CanonicalConic c = trace_problem();
    Solution s = solve(c);
    ASSERT_TRUE(s.ok());
    s.x *= 1.01;
    const KKTReport r = verify_solution(c, s);
    EXPECT_GT(*r.rel_gap, 1e-7);
  }
}

TEST(VerifySolution, ExactIdentityHasZeroResiduals) {
  const CanonicalConic c = trace_problem();
  Solution s;
  s.status = SolveStatus::optimal;
  s.x = svec(MatrixXd::Identity(2, 2));
  s.duals.y = VectorXd::Zero(0);
  s.duals.z = svec(MatrixXd::Identity(2, 2));
  const KKTReport r = verify_solution(c, s);
  EXPECT_EQ(r.ineq_violation, 0.0);
  EXPECT_EQ(r.eq_residual, 0.0);
  EXPECT_LE(std::abs(r.psd_min_eig), 1e-15);
  EXPECT_LE(*r.dual_residual, 1e-15);
  EXPECT_LE(*r.rel_gap, 1e-15);
}

TEST(Solve, DetectsPrimalInfeasibility) {
  CanonicalConic c = empty_problem(1);
  c.Q = MatrixXd::Constant(1, 1, 1.0);
  c.G = (MatrixXd(2, 1) << -1, 1).finished();  // x >= 1 and x <= -1
  c.h = v2(-1, -1);
  c.n_nonneg = 2;
  const Solution s = solve(c);
  EXPECT_EQ(s.status, SolveStatus::infeasible_detected);
  EXPECT_FALSE(s.ok());
}

TEST(Solve, RejectsMalformedProblems) {
  CanonicalConic c = clipped_problem();
  c.n_nonneg = 2;
  EXPECT_THROW(solve(c), std::invalid_argument);
  SolverOptions bad;
  bad.feas_tol = 0;
  EXPECT_THROW(solve(clipped_problem(), bad), std::invalid_argument);
}

TEST(Solve, IdentificationProgramCertified) {
  const Identification id = identification(KernelSpec::gaussian(1.0));
  const CanonicalConic c = canonicalize_reduced(id.program);
  const Solution s = solve(c);
  expect_certified(c, s);
  const KKTReport r = kkt_report(id.program, s.A, s.P);
  EXPECT_TRUE(r.primal_feasible(1e-6));
}

TEST(Solve, Deterministic) {
  const Identification id = identification(KernelSpec::gaussian(1.0));
  const CanonicalConic c = canonicalize_reduced(id.program);
  const Solution a = solve(c), b = solve(c);
  ASSERT_TRUE(a.ok());
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_LE(std::abs(a.objective - b.objective), 1e-10 * std::abs(a.objective));
  EXPECT_EQ(a.x, b.x);
}

TEST(Solve, ObjectiveScalingLeavesArgminUnchanged) {
  const Identification id = identification(KernelSpec::gaussian(1.0));
  const CanonicalConic c = canonicalize_reduced(id.program);
  CanonicalConic scaled = c;
  scaled.Q *= 1e3;
  scaled.q *= 1e3;
  scaled.c0 *= 1e3;
  // The argmin is resolved to about sqrt(gap / lambda); 1e-8 resolves it below the comparison tolerance.
  SolverOptions o;
  o.feas_tol = 1e-8;
  o.gap_tol = 1e-8;
  const Solution a = solve(c, o), b = solve(scaled, o);
  ASSERT_TRUE(a.ok());
  ASSERT_TRUE(b.ok());
  EXPECT_LE((a.A - b.A).norm(), 1e-5 * std::max(1.0, a.A.norm()));
  EXPECT_LE((a.P - b.P).norm(), 1e-5 * std::max(1.0, a.P.norm()));
}

TEST(Solve, OptimalityAgainstFeasiblePerturbations) {
  // The kernel (x^T y + 1)^2 represents g(x) = -3x, a strictly feasible
  // point; perturbations are pulled toward it until feasible.
  const KernelSpec k = KernelSpec::polynomial(2, 1.0);
  const Identification id = identification(k);
  const CanonicalConic c = canonicalize(id.program);
  const Solution s = solve(c);
  ASSERT_TRUE(s.ok()) << s.message;
  const double opt = id.program.objective(s.A, s.P);

  MatrixXd A_in = MatrixXd::Zero(2, id.program.m);
  for (Index j = 0; j < 2; ++j) A_in(j, id.centers.derivative_index(j)) = -1.5;
  const MatrixXd P_in = 2.0 * MatrixXd::Identity(2, 2);
  ASSERT_TRUE(kkt_report(id.program, A_in, P_in).primal_feasible(0.0));

  std::mt19937_64 rng(9);
  int tested = 0;
  for (int t = 0; t < 20; ++t) {
    MatrixXd dA = 0.05 * random_matrix(rng, 2, id.program.m);
    const VectorXd K0 = id.gram.K.col(0);
    dA -= (dA * K0) * K0.transpose() / K0.squaredNorm();
    const MatrixXd dP = 0.05 * random_symmetric(rng, 2);
    for (double w = 0.0; w <= 1.0; w += 0.01) {
      const MatrixXd A = (1 - w) * (s.A + dA) + w * A_in;
      const MatrixXd P = (1 - w) * (s.P + dP) + w * P_in;
      if (!kkt_report(id.program, A, P).primal_feasible(1e-9)) continue;
      EXPECT_GE(id.program.objective(A, P), opt - 1e-6 * (1 + std::abs(opt)));
      ++tested;
      break;
    }
  }
  EXPECT_EQ(tested, 20);
}
