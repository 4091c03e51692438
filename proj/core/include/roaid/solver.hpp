#pragma once

#include <string>

#include "roaid/program.hpp"

namespace roaid {

enum class SolveStatus { optimal, max_iter, infeasible_detected, numerical_failure };

std::string to_string(SolveStatus status);

struct SolverOptions {
  double feas_tol = 1e-7;
  double gap_tol = 1e-7;
  int max_iter = 100;
  bool verbose = false;  // per-iteration trace on stderr
};

struct Solution {
  SolveStatus status = SolveStatus::numerical_failure;
  VectorXd x;  // canonical primal point
  VectorXd s;  // cone slack h - G x
  Duals duals;
  MatrixXd A;  // natural variables; empty for problems not built by canonicalize
  MatrixXd P;
  double objective = 0.0;
  int iterations = 0;
  double solve_seconds = 0.0;
  double primal_residual = 0.0;  // relative
  double dual_residual = 0.0;    // relative
  double rel_gap = 0.0;
  std::string message;

  bool ok() const { return status == SolveStatus::optimal; }
};

/// Primal-dual interior-point method for CanonicalConic programs, using
/// Nesterov-Todd scaling and Mehrotra predictor-corrector steps. Deterministic
/// and single-threaded. On success the relative primal residual, relative
/// dual residual and relative duality gap are all below the tolerances.
Solution solve(const CanonicalConic& problem, const SolverOptions& options = {});

/// Recomputes residuals of a canonical solution from the problem data alone.
/// Primal entries are absolute; the PSD entries are the smallest eigenvalues
/// of the PSD slack blocks by role (generic blocks count toward psd_min_eig).
KKTReport verify_solution(const CanonicalConic& problem, const Solution& solution);

}  // namespace roaid
