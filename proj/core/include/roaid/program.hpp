#pragma once

#include <optional>
#include <string>
#include <vector>

#include "roaid/dynamics.hpp"
#include "roaid/kernels.hpp"
#include "roaid/linalg.hpp"

namespace roaid {

struct FitConfig {
  double lambda = 1e-3;
  bool include_grid_constraints = true;
  bool fix_P_to_identity = false;
  double feas_tol = 1e-7;
  double gap_tol = 1e-7;
  double rho = 0.0;  // weight of the optional |P|_F^2 term
  int max_iter = 200;
  bool verbose = false;

  /// The unconstrained-P baseline: P = I and no grid inequalities.
  static FitConfig ablation(double lambda);
  /// Throws std::invalid_argument unless lambda > 0, tolerances > 0, rho >= 0.
  void validate() const;
};

/// Identification program over A (n x m) and symmetric P (n x n):
///
///   minimize   sum_i |P y_i - A K_i|^2 + lambda tr(A K A^T) + rho |P|_F^2
///   subject to z_k^T A K_{g(k)} <= -|z_k|^2   for every grid point z_k
///              -(sym(A J) + I) is PSD
///              P - I is PSD
///              A K_0 = 0
///
/// With fix_P_to_identity the matrix P is the constant I and its PSD block is
/// dropped.
struct ConicProgram {
  Index n = 0;
  Index m = 0;
  MatrixXd K;                      // m x m
  MatrixXd J;                      // m x n
  MatrixXd targets;                // n x n_s, column i is y_i
  std::vector<Index> data_columns; // center index of each target
  MatrixXd grid_points;            // n x n_ineq, empty when the block is disabled
  std::vector<Index> grid_columns; // center index of each grid point
  double lambda = 1.0;
  double rho = 0.0;
  bool P_fixed = false;

  Index n_s() const { return targets.cols(); }
  Index n_ineq() const { return grid_points.cols(); }
  Index n_eq() const { return n; }
  bool has_lyapunov_block() const { return !P_fixed; }

  /// Direct evaluation of the objective. P is ignored when P_fixed.
  double objective(const MatrixXd& A, const MatrixXd& P) const;
};

ConicProgram assemble_program(const GramAssembly& gram, const DataSet& data,
                              const Centers& centers, const FitConfig& config);

enum class ConeRole { generic, lmi, lyapunov_p };

struct PsdBlock {
  Index order = 0;  // matrix side length; occupies svec_dim(order) slack entries
  ConeRole role = ConeRole::generic;
};

/// Standard-form conic QP
///
///   minimize   0.5 x^T Q x + q^T x + c0
///   subject to A_eq x = b_eq
///              G x + s = h,  s in R_+^{n_nonneg} x S_+^{psd[0]} x ...
///
/// PSD slacks are stored as svec. The variable is x = (vec B, vech P) with
/// A = B basis^T, vec column-major, and the vech P part absent when P is
/// fixed. The plain canonicalization uses basis = I so that B = A.
struct CanonicalConic {
  MatrixXd Q;
  VectorXd q;
  double c0 = 0.0;
  MatrixXd A_eq;
  VectorXd b_eq;
  MatrixXd G;
  VectorXd h;
  Index n_nonneg = 0;
  std::vector<PsdBlock> psd;

  Index n = 0;  // state dimension
  Index m = 0;  // number of basis functions
  bool P_fixed = false;
  MatrixXd basis;  // m x r

  Index n_vars() const { return Q.rows(); }
  /// Linear map from x to the natural variables v = (vec A, vech P).
  MatrixXd lift() const;
  Index n_cone() const { return G.rows(); }
  /// Degree of the cone: n_nonneg plus the orders of the PSD blocks.
  Index cone_degree() const;
  double cost(const VectorXd& x) const;

  /// Natural variables (A, P) of a canonical point; P = I when fixed.
  std::pair<MatrixXd, MatrixXd> decanonicalize(const VectorXd& x) const;
  /// Canonical point whose lift is closest to (A, P) in least squares; exact
  /// for the plain canonicalization.
  VectorXd canonical_point(const MatrixXd& A, const MatrixXd& P) const;

  /// Plain-text sparse dump (cost, cone sizes, affine triplets).
  std::string dump() const;
};

/// Exact embedding in the natural variables (identity lift).
CanonicalConic canonicalize(const ConicProgram& program);

/// Embedding in coordinates A = B basis^T for a caller-supplied basis (m x r).
CanonicalConic canonicalize(const ConicProgram& program, const MatrixXd& basis);

/// Basis U_r diag(w_r)^{-1/2} from the eigenpairs of K with eigenvalue above
/// jitter * trace(K) / m.
MatrixXd reduced_basis(const MatrixXd& K, double jitter = 1e-10);

/// Embedding in the coordinates A = B diag(w)^{-1/2} U^T, where K = U diag(w) U^T
/// keeps eigenvalues above jitter * trace(K) / m. Then A K_i = B phi_i and
/// tr(A K A^T) = |B|_F^2, which removes the ill-conditioning of K.
CanonicalConic canonicalize_reduced(const ConicProgram& program, double jitter = 1e-10);

/// Dual multipliers in canonical ordering: y for A_eq, z for the cone rows.
struct Duals {
  VectorXd y;
  VectorXd z;
};

struct KKTReport {
  double objective = 0.0;
  double eq_residual = 0.0;      // max |A K_0|
  double ineq_violation = 0.0;   // max(0, max_k z_k^T A K_g(k) + |z_k|^2)
  double lmi_min_eig = 0.0;      // min eig of -(sym(A J) + I)
  double p_min_eig = 0.0;        // min eig of P - I (0 when P is fixed)
  double psd_min_eig = 0.0;      // min of the two above
  std::optional<double> dual_residual;  // relative stationarity residual
  std::optional<double> rel_gap;        // complementarity / max(1, |objective|)

  /// True when every primal block holds within tol.
  bool primal_feasible(double tol) const;
};

/// Residuals of the identification program evaluated directly from (A, P).
/// Duals, if given, must come from a canonicalization of the same program.
KKTReport kkt_report(const ConicProgram& program, const MatrixXd& A, const MatrixXd& P,
                     const std::optional<Duals>& duals = std::nullopt);

/// Checker for the weighted form with general error weight W and coordinate
/// change T: the model is f = T^{-1} A k, the loss is
/// sum_i (y_i - f(x_i))^T W (y_i - f(x_i)) + lambda tr(A K A^T), the grid rows
/// read z^T P T^{-1} A K_g <= -|z|^2 and the LMI reads
/// sym(P T^{-1} A J) <= -I. With W = P^2 and T = P this equals kkt_report.
KKTReport kkt_report_weighted(const ConicProgram& program, const MatrixXd& A, const MatrixXd& P,
                              const MatrixXd& T, const MatrixXd& W);

}  // namespace roaid
