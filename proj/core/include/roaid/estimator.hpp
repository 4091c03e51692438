#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "roaid/dynamics.hpp"
#include "roaid/kernels.hpp"
#include "roaid/program.hpp"
#include "roaid/roa_grid.hpp"
#include "roaid/solver.hpp"

namespace roaid {

struct FitDiagnostics {
  SolveStatus status = SolveStatus::numerical_failure;
  int iterations = 0;
  double solve_seconds = 0.0;
  Index reduced_rank = 0;  // number of Gram eigen-directions kept
  KKTReport kkt;
};

/// Fitted field f(x) = P^{-1} A k(x) with Lyapunov matrix P.
struct VectorFieldModel {
  KernelSpec kernel;
  Centers centers;
  MatrixXd A;  // n x m
  MatrixXd P;  // n x n, P >= I
  double lambda = 0.0;
  bool roa_constrained = true;
  FitDiagnostics diagnostics;

  Index dimension() const { return centers.dimension(); }
  /// g(x) = A k(x) = P f(x).
  VectorXd g(const VectorXd& x) const;
};

/// Raised by fit when the solver does not reach an optimal point.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, FitDiagnostics diagnostics)
      : std::runtime_error(what), diagnostics_(std::move(diagnostics)) {}
  const FitDiagnostics& diagnostics() const { return diagnostics_; }

 private:
  FitDiagnostics diagnostics_;
};

/// Builds centers (0, data, grid), the Gram matrix and the program, solves it
/// and returns the model. Grid points are used only when the config includes
/// the grid constraints. Throws FitError on solver failure.
VectorFieldModel fit(const DataSet& data, const RegionSpec& region, const GridSet& grid,
                     const KernelSpec& kernel, const FitConfig& config);

/// P^{-1} A k(x).
VectorXd predict(const VectorFieldModel& model, const VectorXd& x);

/// P^{-1} A Dk(x).
MatrixXd model_jacobian(const VectorFieldModel& model, const VectorXd& x);

/// P^{-1} A J.
MatrixXd jacobian_at_origin(const VectorFieldModel& model);

/// The model as a VectorField with analytic Jacobian.
VectorField as_vector_field(const VectorFieldModel& model);

struct CertificateReport {
  std::size_t n_samples = 0;
  double negative_fraction = 0.0;  // share of samples with x^T P f(x) < 0
  double epsilon = 0.0;            // largest eps' with x^T P f(x) <= -eps' |x|^2 on all samples
  VectorXd witness;                // sample maximizing x^T P f(x) / |x|^2
  double worst_ratio = 0.0;        // that maximum
};

/// Samples the region uniformly and checks the decay condition of V = x^T P x / 2.
CertificateReport certify_decay(const VectorFieldModel& model, const RegionSpec& region,
                                std::size_t n_samples, std::uint64_t seed);
CertificateReport certify_decay(const VectorField& field, const MatrixXd& P, const RegionSpec& region,
                                std::size_t n_samples, std::uint64_t seed);

/// Axis-aligned box [lo, hi].
struct EvalBox {
  VectorXd lo;
  VectorXd hi;
  /// [-1, 1]^n.
  static EvalBox unit(Index n);
};

/// Values of a fitted and a reference field on a uniform res^n lattice.
struct LatticeEvaluation {
  std::vector<VectorXd> points;
  std::vector<VectorXd> truth;
  std::vector<VectorXd> fitted;
};

LatticeEvaluation evaluate_lattice(const VectorField& fitted, const VectorField& truth, const EvalBox& box,
                                   int res);

/// Pooled coefficient of determination 1 - sum|f - fhat|^2 / sum|f - fbar|^2 on
/// the lattice. Throws std::domain_error when the truth has zero variance.
double r_squared(const LatticeEvaluation& lattice);
double r_squared(const VectorField& fitted, const VectorField& truth, const EvalBox& box, int res);
double r_squared(const VectorFieldModel& model, const VectorField& truth, const EvalBox& box, int res);

/// Per-component root-mean-square error on the lattice.
VectorXd lattice_rmse(const LatticeEvaluation& lattice);

struct RolloutResult {
  VectorXd init;
  double max_deviation = 0.0;    // sup-norm distance over the common time span
  double truth_final_norm = 0.0;
  double model_final_norm = 0.0;
  bool truth_diverged = false;
  bool model_diverged = false;
};

struct EvalReport {
  std::optional<double> r2;
  VectorXd rmse;
  std::vector<RolloutResult> rollouts;
};

/// Integrates both fields from each initial point and compares trajectories.
EvalReport rollout_compare(const VectorField& model, const VectorField& truth,
                           const std::vector<VectorXd>& inits, double t_end, double dt);

struct CvCell {
  KernelSpec kernel;
  double lambda = 0.0;
  double score = 0.0;  // summed validation error; +inf when a fold failed
  int failed_folds = 0;
};

struct CvResult {
  KernelSpec kernel;
  double lambda = 0.0;
  std::vector<CvCell> table;  // kernel-major, lambda-minor
  std::size_t best_index = 0;
};

struct CvOptions {
  int k_folds = 5;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0 selects the hardware concurrency
};

/// Fold assignment of n samples: a seeded permutation dealt round-robin.
std::vector<int> fold_assignment(std::size_t n, int k_folds, std::uint64_t seed);

/// k-fold cross-validation over kernel and lambda grids. Grid constraints (if
/// enabled in base) are used in every fold. Ties go to the larger lambda and
/// then to the larger sigma. Results do not depend on the thread count.
CvResult cross_validate(const DataSet& data, const RegionSpec& region, const GridSet& grid,
                        const std::vector<KernelSpec>& kernels, const std::vector<double>& lambdas,
                        const FitConfig& base, const CvOptions& options);

}  // namespace roaid
