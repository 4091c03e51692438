#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "roaid/linalg.hpp"

namespace roaid {

/// Autonomous vector field x' = f(x) with an optional analytic Jacobian.
struct VectorField {
  using Evaluator = std::function<VectorXd(const VectorXd&)>;
  using JacobianFn = std::function<MatrixXd(const VectorXd&)>;

  Index dimension = 0;
  Evaluator eval;
  JacobianFn jacobian;  // may be empty
  std::string name;

  VectorXd operator()(const VectorXd& x) const { return eval(x); }
  bool has_jacobian() const { return static_cast<bool>(jacobian); }
  /// Analytic Jacobian when available, central differences otherwise.
  MatrixXd jacobian_at(const VectorXd& x) const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<VectorXd> states;
  bool diverged = false;  // integration stopped early on a non-finite or exploding state

  std::size_t size() const { return times.size(); }
  const VectorXd& initial() const { return states.front(); }
  /// Throws std::invalid_argument if the lengths differ or times are not strictly increasing.
  void validate() const;
};

struct DataSetProvenance {
  std::uint64_t seed = 0;
  double noise_var = 0.0;
  double t_end = 0.0;
  std::string system;
  std::vector<VectorXd> initial_points;
  std::vector<std::size_t> trajectory_of_sample;  // which initial point produced sample j
};

/// Pairs (x_j, y_j) with y_j an estimate of f(x_j).
struct DataSet {
  std::vector<VectorXd> x;
  std::vector<VectorXd> y;
  DataSetProvenance provenance;

  std::size_t size() const { return x.size(); }
  Index dimension() const { return x.empty() ? 0 : x.front().size(); }
  void validate() const;
  DataSet subset(const std::vector<std::size_t>& indices) const;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two-dimensional benchmark system
///   x1' =  5 x2 - 4 x1 + x1 x2^2 - 6 x1^3
///   x2' = -20 x1 - 4 x2 + 4 x1^2 x2 + x2^3
/// whose origin is a stable focus attracting B(0, 1.5).
VectorField example_system();

/// The same system with the opposite sign on the 5 x2 term. Its origin is a
/// saddle; kept for reference and regression of the sign choice.
VectorField example_system_saddle_variant();

/// f(x) = M x.
VectorField linear_system(const MatrixXd& m);

/// Looks up "eq27", "eq27-saddle" by name. Throws std::invalid_argument.
VectorField system_by_name(const std::string& name);

struct IntegrateOptions {
  /// States with norm above this are treated as divergence.
  double blowup_norm = 1e8;
};

/// Fixed-step classical RK4 from t = 0 to t_end, recording every step. The
/// final step is shortened to land exactly on t_end. On divergence the
/// trajectory is truncated at the last finite state and flagged.
Trajectory integrate(const VectorField& field, const VectorXd& x0, double t_end, double dt,
                     const IntegrateOptions& options = {});

struct SampleOptions {
  /// Integration step; sample times must be multiples of it.
  double dt = 1e-3;
};

/// Integrates each initial point to t_end and takes n_per_traj samples at
/// uniform spacing t_k = k t_end / (n_per_traj - 1). Targets are
/// y_j = f(x_j) + N(0, noise_var I), deterministic in (seed, trajectory, sample).
/// Throws DivergenceError if a trajectory diverges before t_end.
DataSet sample_dataset(const VectorField& field, const std::vector<VectorXd>& inits,
                       int n_per_traj, double t_end, double noise_var, std::uint64_t seed,
                       const SampleOptions& options = {});

/// Time derivatives along a sampled trajectory: central differences inside,
/// second-order one-sided differences at the endpoints.
std::vector<VectorXd> estimate_derivatives(const Trajectory& trajectory);

}  // namespace roaid
