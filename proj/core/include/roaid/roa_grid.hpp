#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "roaid/linalg.hpp"

namespace roaid {

struct VectorField;

/// Closed ball of the given radius centred at the origin.
struct RegionSpec {
  Index dimension = 2;
  double radius = 1.0;

  void validate() const;
  bool contains(const Eigen::Ref<const VectorXd>& x) const { return x.norm() <= radius; }
};

/// Finite set of nonzero points inside the region.
struct GridSet {
  std::vector<VectorXd> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  /// Throws std::invalid_argument if a point is zero or lies outside `region`.
  void validate(const RegionSpec& region) const;
};

struct CoverReport {
  bool covered = false;
  std::optional<VectorXd> witness;  // worst-covered sample; set whenever covered == false
  std::size_t n_samples = 0;
  /// Worst normalized gap over all samples: for a sample x this is the
  /// smallest over admissible balls of (|x - c| - radius) / radius. A value
  /// <= 0 means every sample is covered, with |value| as the relative margin.
  double max_gap_ratio = 0.0;
};

struct AlphaBetaBounds {
  double alpha_max = 0.0;
  double beta_max = 0.0;  // +inf when L2 * |P| == 0
};

struct LipschitzEstimate {
  double L1 = 0.0;
  double L2 = 0.0;
};

/// Raised by greedy_cover_grid when a point of the region cannot be covered.
class CoverError : public std::runtime_error {
 public:
  CoverError(const std::string& what, VectorXd witness)
      : std::runtime_error(what), witness_(std::move(witness)) {}
  const VectorXd& witness() const { return witness_; }

 private:
  VectorXd witness_;
};

/// Largest admissible (alpha, beta) for a given decay rate eps in (0, 1):
///   alpha_max = sqrt((1 + L1 |P|) / (eps + L1 |P|)) - 1
///   beta_max  = (1 - eps) / (L2 |P|)
AlphaBetaBounds alpha_beta_bounds(double eps, double L1, double L2, double norm_p);

/// Planar polar grid: radii r*j/n_radial (j = 1..n_radial) times angles
/// 2*pi*k/n_angular (k = 0..n_angular-1). Requires a 2-D region.
GridSet generate_polar_grid(const RegionSpec& region, int n_radial, int n_angular);

/// Greedy (alpha, beta)-grid constructor. The region is discretized by a
/// projected cubic lattice of covering radius h; every lattice point outside
/// B(0, beta - h) is covered by a ball B(z, alpha |z| - h), which makes the
/// cover valid for the whole region, not just for the lattice. Larger
/// oversample_factor gives a finer lattice.
GridSet greedy_cover_grid(const RegionSpec& region, double alpha, double beta,
                          double oversample_factor = 2.0);

/// Sampling-based check of the (alpha, beta)-grid property. Uses n_samples
/// uniform points in the region plus deterministic points on the region
/// boundary and just outside every grid ball. Balls are treated as closed.
CoverReport verify_cover(const GridSet& grid, double alpha, double beta, const RegionSpec& region,
                         std::size_t n_samples, std::uint64_t seed);

/// Sampled Lipschitz constants of a field on the region, inflated by 1.1:
///   L1 ~ sup |Df(x)|,  L2 ~ sup_{|h1|,|h2| <= 1} |D^2 f(x)(h1, h2)|.
LipschitzEstimate estimate_lipschitz(const VectorField& field, const RegionSpec& region,
                                     std::size_t n_samples, std::uint64_t seed);

/// Deterministic uniform samples from the closed ball.
std::vector<VectorXd> sample_ball(const RegionSpec& region, std::size_t n_samples,
                                  std::uint64_t seed);

}  // namespace roaid
