#include "roaid/roa_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <random>
#include <sstream>

#include "roaid/dynamics.hpp"

namespace roaid {

void RegionSpec::validate() const {
  if (dimension < 1) throw std::invalid_argument("region: dimension must be positive");
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw std::invalid_argument("region: radius must be positive");
}

void GridSet::validate(const RegionSpec& region) const {
  for (const auto& z : points) {
    if (z.size() != region.dimension) throw std::invalid_argument("grid: dimension mismatch");
    const double r = z.norm();
    if (!(r > 0.0)) throw std::invalid_argument("grid: points must be nonzero");
    if (r > region.radius * (1.0 + 1e-12)) throw std::invalid_argument("grid: point outside region");
  }
}

AlphaBetaBounds alpha_beta_bounds(double eps, double L1, double L2, double norm_p) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("alpha_beta_bounds: eps must lie in (0, 1)");
  if (!(L1 >= 0.0) || !(L2 >= 0.0))
    throw std::invalid_argument("alpha_beta_bounds: Lipschitz constants must be >= 0");
  if (!(norm_p >= 1.0)) throw std::invalid_argument("alpha_beta_bounds: |P| must be >= 1 (P >= I)");

  const double a = L1 * norm_p;
  // sqrt(q) - 1 with q - 1 = (1 - eps) / (eps + a), written to avoid cancellation.
  const double q_minus_1 = (1.0 - eps) / (eps + a);
  AlphaBetaBounds b;
  b.alpha_max = q_minus_1 / (std::sqrt(1.0 + q_minus_1) + 1.0);
  const double c = L2 * norm_p;
  b.beta_max = c > 0.0 ? (1.0 - eps) / c : std::numeric_limits<double>::infinity();
  return b;
}

GridSet generate_polar_grid(const RegionSpec& region, int n_radial, int n_angular) {
  region.validate();
  if (region.dimension != 2)
    throw std::invalid_argument("polar grids are planar; use greedy_cover_grid for n != 2");
  if (n_radial < 1 || n_angular < 1)
    throw std::invalid_argument("polar grid needs n_radial, n_angular >= 1");
  GridSet grid;
  grid.points.reserve(static_cast<std::size_t>(n_radial) * n_angular);
  for (int j = 1; j <= n_radial; ++j) {
    const double r = region.radius * j / n_radial;
    for (int k = 0; k < n_angular; ++k) {
      const double th = 2.0 * std::numbers::pi * k / n_angular;
      VectorXd z(2);
      z << r * std::cos(th), r * std::sin(th);
      grid.points.push_back(std::move(z));
    }
  }
  return grid;
}

namespace {

// Cubic lattice points of the given spacing inside the cube [-extent, extent]^n.
void for_each_lattice_point(Index n, double spacing, double extent,
                            const std::function<void(const VectorXd&)>& visit) {
  const auto half = static_cast<long long>(std::ceil(extent / spacing));
  std::vector<long long> idx(static_cast<std::size_t>(n), -half);
  VectorXd x(n);
  while (true) {
    for (Index d = 0; d < n; ++d) x(d) = spacing * static_cast<double>(idx[static_cast<std::size_t>(d)]);
    visit(x);
    Index d = 0;
    while (d < n) {
      auto& i = idx[static_cast<std::size_t>(d)];
      if (++i <= half) break;
      i = -half;
      ++d;
    }
    if (d == n) return;
  }
}

constexpr std::size_t kMaxLattice = 4'000'000;

}  // namespace

GridSet greedy_cover_grid(const RegionSpec& region, double alpha, double beta,
                          double oversample_factor) {
  region.validate();
  if (!(alpha > 0.0) || !(beta > 0.0)) throw std::invalid_argument("greedy_cover_grid: alpha, beta must be > 0");
  if (!(oversample_factor >= 1.0)) throw std::invalid_argument("greedy_cover_grid: oversample_factor must be >= 1");

  GridSet grid;
  const double r = region.radius;
  if (beta >= r) return grid;

  const Index n = region.dimension;
  // Covering radius h of the lattice. A lattice point s with |s| >= beta - h
  // can serve as its own center only if h <= alpha (beta - h).
  const double h = alpha * beta / (1.0 + alpha) / (2.0 * oversample_factor);
  const double spacing = 2.0 * h / std::sqrt(static_cast<double>(n));
  const double side_count = std::ceil(r / spacing) * 2.0 + 1.0;
  if (std::pow(side_count, static_cast<double>(n)) > static_cast<double>(kMaxLattice)) {
    std::ostringstream os;
    os << "greedy_cover_grid: lattice too large (alpha=" << alpha << ", beta=" << beta << ")";
    throw std::invalid_argument(os.str());
  }

  // Projection onto the ball is non-expansive, so projected lattice points
  // keep covering radius h for every point of the region.
  std::vector<VectorXd> pts;
  for_each_lattice_point(n, spacing, r + spacing, [&](const VectorXd& x) {
    const double nx = x.norm();
    if (nx > r + h) return;
    VectorXd s = nx > r ? VectorXd(x * (r / nx)) : x;
    pts.push_back(std::move(s));
  });
  // Drop duplicates produced by the projection.
  std::sort(pts.begin(), pts.end(), [](const VectorXd& a, const VectorXd& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const VectorXd& a, const VectorXd& b) { return (a - b).norm() < 1e-14; }),
            pts.end());

  std::vector<std::size_t> targets;  // lattice points that must be covered
  std::vector<std::size_t> cands;    // admissible centers (nonzero)
  std::vector<double> norms(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    norms[i] = pts[i].norm();
    if (norms[i] >= beta - h) targets.push_back(i);
    if (alpha * norms[i] > h) cands.push_back(i);
  }

  std::vector<char> covered(targets.size(), 0);
  std::size_t remaining = targets.size();
  auto covers = [&](std::size_t c, std::size_t t) {
    return (pts[c] - pts[t]).norm() + h <= alpha * norms[c];
  };
  auto gain = [&](std::size_t c) {
    std::size_t g = 0;
    for (std::size_t k = 0; k < targets.size(); ++k)
      if (!covered[k] && covers(c, targets[k])) ++g;
    return g;
  };

  // Lazy greedy: gains only decrease, so a popped entry whose refreshed gain
  // still dominates the next entry is the true maximizer.
  struct Entry {
    std::size_t gain;
    double norm;
    std::size_t cand;
  };
  auto worse = [](const Entry& a, const Entry& b) {
    if (a.gain != b.gain) return a.gain < b.gain;
    if (a.norm != b.norm) return a.norm < b.norm;
    return a.cand > b.cand;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> heap(worse);
  for (std::size_t c : cands) heap.push({gain(c), norms[c], c});

  while (remaining > 0) {
    if (heap.empty()) break;
    Entry top = heap.top();
    heap.pop();
    const std::size_t g = gain(top.cand);
    if (g == 0) continue;
    if (g != top.gain) {
      top.gain = g;
      if (!heap.empty() && worse(top, heap.top())) {
        heap.push(top);
        continue;
      }
    }
    grid.points.push_back(pts[top.cand]);
    for (std::size_t k = 0; k < targets.size(); ++k) {
      if (!covered[k] && covers(top.cand, targets[k])) {
        covered[k] = 1;
        --remaining;
      }
    }
  }
  if (remaining > 0) {
    for (std::size_t k = 0; k < targets.size(); ++k)
      if (!covered[k]) throw CoverError("greedy_cover_grid: candidates exhausted", pts[targets[k]]);
  }
  return grid;
}

std::vector<VectorXd> sample_ball(const RegionSpec& region, std::size_t n_samples,
                                  std::uint64_t seed) {
  region.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double inv_n = 1.0 / static_cast<double>(region.dimension);
  std::vector<VectorXd> out;
  out.reserve(n_samples);
  VectorXd d(region.dimension);
  while (out.size() < n_samples) {
    for (Index i = 0; i < d.size(); ++i) d(i) = normal(rng);
    const double nd = d.norm();
    if (nd == 0.0) continue;
    const double rad = region.radius * std::pow(unif(rng), inv_n);
    out.emplace_back(d * (rad / nd));
  }
  return out;
}

namespace {

// Deterministic unit directions: an even angular lattice in 2-D, seeded
// gaussian directions otherwise.
std::vector<VectorXd> unit_directions(Index n, std::size_t count, std::uint64_t seed) {
  std::vector<VectorXd> dirs;
  dirs.reserve(count);
  if (n == 1) {
    dirs.push_back(VectorXd::Ones(1));
    dirs.push_back(-VectorXd::Ones(1));
    return dirs;
  }
  if (n == 2) {
    for (std::size_t k = 0; k < count; ++k) {
      const double th = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(count);
      VectorXd u(2);
      u << std::cos(th), std::sin(th);
      dirs.push_back(std::move(u));
    }
    return dirs;
  }
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  while (dirs.size() < count) {
    VectorXd u(n);
    for (Index i = 0; i < n; ++i) u(i) = normal(rng);
    if (u.norm() == 0.0) continue;
    dirs.push_back(u.normalized());
  }
  return dirs;
}

}  // namespace

CoverReport verify_cover(const GridSet& grid, double alpha, double beta, const RegionSpec& region,
                         std::size_t n_samples, std::uint64_t seed) {
  region.validate();
  if (n_samples < 1) throw std::invalid_argument("verify_cover: n_samples must be >= 1");
  const Index n = region.dimension;

  std::vector<VectorXd> samples = sample_ball(region, n_samples, seed);
  const auto dirs = unit_directions(n, n == 2 ? 256 : 512, seed);
  for (const auto& u : dirs) samples.emplace_back(u * region.radius);
  // Points just outside each grid ball are where uncovered gaps first appear.
  const auto ball_dirs = unit_directions(n, n == 2 ? 64 : 128, seed + 1);
  for (const auto& z : grid.points) {
    const double rad = alpha * z.norm() * (1.0 + 1e-9);
    for (const auto& u : ball_dirs) {
      VectorXd x = z + rad * u;
      if (region.contains(x)) samples.push_back(std::move(x));
    }
  }

  std::vector<double> radii(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) radii[i] = alpha * grid.points[i].norm();

  CoverReport rep;
  rep.n_samples = samples.size();
  rep.max_gap_ratio = -std::numeric_limits<double>::infinity();
  std::size_t worst = 0;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& x = samples[s];
    double gap = (x.norm() - beta) / beta;
    for (std::size_t i = 0; i < grid.size() && gap > -1.0; ++i) {
      if (radii[i] <= 0.0) continue;
      gap = std::min(gap, ((x - grid.points[i]).norm() - radii[i]) / radii[i]);
    }
    if (gap > rep.max_gap_ratio) {
      rep.max_gap_ratio = gap;
      worst = s;
    }
  }
  rep.covered = rep.max_gap_ratio <= 0.0;
  if (!rep.covered) rep.witness = samples[worst];
  return rep;
}

LipschitzEstimate estimate_lipschitz(const VectorField& field, const RegionSpec& region,
                                     std::size_t n_samples, std::uint64_t seed) {
  region.validate();
  if (field.dimension != region.dimension)
    throw std::invalid_argument("estimate_lipschitz: field/region dimension mismatch");
  const Index n = region.dimension;
  constexpr double kSafety = 1.1;
  constexpr int kPairs = 8;
  constexpr int kRefine = 12;

  // Second derivative tensor as n Hessians, H[k](a, b) = d^2 f_k / dx_a dx_b,
  // by central differences of the Jacobian.
  auto hessians = [&](const VectorXd& x) {
    std::vector<MatrixXd> H(static_cast<std::size_t>(n), MatrixXd::Zero(n, n));
    VectorXd xp = x, xm = x;
    for (Index b = 0; b < n; ++b) {
      const double h = 1e-4 * (1.0 + std::abs(x(b)));
      xp(b) = x(b) + h;
      xm(b) = x(b) - h;
      const MatrixXd dj = (field.jacobian_at(xp) - field.jacobian_at(xm)) / (2.0 * h);
      xp(b) = x(b);
      xm(b) = x(b);
      for (Index k = 0; k < n; ++k) H[static_cast<std::size_t>(k)].col(b) = dj.row(k).transpose();
    }
    for (auto& Hk : H) Hk = sym(Hk);
    return H;
  };

  std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random_unit = [&]() {
    VectorXd u(n);
    do {
      for (Index i = 0; i < n; ++i) u(i) = normal(rng);
    } while (u.norm() == 0.0);
    return VectorXd(u.normalized());
  };

  const auto samples = sample_ball(region, n_samples, seed);
  LipschitzEstimate est;
  for (const auto& x : samples) {
    const MatrixXd jac = field.jacobian_at(x);
    if (!jac.allFinite()) throw std::domain_error("estimate_lipschitz: non-finite Jacobian");
    est.L1 = std::max(est.L1, spectral_norm(jac));

    const auto H = hessians(x);
    for (const auto& Hk : H)
      if (!Hk.allFinite()) throw std::domain_error("estimate_lipschitz: non-finite second derivative");
    auto apply = [&](const VectorXd& h1, const VectorXd& h2) {
      VectorXd v(n);
      for (Index k = 0; k < n; ++k) v(k) = h1.dot(H[static_cast<std::size_t>(k)] * h2);
      return v;
    };
    // Random unit pairs, each refined by alternating power iterations on the
    // contracted matrix sum_k v_k H_k.
    for (int pair = 0; pair < kPairs; ++pair) {
      VectorXd h1 = random_unit();
      VectorXd h2 = random_unit();
      double best = apply(h1, h2).norm();
      for (int it = 0; it < kRefine; ++it) {
        const VectorXd t = apply(h1, h2);
        const double tn = t.norm();
        if (tn == 0.0) break;
        MatrixXd M = MatrixXd::Zero(n, n);
        for (Index k = 0; k < n; ++k) M += (t(k) / tn) * H[static_cast<std::size_t>(k)];
        VectorXd n1 = M * h2;
        if (n1.norm() == 0.0) break;
        h1 = n1.normalized();
        VectorXd n2 = M * h1;
        if (n2.norm() == 0.0) break;
        h2 = n2.normalized();
        best = std::max(best, apply(h1, h2).norm());
      }
      est.L2 = std::max(est.L2, best);
    }
  }
  if (!std::isfinite(est.L1) || !std::isfinite(est.L2))
    throw std::domain_error("estimate_lipschitz: non-finite estimate");
  est.L1 *= kSafety;
  est.L2 *= kSafety;
  return est;
}

}  // namespace roaid
