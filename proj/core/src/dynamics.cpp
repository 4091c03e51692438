#include "roaid/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace roaid {

MatrixXd VectorField::jacobian_at(const VectorXd& x) const {
  if (jacobian) return jacobian(x);
  const Index n = x.size();
  MatrixXd jac(n, n);
  VectorXd xp = x;
  VectorXd xm = x;
  for (Index j = 0; j < n; ++j) {
    const double h = 1e-6 * (1.0 + std::abs(x(j)));
    xp(j) = x(j) + h;
    xm(j) = x(j) - h;
    jac.col(j) = (eval(xp) - eval(xm)) / (2.0 * h);
    xp(j) = x(j);
    xm(j) = x(j);
  }
  return jac;
}

void Trajectory::validate() const {
  if (times.size() != states.size()) throw std::invalid_argument("trajectory: length mismatch");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1]))
      throw std::invalid_argument("trajectory: times must be strictly increasing");
}

void DataSet::validate() const {
  if (x.empty()) throw std::invalid_argument("dataset: no samples");
  if (x.size() != y.size()) throw std::invalid_argument("dataset: x/y length mismatch");
  const Index n = x.front().size();
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j].size() != n || y[j].size() != n)
      throw std::invalid_argument("dataset: inconsistent dimensions");
    if (!x[j].allFinite() || !y[j].allFinite())
      throw std::invalid_argument("dataset: non-finite entry");
  }
}

DataSet DataSet::subset(const std::vector<std::size_t>& indices) const {
  DataSet out;
  out.provenance = provenance;
  out.provenance.trajectory_of_sample.clear();
  for (std::size_t idx : indices) {
    out.x.push_back(x.at(idx));
    out.y.push_back(y.at(idx));
    if (idx < provenance.trajectory_of_sample.size())
      out.provenance.trajectory_of_sample.push_back(provenance.trajectory_of_sample[idx]);
  }
  return out;
}

namespace {

VectorField make_example(double coupling_sign, std::string name) {
  VectorField f;
  f.dimension = 2;
  f.name = std::move(name);
  const double c = 5.0 * coupling_sign;
  f.eval = [c](const VectorXd& x) {
    const double x1 = x(0);
    const double x2 = x(1);
    VectorXd dx(2);
    dx(0) = c * x2 - 4.0 * x1 + x1 * x2 * x2 - 6.0 * x1 * x1 * x1;
    dx(1) = -20.0 * x1 - 4.0 * x2 + 4.0 * x1 * x1 * x2 + x2 * x2 * x2;
    return dx;
  };
  f.jacobian = [c](const VectorXd& x) {
    const double x1 = x(0);
    const double x2 = x(1);
    MatrixXd jac(2, 2);
    jac(0, 0) = -4.0 + x2 * x2 - 18.0 * x1 * x1;
    jac(0, 1) = c + 2.0 * x1 * x2;
    jac(1, 0) = -20.0 + 8.0 * x1 * x2;
    jac(1, 1) = -4.0 + 4.0 * x1 * x1 + 3.0 * x2 * x2;
    return jac;
  };
  return f;
}

}  // namespace

VectorField example_system() { return make_example(+1.0, "eq27"); }

VectorField example_system_saddle_variant() { return make_example(-1.0, "eq27-saddle"); }

VectorField linear_system(const MatrixXd& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("linear_system: matrix must be square");
  VectorField f;
  f.dimension = m.rows();
  f.name = "linear";
  f.eval = [m](const VectorXd& x) -> VectorXd { return m * x; };
  f.jacobian = [m](const VectorXd&) -> MatrixXd { return m; };
  return f;
}

VectorField system_by_name(const std::string& name) {
  if (name == "eq27") return example_system();
  if (name == "eq27-saddle") return example_system_saddle_variant();
  throw std::invalid_argument("unknown system '" + name + "' (expected eq27 or eq27-saddle)");
}

namespace {

VectorXd rk4_step(const VectorField& f, const VectorXd& x, double h) {
  const VectorXd k1 = f(x);
  const VectorXd k2 = f(x + 0.5 * h * k1);
  const VectorXd k3 = f(x + 0.5 * h * k2);
  const VectorXd k4 = f(x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

Trajectory integrate(const VectorField& field, const VectorXd& x0, double t_end, double dt,
                     const IntegrateOptions& options) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be positive");
  if (!(t_end > 0.0)) throw std::invalid_argument("integrate: t_end must be positive");
  if (x0.size() != field.dimension) throw std::invalid_argument("integrate: x0 dimension mismatch");

  // Number of steps; a ratio within round-off of an integer is not rounded up.
  const double ratio = t_end / dt;
  auto steps = static_cast<long long>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio))
    steps = static_cast<long long>(std::ceil(ratio));
  steps = std::max<long long>(steps, 1);

  Trajectory traj;
  traj.times.reserve(static_cast<std::size_t>(steps) + 1);
  traj.states.reserve(static_cast<std::size_t>(steps) + 1);
  traj.times.push_back(0.0);
  traj.states.push_back(x0);

  VectorXd x = x0;
  for (long long k = 1; k <= steps; ++k) {
    const double t_prev = traj.times.back();
    const double t_next = (k == steps) ? t_end : static_cast<double>(k) * dt;
    x = rk4_step(field, x, t_next - t_prev);
    if (!x.allFinite() || x.norm() > options.blowup_norm) {
      traj.diverged = true;
      break;
    }
    traj.times.push_back(t_next);
    traj.states.push_back(x);
  }
  return traj;
}

DataSet sample_dataset(const VectorField& field, const std::vector<VectorXd>& inits,
                       int n_per_traj, double t_end, double noise_var, std::uint64_t seed,
                       const SampleOptions& options) {
  if (inits.empty()) throw std::invalid_argument("sample_dataset: no initial points");
  if (n_per_traj < 2) throw std::invalid_argument("sample_dataset: need at least 2 samples per trajectory");
  if (!(noise_var >= 0.0)) throw std::invalid_argument("sample_dataset: noise variance must be >= 0");
  if (!(t_end > 0.0)) throw std::invalid_argument("sample_dataset: t_end must be positive");

  DataSet data;
  data.provenance.seed = seed;
  data.provenance.noise_var = noise_var;
  data.provenance.t_end = t_end;
  data.provenance.system = field.name;
  data.provenance.initial_points = inits;

  const double spacing = t_end / static_cast<double>(n_per_traj - 1);
  const double noise_sd = std::sqrt(noise_var);
  const auto seed_lo = static_cast<std::uint32_t>(seed & 0xffffffffu);
  const auto seed_hi = static_cast<std::uint32_t>(seed >> 32);

  for (std::size_t ti = 0; ti < inits.size(); ++ti) {
    VectorXd x = inits[ti];
    if (x.size() != field.dimension)
      throw std::invalid_argument("sample_dataset: initial point dimension mismatch");
    for (int k = 0; k < n_per_traj; ++k) {
      if (k > 0) {
        const Trajectory seg = integrate(field, x, spacing, options.dt);
        if (seg.diverged) {
          std::ostringstream os;
          os << "trajectory " << ti << " diverged before t = " << spacing * k;
          throw DivergenceError(os.str());
        }
        x = seg.states.back();
      }
      VectorXd y = field(x);
      if (noise_sd > 0.0) {
        std::seed_seq seq{seed_lo, seed_hi, static_cast<std::uint32_t>(ti),
                          static_cast<std::uint32_t>(k)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> noise(0.0, noise_sd);
        for (Index c = 0; c < y.size(); ++c) y(c) += noise(rng);
      }
      data.x.push_back(x);
      data.y.push_back(std::move(y));
      data.provenance.trajectory_of_sample.push_back(ti);
    }
  }
  return data;
}

std::vector<VectorXd> estimate_derivatives(const Trajectory& trajectory) {
  trajectory.validate();
  const std::size_t K = trajectory.size();
  if (K < 3) throw std::invalid_argument("estimate_derivatives: need at least 3 samples");
  const auto& t = trajectory.times;
  const auto& x = trajectory.states;

  // Derivative at t[at] of the quadratic interpolating samples a, b, c.
  auto three_point = [&](std::size_t a, std::size_t b, std::size_t c, std::size_t at) {
    const double ta = t[a], tb = t[b], tc = t[c], s = t[at];
    const double wa = ((s - tb) + (s - tc)) / ((ta - tb) * (ta - tc));
    const double wb = ((s - ta) + (s - tc)) / ((tb - ta) * (tb - tc));
    const double wc = ((s - ta) + (s - tb)) / ((tc - ta) * (tc - tb));
    return VectorXd(wa * x[a] + wb * x[b] + wc * x[c]);
  };

  std::vector<VectorXd> d(K);
  d[0] = three_point(0, 1, 2, 0);
  for (std::size_t k = 1; k + 1 < K; ++k)
    d[k] = (x[k + 1] - x[k - 1]) / (t[k + 1] - t[k - 1]);
  d[K - 1] = three_point(K - 3, K - 2, K - 1, K - 1);
  return d;
}

}  // namespace roaid
