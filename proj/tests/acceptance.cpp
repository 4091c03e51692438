#include <algorithm>
#include <chrono>
#include <cstdio>
#include <limits>
#include <random>
#include <string>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <roaid/estimator.hpp>

#include "cli.hpp"
#include "test_support.hpp"

using namespace roaid;
using boost::multiprecision::cpp_bin_float_50;
using roaid::testing::random_vector;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
int failures = 0;

void report(int id, bool pass, const std::string& what) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

template <class... T>
std::string fmt(const char* f, T... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

VectorXd v2(double a, double b) { return (VectorXd(2) << a, b).finished(); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

const RegionSpec kRegion{2, 1.5};

struct Pipeline {
  std::vector<VectorFieldModel> constrained;
  std::vector<double> r2_constrained;
  std::vector<double> r2_ablation;
  double seconds = 0.0;
};

Pipeline run_pipeline() {
  const auto t0 = std::chrono::steady_clock::now();
  const VectorField f = example_system();
  const GridSet grid = generate_polar_grid(kRegion, 15, 20);
  std::vector<KernelSpec> kernels;
  for (double s : cli::default_sigma_grid()) kernels.push_back(KernelSpec::gaussian(s));
  const std::vector<double> lambdas = cli::default_lambda_grid();

  Pipeline p;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DataSet data = sample_dataset(f, {v2(1, -1), v2(-1, -1)}, 19, 10.0, 1e-3, seed);
    CvOptions o;
    o.seed = seed;
    const CvResult cc = cross_validate(data, kRegion, grid, kernels, lambdas, FitConfig{}, o);
    const CvResult ca = cross_validate(data, kRegion, grid, kernels, lambdas, FitConfig::ablation(1e-3), o);
    FitConfig c;
    c.lambda = cc.lambda;
    VectorFieldModel mc = fit(data, kRegion, grid, cc.kernel, c);
    const VectorFieldModel ma = fit(data, kRegion, grid, ca.kernel, FitConfig::ablation(ca.lambda));
    p.r2_constrained.push_back(r_squared(mc, f, EvalBox::unit(2), 51));
    p.r2_ablation.push_back(r_squared(ma, f, EvalBox::unit(2), 51));
    std::printf("  seed %llu: constrained %s lambda %.0e R2 %.4f | ablation %s lambda %.0e R2 %.4f\n",
                static_cast<unsigned long long>(seed), cc.kernel.describe().c_str(), cc.lambda,
                p.r2_constrained.back(), ca.kernel.describe().c_str(), ca.lambda, p.r2_ablation.back());
    std::fflush(stdout);
    p.constrained.push_back(std::move(mc));
  }
  p.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return p;
}

void criterion_1(const Pipeline& p) {
  const double mc = median(p.r2_constrained), ma = median(p.r2_ablation);
  report(1, mc >= 0.88 && ma <= mc - 0.05 && p.seconds <= 300.0,
         fmt("median R2 constrained %.4f (>= 0.88), ablation %.4f (<= %.4f), runtime %.1f s (<= 300 s)", mc, ma,
             mc - 0.05, p.seconds));
}

void criterion_2(const Pipeline& p) {
  double worst_grid = -kInf, worst_lmi = -kInf, worst_eq = 0.0, min_p = kInf;
  std::size_t n_grid = 0;
  for (const auto& m : p.constrained) {
    const GramAssembly g = assemble_gram(m.kernel, m.centers);
    for (Index k = 0; k < m.centers.n_g(); ++k, ++n_grid) {
      const Index i = m.centers.grid_index(k);
      const VectorXd z = m.centers.point(i);
      worst_grid = std::max(worst_grid, z.dot(m.A * g.K.col(i)) + z.squaredNorm());
    }
    const MatrixXd AJ = m.A * g.J;
    worst_lmi = std::max(worst_lmi, max_eigenvalue(0.5 * (AJ + AJ.transpose())));
    worst_eq = std::max(worst_eq, (m.A * g.K.col(0)).cwiseAbs().maxCoeff());
    min_p = std::min(min_p, min_eigenvalue(m.P));
  }
  report(2, n_grid == 3000 && worst_grid <= 1e-6 && worst_lmi <= -1.0 + 1e-6 && worst_eq <= 1e-6 && min_p >= 1.0 - 1e-8,
         fmt("10 fits, %zu grid rows: max z^T g(z) + |z|^2 %.2e, max eig sym(AJ) %.9f, |A K0|_inf %.2e, min eig P %.9f",
             n_grid, worst_grid, worst_lmi, worst_eq, min_p));
}

void criterion_3(const Pipeline& p) {
  const CertificateReport r = certify_decay(p.constrained.front(), kRegion, 10000, 0);
  report(3, r.n_samples == 10000 && r.negative_fraction == 1.0 && r.epsilon > 0.0,
         fmt("negative fraction %.6f, eps' %.4e", r.negative_fraction, r.epsilon));
}

void criterion_4(const Pipeline& p) {
  const EvalReport r =
      rollout_compare(as_vector_field(p.constrained.front()), example_system(), {v2(-1, 1), v2(-1.45, 0)}, 10.0, 1e-2);
  bool ok = true;
  std::string detail;
  for (const auto& x : r.rollouts) {
    ok = ok && !x.model_diverged && !x.truth_diverged && x.model_final_norm <= 0.05 && x.truth_final_norm <= 0.05;
    detail += fmt("from (%.2f, %.2f): model |x(10)| %.2e, truth |x(10)| %.2e; ", x.init(0), x.init(1),
                  x.model_final_norm, x.truth_final_norm);
  }
  report(4, ok, detail);
}

double fd_first(const KernelSpec& k, Index j, VectorXd x, const VectorXd& y, double h) {
  const double s = h * (1.0 + x.norm());
  x(j) += s;
  const double fp = kernel_eval(k, x, y);
  x(j) -= 2 * s;
  return (fp - kernel_eval(k, x, y)) / (2 * s);
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

void criterion_5() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> us(0.4, 2.5), uc(0.0, 2.0);
  std::uniform_int_distribution<int> ud(1, 4);
  double w1 = 0.0, w2 = 0.0;
  for (auto fam : {KernelFamily::gaussian, KernelFamily::polynomial}) {
    for (int t = 0; t < 100; ++t) {
      const KernelSpec k = fam == KernelFamily::gaussian ? KernelSpec::gaussian(us(rng))
                                                         : KernelSpec::polynomial(ud(rng), uc(rng));
      const VectorXd x = random_vector(rng, 2, -1.5, 1.5), y = random_vector(rng, 2, -1.5, 1.5);
      for (Index j = 0; j < 2; ++j) {
        w1 = std::max(w1, roaid::testing::rel_err(kernel_grad_first(k, j, x, y), fd_first(k, j, x, y, 1e-5)));
        for (Index i = 0; i < 2; ++i)
          w2 = std::max(w2, roaid::testing::rel_err(kernel_mixed_second(k, i, j, x, y), fd_mixed(k, i, j, x, y, 1e-4)));
      }
    }
  }
  report(5, w1 <= 1e-6 && w2 <= 1e-5,
         fmt("200 pairs, worst first-derivative error %.2e (<= 1e-6), mixed-second %.2e (<= 1e-5)", w1, w2));
}

void criterion_6() {
  const DataSet data = sample_dataset(example_system(), {v2(1, -1), v2(-1, -1)}, 19, 10.0, 1e-3, 0);
  const Centers c(2, data.x, generate_polar_grid(kRegion, 15, 20).points);
  double worst_eig = kInf, worst_col = 0.0;
  for (const auto& k : {KernelSpec::gaussian(0.5), KernelSpec::gaussian(2.0), KernelSpec::polynomial(3, 1.0)}) {
    const GramAssembly g = assemble_gram(k, c);
    worst_eig = std::min(worst_eig, min_eigenvalue(g.K) / (g.K.trace() / static_cast<double>(g.m())));
    for (Index i = 0; i <= c.p(); ++i)
      worst_col = std::max(worst_col, (assemble_feature_vector(k, c, c.point(i)) - g.K.col(i)).cwiseAbs().maxCoeff());
  }
  report(6, worst_eig >= -1e-8 && worst_col <= 1e-12,
         fmt("m = %ld, min eig(K) / (tr K / m) %.2e (>= -1e-8), feature vs column %.2e (<= 1e-12)",
             static_cast<long>(c.m()), worst_eig, worst_col));
}

void criterion_7() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ue(0.01, 0.99), ul(0.0, 20.0), up(1.0, 10.0);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const double eps = ue(rng), L1 = ul(rng), L2 = ul(rng), np = up(rng);
    const AlphaBetaBounds got = alpha_beta_bounds(eps, L1, L2, np);
    const cpp_bin_float_50 e(eps), l1(L1), l2(L2), p(np);
    const double a = static_cast<double>(sqrt((1 + l1 * p) / (e + l1 * p)) - 1);
    worst = std::max(worst, std::abs(got.alpha_max - a) / a);
    if (L2 > 0) {
      const double b = static_cast<double>((1 - e) / (l2 * p));
      worst = std::max(worst, std::abs(got.beta_max - b) / b);
    }
  }
  bool mono = true;
  for (double eps = 0.05; eps < 0.95; eps += 0.05) {
    mono = mono && alpha_beta_bounds(eps + 0.05, 2.0, 1.0, 1.5).alpha_max < alpha_beta_bounds(eps, 2.0, 1.0, 1.5).alpha_max;
    mono = mono && alpha_beta_bounds(eps + 0.05, 2.0, 1.0, 1.5).beta_max < alpha_beta_bounds(eps, 2.0, 1.0, 1.5).beta_max;
  }
  for (double L = 0.5; L < 10.0; L += 0.5) {
    mono = mono && alpha_beta_bounds(0.3, L + 0.5, 1.0, 1.5).alpha_max < alpha_beta_bounds(0.3, L, 1.0, 1.5).alpha_max;
    mono = mono && alpha_beta_bounds(0.3, 1.0, L + 0.5, 1.5).beta_max < alpha_beta_bounds(0.3, 1.0, L, 1.5).beta_max;
    mono = mono && alpha_beta_bounds(0.3, 1.0, 1.0, L + 1.5).alpha_max < alpha_beta_bounds(0.3, 1.0, 1.0, L + 1.0).alpha_max;
  }
  report(7, worst <= 1e-12 && mono,
         fmt("1000 tuples, worst relative error %.2e (<= 1e-12), monotone sweeps %s", worst, mono ? "yes" : "no"));
}

void criterion_8() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ua(0.2, 0.6), ub(0.2, 0.8), ur(0.5, 2.0);
  int passed = 0;
  std::size_t largest = 0;
  for (int t = 0; t < 20; ++t) {
    const double alpha = ua(rng), r = ur(rng), beta = ub(rng) * r;
    const RegionSpec region{2, r};
    const GridSet g = greedy_cover_grid(region, alpha, beta);
    largest = std::max(largest, g.size());
    if (verify_cover(g, alpha, beta, region, 100000, static_cast<std::uint64_t>(t)).covered) ++passed;
  }
  const CoverReport bad = verify_cover(GridSet{{v2(1, 0)}}, 0.1, 0.1, {2, 1.0}, 100000, 0);
  report(8, passed == 20 && !bad.covered && bad.witness.has_value(),
         fmt("%d/20 greedy grids verified with 1e5 samples (largest %zu points); planted counterexample %s",
             passed, largest, !bad.covered && bad.witness ? "rejected with witness" : "NOT rejected"));
}

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

double residual(const Solution& s) { return std::max({s.primal_residual, s.dual_residual, s.rel_gap}); }

void criterion_9() {
  CanonicalConic trace = empty_problem(3);
  trace.q = svec(MatrixXd::Identity(2, 2));
  trace.G = -MatrixXd::Identity(3, 3);
  trace.h = -svec(MatrixXd::Identity(2, 2));
  trace.psd = {{2, ConeRole::generic}};
  const Solution st = solve(trace);
  const double e_trace = (smat(st.x, 2) - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff();

  CanonicalConic clip = empty_problem(2);
  clip.Q = 2 * MatrixXd::Identity(2, 2);
  clip.q = v2(-6, -8);
  clip.c0 = 25;
  clip.G = (MatrixXd(3, 2) << -1, 0, 0, -1, 0, 1).finished();
  clip.h = (VectorXd(3) << 0, 0, 1).finished();
  clip.n_nonneg = 3;
  const Solution sc = solve(clip);
  const double e_clip = std::max((sc.x - v2(3, 1)).cwiseAbs().maxCoeff(), std::abs(sc.objective - 9.0));

  CanonicalConic pin = empty_problem(1);
  pin.Q = MatrixXd::Constant(1, 1, 2.0);
  pin.A_eq = MatrixXd::Ones(1, 1);
  pin.b_eq = VectorXd::Constant(1, 5.0);
  const Solution sp = solve(pin);
  const double e_pin = std::abs(sp.objective - 25.0);

  const bool analytic = st.ok() && sc.ok() && sp.ok() && residual(st) <= 1e-7 && residual(sc) <= 1e-7 &&
                        residual(sp) <= 1e-7 && e_trace <= 1e-6 && e_clip <= 1e-6 && e_pin <= 1e-7;

  // Objective dominance over feasible perturbations of the clipped projection.
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 0.1);
  int dominated = 0, tried = 0;
  for (int t = 0; t < 1000 && tried < 200; ++t) {
    const VectorXd x = sc.x + v2(g(rng), g(rng));
    if (x(0) < 0 || x(1) < 0 || x(1) > 1) continue;
    ++tried;
    const double obj = (x - v2(3, 4)).squaredNorm();
    if (obj >= sc.objective - 1e-7) ++dominated;
  }
  report(9, analytic && tried == 200 && dominated == tried,
         fmt("residuals %.1e / %.1e / %.1e, |P - I| %.1e, clipped error %.1e, pinned error %.1e, dominance %d/%d",
             residual(st), residual(sc), residual(sp), e_trace, e_clip, e_pin, dominated, tried));
}

void criterion_10() {
  const VectorField decay = linear_system(-MatrixXd::Identity(1, 1));
  const VectorXd x0 = VectorXd::Ones(1);
  auto err = [&](double dt) { return std::abs(integrate(decay, x0, 1.0, dt).states.back()(0) - std::exp(-1.0)); };
  double worst_ratio = kInf;
  for (double dt : {0.1, 0.05, 0.025}) worst_ratio = std::min(worst_ratio, err(dt) / err(dt / 2));
  const double terminal = err(1e-3);
  report(10, worst_ratio >= 14.0 && terminal <= 1e-9,
         fmt("worst error reduction per halving %.2f (>= 14), terminal error at dt = 1e-3 %.2e (<= 1e-9)", worst_ratio,
             terminal));
}

}  // namespace

int main() {
  const Pipeline p = run_pipeline();
  criterion_1(p);
  criterion_2(p);
  criterion_3(p);
  criterion_4(p);
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
