#include "roaid/estimator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <thread>

namespace roaid {

namespace {

struct Prepared {
  Centers centers;
  GramAssembly gram;
  MatrixXd basis;
};

Prepared prepare(const DataSet& data, const GridSet& grid, const KernelSpec& kernel, bool with_grid) {
  Prepared p;
  p.centers = Centers(data.dimension(), data.x, with_grid ? grid.points : std::vector<VectorXd>{});
  p.gram = assemble_gram(kernel, p.centers);
  p.basis = reduced_basis(p.gram.K);
  return p;
}

VectorFieldModel solve_prepared(const Prepared& prep, const DataSet& data, const KernelSpec& kernel,
                                const FitConfig& config) {
  const ConicProgram program = assemble_program(prep.gram, data, prep.centers, config);
  const CanonicalConic canonical = canonicalize(program, prep.basis);
  SolverOptions opt;
  opt.feas_tol = config.feas_tol;
  opt.gap_tol = config.gap_tol;
  opt.max_iter = config.max_iter;
  opt.verbose = config.verbose;
  const Solution sol = solve(canonical, opt);

  FitDiagnostics diag;
  diag.status = sol.status;
  diag.iterations = sol.iterations;
  diag.solve_seconds = sol.solve_seconds;
  diag.reduced_rank = prep.basis.cols();
  if (!sol.ok()) {
    diag.kkt = kkt_report(program, sol.A, sol.P);
    throw FitError("fit: solver returned " + to_string(sol.status) + " (" + sol.message + ")", diag);
  }

  VectorFieldModel model;
  model.kernel = kernel;
  model.centers = prep.centers;
  model.A = sol.A;
  model.lambda = config.lambda;
  model.roa_constrained = config.include_grid_constraints;
  const Index n = data.dimension();
  if (config.fix_P_to_identity) {
    model.P = MatrixXd::Identity(n, n);
  } else {
    // Interior-point iterates satisfy P >= I only up to the tolerance; lift
    // eigenvalues below one. P enters the program only through the loss and
    // P >= I, so this keeps every constraint intact.
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(sol.P));
    model.P = es.eigenvectors() * es.eigenvalues().cwiseMax(1.0).asDiagonal() * es.eigenvectors().transpose();
    model.P = sym(model.P);
  }
  diag.kkt = kkt_report(program, model.A, model.P, sol.duals);
  model.diagnostics = diag;
  return model;
}

}  // namespace

VectorXd VectorFieldModel::g(const VectorXd& x) const {
  return A * assemble_feature_vector(kernel, centers, x);
}

VectorFieldModel fit(const DataSet& data, const RegionSpec& region, const GridSet& grid,
                     const KernelSpec& kernel, const FitConfig& config) {
  config.validate();
  kernel.validate();
  region.validate();
  data.validate();
  if (data.dimension() != region.dimension) throw std::invalid_argument("fit: dataset and region dimensions differ");
  if (config.include_grid_constraints) grid.validate(region);
  const Prepared prep = prepare(data, grid, kernel, config.include_grid_constraints);
  return solve_prepared(prep, data, kernel, config);
}

VectorXd predict(const VectorFieldModel& model, const VectorXd& x) {
  if (x.size() != model.dimension()) throw std::invalid_argument("predict: dimension mismatch");
  return model.P.ldlt().solve(model.g(x));
}

MatrixXd model_jacobian(const VectorFieldModel& model, const VectorXd& x) {
  return model.P.ldlt().solve(model.A * feature_jacobian(model.kernel, model.centers, x));
}

MatrixXd jacobian_at_origin(const VectorFieldModel& model) {
  const GramAssembly gram = assemble_gram(model.kernel, model.centers);
  return model.P.ldlt().solve(model.A * gram.J);
}

VectorField as_vector_field(const VectorFieldModel& model) {
  auto shared = std::make_shared<const VectorFieldModel>(model);
  VectorField f;
  f.dimension = model.dimension();
  f.name = "model";
  f.eval = [shared](const VectorXd& x) { return predict(*shared, x); };
  f.jacobian = [shared](const VectorXd& x) { return model_jacobian(*shared, x); };
  return f;
}

CertificateReport certify_decay(const VectorField& field, const MatrixXd& P, const RegionSpec& region,
                                std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("certify_decay: n_samples must be >= 1");
  region.validate();
  if (P.rows() != region.dimension || P.cols() != region.dimension)
    throw std::invalid_argument("certify_decay: P has wrong shape");
  const auto samples = sample_ball(region, n_samples, seed);
  CertificateReport rep;
  rep.n_samples = samples.size();
  std::size_t negative = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& x : samples) {
    const double nx2 = x.squaredNorm();
    if (nx2 == 0.0) {
      ++negative;
      continue;
    }
    const double v = x.dot(P * field(x));
    if (v < 0.0) ++negative;
    const double ratio = v / nx2;
    if (ratio > worst) {
      worst = ratio;
      rep.witness = x;
    }
  }
  rep.negative_fraction = static_cast<double>(negative) / static_cast<double>(rep.n_samples);
  rep.worst_ratio = worst;
  rep.epsilon = std::max(0.0, -worst);
  return rep;
}

CertificateReport certify_decay(const VectorFieldModel& model, const RegionSpec& region,
                                std::size_t n_samples, std::uint64_t seed) {
  // x^T P f(x) = x^T g(x), evaluated without the inverse of P.
  VectorField pg;
  pg.dimension = model.dimension();
  pg.eval = [&model](const VectorXd& x) { return model.g(x); };
  return certify_decay(pg, MatrixXd::Identity(model.dimension(), model.dimension()), region, n_samples, seed);
}

EvalBox EvalBox::unit(Index n) { return {VectorXd::Constant(n, -1.0), VectorXd::Constant(n, 1.0)}; }

LatticeEvaluation evaluate_lattice(const VectorField& fitted, const VectorField& truth, const EvalBox& box,
                                   int res) {
  if (res < 2) throw std::invalid_argument("evaluate_lattice: res must be >= 2");
  const Index n = box.lo.size();
  if (box.hi.size() != n || n < 1) throw std::invalid_argument("evaluate_lattice: malformed box");
  if (fitted.dimension != n || truth.dimension != n) throw std::invalid_argument("evaluate_lattice: dimension mismatch");
  LatticeEvaluation out;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    VectorXd x(n);
    for (Index d = 0; d < n; ++d) {
      const double t = static_cast<double>(idx[static_cast<std::size_t>(d)]) / (res - 1);
      x(d) = box.lo(d) + t * (box.hi(d) - box.lo(d));
    }
    out.truth.push_back(truth(x));
    out.fitted.push_back(fitted(x));
    out.points.push_back(std::move(x));
    Index d = 0;
    while (d < n && ++idx[static_cast<std::size_t>(d)] == res) idx[static_cast<std::size_t>(d++)] = 0;
    if (d == n) break;
  }
  return out;
}

double r_squared(const LatticeEvaluation& lat) {
  if (lat.truth.empty()) throw std::invalid_argument("r_squared: empty lattice");
  VectorXd mean = VectorXd::Zero(lat.truth.front().size());
  for (const auto& f : lat.truth) mean += f;
  mean /= static_cast<double>(lat.truth.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < lat.truth.size(); ++i) {
    ss_res += (lat.truth[i] - lat.fitted[i]).squaredNorm();
    ss_tot += (lat.truth[i] - mean).squaredNorm();
  }
  if (!(ss_tot > 0.0)) throw std::domain_error("r_squared: truth has zero variance on the lattice");
  return 1.0 - ss_res / ss_tot;
}

double r_squared(const VectorField& fitted, const VectorField& truth, const EvalBox& box, int res) {
  return r_squared(evaluate_lattice(fitted, truth, box, res));
}

double r_squared(const VectorFieldModel& model, const VectorField& truth, const EvalBox& box, int res) {
  return r_squared(as_vector_field(model), truth, box, res);
}

VectorXd lattice_rmse(const LatticeEvaluation& lat) {
  if (lat.truth.empty()) throw std::invalid_argument("lattice_rmse: empty lattice");
  VectorXd acc = VectorXd::Zero(lat.truth.front().size());
  for (std::size_t i = 0; i < lat.truth.size(); ++i) acc += (lat.truth[i] - lat.fitted[i]).cwiseAbs2();
  return (acc / static_cast<double>(lat.truth.size())).cwiseSqrt();
}

EvalReport rollout_compare(const VectorField& model, const VectorField& truth,
                           const std::vector<VectorXd>& inits, double t_end, double dt) {
  EvalReport rep;
  for (const auto& x0 : inits) {
    const Trajectory tm = integrate(model, x0, t_end, dt);
    const Trajectory tt = integrate(truth, x0, t_end, dt);
    RolloutResult r;
    r.init = x0;
    r.model_diverged = tm.diverged;
    r.truth_diverged = tt.diverged;
    const std::size_t common = std::min(tm.size(), tt.size());
    for (std::size_t k = 0; k < common; ++k)
      r.max_deviation = std::max(r.max_deviation, (tm.states[k] - tt.states[k]).lpNorm<Eigen::Infinity>());
    r.model_final_norm = tm.diverged ? std::numeric_limits<double>::infinity() : tm.states.back().norm();
    r.truth_final_norm = tt.diverged ? std::numeric_limits<double>::infinity() : tt.states.back().norm();
    rep.rollouts.push_back(std::move(r));
  }
  return rep;
}

std::vector<int> fold_assignment(std::size_t n, int k_folds, std::uint64_t seed) {
  if (k_folds < 2) throw std::invalid_argument("fold_assignment: k_folds must be >= 2");
  if (n < static_cast<std::size_t>(k_folds))
    throw std::invalid_argument("fold_assignment: fewer samples than folds leaves a fold empty");
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng() % i]);
  std::vector<int> fold(n);
  for (std::size_t pos = 0; pos < n; ++pos) fold[perm[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k_folds));
  return fold;
}

CvResult cross_validate(const DataSet& data, const RegionSpec& region, const GridSet& grid,
                        const std::vector<KernelSpec>& kernels, const std::vector<double>& lambdas,
                        const FitConfig& base, const CvOptions& options) {
  if (kernels.empty() || lambdas.empty()) throw std::invalid_argument("cross_validate: empty hyperparameter grid");
  data.validate();
  region.validate();
  for (const auto& k : kernels) k.validate();
  for (double l : lambdas)
    if (!(l > 0.0)) throw std::invalid_argument("cross_validate: lambda must be > 0");
  if (base.include_grid_constraints) grid.validate(region);
  const std::vector<int> fold = fold_assignment(data.size(), options.k_folds, options.seed);
  const auto K = static_cast<std::size_t>(options.k_folds);

  std::vector<DataSet> train(K), valid(K);
  for (std::size_t f = 0; f < K; ++f) {
    std::vector<std::size_t> tr, va;
    for (std::size_t i = 0; i < data.size(); ++i) (fold[i] == static_cast<int>(f) ? va : tr).push_back(i);
    if (tr.empty()) throw std::invalid_argument("cross_validate: fold with empty training set");
    train[f] = data.subset(tr);
    valid[f] = data.subset(va);
  }

  const std::size_t nl = lambdas.size();
  // scores[(kernel * nl + lambda) * K + fold]
  std::vector<double> scores(kernels.size() * nl * K, std::numeric_limits<double>::infinity());
  const std::size_t n_tasks = kernels.size() * K;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t t = next++; t < n_tasks; t = next++) {
      const std::size_t ki = t / K, f = t % K;
      Prepared prep;
      try {
        prep = prepare(train[f], grid, kernels[ki], base.include_grid_constraints);
      } catch (const std::exception&) {
        continue;
      }
      for (std::size_t li = 0; li < nl; ++li) {
        FitConfig cfg = base;
        cfg.lambda = lambdas[li];
        try {
          const VectorFieldModel model = solve_prepared(prep, train[f], kernels[ki], cfg);
          double sse = 0.0;
          for (std::size_t j = 0; j < valid[f].size(); ++j)
            sse += (valid[f].y[j] - predict(model, valid[f].x[j])).squaredNorm();
          scores[(ki * nl + li) * K + f] = sse;
        } catch (const std::exception&) {
          // Left at +inf.
        }
      }
    }
  };
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_tasks));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  CvResult res;
  for (std::size_t ki = 0; ki < kernels.size(); ++ki) {
    for (std::size_t li = 0; li < nl; ++li) {
      CvCell cell;
      cell.kernel = kernels[ki];
      cell.lambda = lambdas[li];
      for (std::size_t f = 0; f < K; ++f) {
        const double s = scores[(ki * nl + li) * K + f];
        if (!std::isfinite(s)) ++cell.failed_folds;
        cell.score += s;
      }
      res.table.push_back(cell);
    }
  }
  auto better = [](const CvCell& a, const CvCell& b) {
    const double tol = 1e-12 * std::max(std::abs(a.score), std::abs(b.score));
    if (std::isfinite(a.score) && std::isfinite(b.score) && std::abs(a.score - b.score) > tol) return a.score < b.score;
    if (std::isfinite(a.score) != std::isfinite(b.score)) return std::isfinite(a.score);
    if (a.lambda != b.lambda) return a.lambda > b.lambda;
    return a.kernel.sigma > b.kernel.sigma;
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < res.table.size(); ++i)
    if (better(res.table[i], res.table[best])) best = i;
  if (!std::isfinite(res.table[best].score)) throw std::runtime_error("cross_validate: every candidate failed");
  res.best_index = best;
  res.kernel = res.table[best].kernel;
  res.lambda = res.table[best].lambda;
  return res;
}

}  // namespace roaid
