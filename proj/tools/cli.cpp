#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <sstream>

#include <roaid/serialization.hpp>

namespace roaid::cli {
namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw UsageError("invalid number '" + s + "'");
  }
  if (pos != s.size()) throw UsageError("invalid number '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, sep))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

// "1,-1;-1,-1" -> {(1,-1), (-1,-1)}
std::vector<VectorXd> parse_points(const std::string& s) {
  std::vector<VectorXd> pts;
  for (const auto& p : split(s, ';')) {
    const auto c = split(p, ',');
    VectorXd v(static_cast<Index>(c.size()));
    for (std::size_t i = 0; i < c.size(); ++i) v(static_cast<Index>(i)) = parse_double(c[i]);
    if (!pts.empty() && v.size() != pts.front().size()) throw UsageError("points have mixed dimensions");
    pts.push_back(v);
  }
  if (pts.empty()) throw UsageError("empty point list");
  return pts;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  for (const auto& t : split(s, ',')) v.push_back(parse_double(t));
  if (v.empty()) throw UsageError("empty value list");
  return v;
}

// "unit" or "lo:hi", applied to every axis.
EvalBox parse_box(const std::string& s, Index n) {
  if (s == "unit") return EvalBox::unit(n);
  const auto parts = split(s, ':');
  if (parts.size() != 2) throw UsageError("box must be 'unit' or 'lo:hi'");
  const double lo = parse_double(parts[0]), hi = parse_double(parts[1]);
  if (!(lo < hi)) throw UsageError("box requires lo < hi");
  return {VectorXd::Constant(n, lo), VectorXd::Constant(n, hi)};
}

std::pair<int, int> parse_polar(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw UsageError("--polar expects RxA, e.g. 15x20");
  try {
    return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
  } catch (const std::exception&) {
    throw UsageError("--polar expects RxA, e.g. 15x20");
  }
}

bool wants_csv(const std::string& format, const std::string& path) {
  if (format == "csv") return true;
  if (format == "json") return false;
  return std::filesystem::path(path).extension() == ".csv";
}

bool looks_like_csv(const std::string& path) { return std::filesystem::path(path).extension() == ".csv"; }

void check_output_path(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent))
    throw UsageError("output directory '" + parent.string() + "' does not exist");
}

struct GenArgs {
  std::string system = "eq27";
  std::string inits = "1,-1;-1,-1";
  int n = 19;
  double t_end = 10.0;
  double noise_var = 1e-3;
  double dt = 1e-3;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "auto";
};

struct GridArgs {
  double radius = 1.5;
  int dimension = 2;
  std::string polar;
  double alpha = 0.0;
  double beta = 0.0;
  double oversample = 2.0;
  std::string grid;
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "auto";
};

struct FitArgs {
  std::string data;
  std::string grid;
  double radius = 1.5;
  std::string kernel = "gaussian";
  std::string sigma = "auto";
  int degree = 2;
  double offset = 1.0;
  std::string lambda = "auto";
  std::string sigma_grid;
  std::string lambda_grid;
  int cv = 5;
  unsigned threads = 0;
  std::uint64_t seed = 0;
  bool no_roa = false;
  double rho = 0.0;
  std::string cv_report;
  std::string out;
};

struct ModelArgs {
  std::string model;
  std::string truth;
  std::string box = "unit";
  int res = 51;
  std::string rollouts;
  double t_end = 10.0;
  double dt = 1e-2;
  double radius = 1.5;
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_gen(const GenArgs& a, std::ostream& out) {
  check_output_path(a.out);
  const VectorField f = system_by_name(a.system);
  SampleOptions so;
  so.dt = a.dt;
  DataSet d = sample_dataset(f, parse_points(a.inits), a.n, a.t_end, a.noise_var, a.seed, so);
  d.provenance.system = a.system;
  write_file(a.out, wants_csv(a.format, a.out) ? dataset_to_csv(d) : dataset_to_json(d));
  out << "wrote " << d.size() << " samples to " << a.out << '\n';
  return kOk;
}

int cmd_grid_make(const GridArgs& a, std::ostream& out) {
  check_output_path(a.out);
  const RegionSpec region{a.dimension, a.radius};
  GridSet g;
  if (!a.polar.empty()) {
    const auto [nr, na] = parse_polar(a.polar);
    g = generate_polar_grid(region, nr, na);
  } else {
    if (!(a.alpha > 0.0) || !(a.beta > 0.0)) throw UsageError("grid make needs --polar or --alpha and --beta");
    g = greedy_cover_grid(region, a.alpha, a.beta, a.oversample);
  }
  write_file(a.out, wants_csv(a.format, a.out) ? grid_to_csv(g) : grid_to_json(g));
  out << "wrote " << g.size() << " grid points to " << a.out << '\n';
  return kOk;
}

GridSet load_grid(const std::string& path) {
  const std::string text = read_file(path);
  return looks_like_csv(path) ? grid_from_csv(text) : grid_from_json(text);
}

DataSet load_dataset(const std::string& path) {
  const std::string text = read_file(path);
  return looks_like_csv(path) ? dataset_from_csv(text) : dataset_from_json(text);
}

int cmd_grid_verify(const GridArgs& a, std::ostream& out, std::ostream& err) {
  const GridSet g = load_grid(a.grid);
  const RegionSpec region{a.dimension, a.radius};
  const CoverReport r = verify_cover(g, a.alpha, a.beta, region, a.samples, a.seed);
  out << report_to_json(r) << '\n';
  if (r.covered) return kOk;
  err << "cover fails near (" << r.witness->transpose() << ")\n";
  return kCoverFailure;
}

int cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  check_output_path(a.out);
  if (!a.cv_report.empty()) check_output_path(a.cv_report);
  const DataSet data = load_dataset(a.data);
  const Index n = data.dimension();
  const RegionSpec region{n, a.radius};
  GridSet grid;
  if (!a.no_roa) {
    if (a.grid.empty()) throw UsageError("fit needs --grid unless --no-roa is given");
    grid = load_grid(a.grid);
  }

  std::vector<KernelSpec> kernels;
  if (a.kernel == "gaussian") {
    const std::vector<double> sigmas = a.sigma == "auto" ? (a.sigma_grid.empty() ? default_sigma_grid()
                                                                                  : parse_list(a.sigma_grid))
                                                         : std::vector<double>{parse_double(a.sigma)};
    for (double s : sigmas) kernels.push_back(KernelSpec::gaussian(s));
  } else if (a.kernel == "polynomial") {
    kernels.push_back(KernelSpec::polynomial(a.degree, a.offset));
  } else {
    throw UsageError("unknown kernel '" + a.kernel + "'");
  }
  const std::vector<double> lambdas =
      a.lambda == "auto" ? (a.lambda_grid.empty() ? default_lambda_grid() : parse_list(a.lambda_grid))
                         : std::vector<double>{parse_double(a.lambda)};

  FitConfig base = a.no_roa ? FitConfig::ablation(lambdas.front()) : FitConfig{};
  base.rho = a.rho;
  KernelSpec kernel = kernels.front();
  double lambda = lambdas.front();
  if (kernels.size() > 1 || lambdas.size() > 1) {
    CvOptions o;
    o.k_folds = a.cv;
    o.seed = a.seed;
    o.threads = a.threads;
    const CvResult cv = cross_validate(data, region, grid, kernels, lambdas, base, o);
    if (!std::isfinite(cv.table[cv.best_index].score)) {
      err << "cross-validation: every candidate failed\n";
      return kSolverFailure;
    }
    kernel = cv.kernel;
    lambda = cv.lambda;
    if (!a.cv_report.empty()) write_file(a.cv_report, report_to_json(cv));
  }

  FitConfig cfg = base;
  cfg.lambda = lambda;
  const VectorFieldModel m = fit(data, region, grid, kernel, cfg);
  write_file(a.out, model_to_json(m));
  out << report_to_json(m.diagnostics.kkt) << '\n';
  err << "kernel " << kernel.describe() << " lambda " << lambda << " status " << to_string(m.diagnostics.status)
      << '\n';
  if (!m.diagnostics.kkt.primal_feasible(1e-6) || min_eigenvalue(m.P) < 1.0 - 1e-8) {
    err << "fitted model violates its constraints\n";
    return kSolverFailure;
  }
  return kOk;
}

int cmd_eval(const ModelArgs& a, std::ostream& out) {
  const VectorFieldModel m = model_from_json(read_file(a.model));
  const VectorField truth = system_by_name(a.truth);
  const VectorField fhat = as_vector_field(m);
  const LatticeEvaluation lat = evaluate_lattice(fhat, truth, parse_box(a.box, m.dimension()), a.res);
  EvalReport rep;
  if (!a.rollouts.empty()) rep = rollout_compare(fhat, truth, parse_points(a.rollouts), a.t_end, a.dt);
  rep.r2 = r_squared(lat);
  rep.rmse = lattice_rmse(lat);
  out << report_to_json(rep) << '\n';
  return kOk;
}

int cmd_certify(const ModelArgs& a, std::ostream& out) {
  const VectorFieldModel m = model_from_json(read_file(a.model));
  out << report_to_json(certify_decay(m, {m.dimension(), a.radius}, a.samples, a.seed)) << '\n';
  return kOk;
}

int cmd_export(const ModelArgs& a, std::ostream& out) {
  check_output_path(a.out);
  const VectorFieldModel m = model_from_json(read_file(a.model));
  const EvalBox box = parse_box(a.box, m.dimension());
  const VectorField fhat = as_vector_field(m);
  const std::string csv = a.truth.empty() ? field_to_csv(fhat, box, a.res)
                                          : lattice_to_csv(evaluate_lattice(fhat, system_by_name(a.truth), box, a.res));
  write_file(a.out, csv);
  out << "wrote lattice to " << a.out << '\n';
  return kOk;
}

}  // namespace

std::vector<double> default_sigma_grid() { return {0.5, 0.75, 1.0, 1.5, 2.0, 3.0}; }
std::vector<double> default_lambda_grid() { return {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1}; }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Identification of vector fields with a certified region of attraction"};
  app.name("roaid");
  app.require_subcommand(1);

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen", "Sample a noisy dataset from a known system");
  c_gen->add_option("--system", gen.system, "eq27 or eq27-saddle")->capture_default_str();
  c_gen->add_option("--inits", gen.inits, "initial points, e.g. \"1,-1;-1,-1\"")->capture_default_str();
  c_gen->add_option("--n", gen.n, "samples per trajectory")->capture_default_str()->check(CLI::PositiveNumber);
  c_gen->add_option("--t-end", gen.t_end, "trajectory length")->capture_default_str()->check(CLI::PositiveNumber);
  c_gen->add_option("--noise-var", gen.noise_var, "target noise variance")->capture_default_str()->check(CLI::NonNegativeNumber);
  c_gen->add_option("--dt", gen.dt, "integration step")->capture_default_str()->check(CLI::PositiveNumber);
  c_gen->add_option("--seed", gen.seed)->capture_default_str();
  c_gen->add_option("--out", gen.out)->required();
  c_gen->add_option("--format", gen.format)->check(CLI::IsMember({"auto", "json", "csv"}))->capture_default_str();

  auto* c_grid = app.add_subcommand("grid", "Build or verify an (alpha, beta)-grid");
  c_grid->require_subcommand(1);
  GridArgs gm, gv;
  auto* c_make = c_grid->add_subcommand("make", "Build a grid");
  c_make->add_option("--radius", gm.radius)->capture_default_str()->check(CLI::PositiveNumber);
  c_make->add_option("--dim", gm.dimension)->capture_default_str()->check(CLI::PositiveNumber);
  c_make->add_option("--polar", gm.polar, "uniform polar grid RxA");
  c_make->add_option("--alpha", gm.alpha, "greedy cover ball ratio");
  c_make->add_option("--beta", gm.beta, "greedy cover inner radius");
  c_make->add_option("--oversample", gm.oversample)->capture_default_str()->check(CLI::PositiveNumber);
  c_make->add_option("--out", gm.out)->required();
  c_make->add_option("--format", gm.format)->check(CLI::IsMember({"auto", "json", "csv"}))->capture_default_str();
  auto* c_verify = c_grid->add_subcommand("verify", "Check the cover property by sampling");
  c_verify->add_option("--grid", gv.grid)->required()->check(CLI::ExistingFile);
  c_verify->add_option("--alpha", gv.alpha)->required()->check(CLI::NonNegativeNumber);
  c_verify->add_option("--beta", gv.beta)->required()->check(CLI::NonNegativeNumber);
  c_verify->add_option("--radius", gv.radius)->capture_default_str()->check(CLI::PositiveNumber);
  c_verify->add_option("--dim", gv.dimension)->capture_default_str()->check(CLI::PositiveNumber);
  c_verify->add_option("--samples", gv.samples)->capture_default_str();
  c_verify->add_option("--seed", gv.seed)->capture_default_str();

  FitArgs fa;
  auto* c_fit = app.add_subcommand("fit", "Fit a vector field model");
  c_fit->add_option("--data", fa.data)->required()->check(CLI::ExistingFile);
  c_fit->add_option("--grid", fa.grid)->check(CLI::ExistingFile);
  c_fit->add_option("--radius", fa.radius)->capture_default_str()->check(CLI::PositiveNumber);
  c_fit->add_option("--kernel", fa.kernel)->check(CLI::IsMember({"gaussian", "polynomial"}))->capture_default_str();
  c_fit->add_option("--sigma", fa.sigma, "bandwidth or auto")->capture_default_str();
  c_fit->add_option("--degree", fa.degree)->capture_default_str()->check(CLI::PositiveNumber);
  c_fit->add_option("--offset", fa.offset)->capture_default_str()->check(CLI::NonNegativeNumber);
  c_fit->add_option("--lambda", fa.lambda, "regularization weight or auto")->capture_default_str();
  c_fit->add_option("--sigma-grid", fa.sigma_grid, "comma-separated candidates for --sigma auto");
  c_fit->add_option("--lambda-grid", fa.lambda_grid, "comma-separated candidates for --lambda auto");
  c_fit->add_option("--cv", fa.cv, "number of folds")->capture_default_str()->check(CLI::Range(2, 1000));
  c_fit->add_option("--threads", fa.threads, "0 uses all cores")->capture_default_str();
  c_fit->add_option("--seed", fa.seed)->capture_default_str();
  c_fit->add_option("--rho", fa.rho)->capture_default_str()->check(CLI::NonNegativeNumber);
  c_fit->add_flag("--no-roa", fa.no_roa, "P = I and no grid constraints");
  c_fit->add_option("--cv-report", fa.cv_report, "write the cross-validation table here");
  c_fit->add_option("--out", fa.out)->required();

  ModelArgs ev, ce, ex;
  auto* c_eval = app.add_subcommand("eval", "Compare a model against a known system");
  c_eval->add_option("--model", ev.model)->required()->check(CLI::ExistingFile);
  c_eval->add_option("--truth", ev.truth)->required();
  c_eval->add_option("--box", ev.box, "unit or lo:hi")->capture_default_str();
  c_eval->add_option("--res", ev.res)->capture_default_str()->check(CLI::Range(2, 100000));
  c_eval->add_option("--rollouts", ev.rollouts, "initial points for trajectory comparison");
  c_eval->add_option("--t-end", ev.t_end)->capture_default_str()->check(CLI::PositiveNumber);
  c_eval->add_option("--dt", ev.dt)->capture_default_str()->check(CLI::PositiveNumber);

  auto* c_cert = app.add_subcommand("certify", "Sample the Lyapunov decay condition");
  c_cert->add_option("--model", ce.model)->required()->check(CLI::ExistingFile);
  c_cert->add_option("--radius", ce.radius)->capture_default_str()->check(CLI::PositiveNumber);
  c_cert->add_option("--samples", ce.samples)->capture_default_str();
  c_cert->add_option("--seed", ce.seed)->capture_default_str();

  auto* c_export = app.add_subcommand("export", "Write model values on a lattice as CSV");
  c_export->add_option("--model", ex.model)->required()->check(CLI::ExistingFile);
  c_export->add_option("--box", ex.box)->capture_default_str();
  c_export->add_option("--res", ex.res)->capture_default_str()->check(CLI::Range(2, 100000));
  c_export->add_option("--truth", ex.truth, "also write truth and residual columns");
  c_export->add_option("--out", ex.out)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (c_gen->parsed()) return cmd_gen(gen, out);
    if (c_make->parsed()) return cmd_grid_make(gm, out);
    if (c_verify->parsed()) return cmd_grid_verify(gv, out, err);
    if (c_fit->parsed()) return cmd_fit(fa, out, err);
    if (c_eval->parsed()) return cmd_eval(ev, out);
    if (c_cert->parsed()) return cmd_certify(ce, out);
    if (c_export->parsed()) return cmd_export(ex, out);
  } catch (const DivergenceError& e) {
    err << "data generation failed: " << e.what() << '\n';
    return kDataFailure;
  } catch (const CoverError& e) {
    err << "cover failed: " << e.what() << " near (" << e.witness().transpose() << ")\n";
    return kCoverFailure;
  } catch (const FitError& e) {
    err << "solver failed: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return kUsage;
}

}  // namespace roaid::cli
