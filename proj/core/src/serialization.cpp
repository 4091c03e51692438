#include "roaid/serialization.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace roaid {

using nlohmann::json;

namespace {

json vec_to_json(const VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

VectorXd vec_from_json(const json& a) {
  if (!a.is_array()) throw FormatError("expected an array of numbers");
  VectorXd v(static_cast<Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw FormatError("expected a number");
    v(static_cast<Index>(i)) = a[i].get<double>();
  }
  return v;
}

json points_to_json(const std::vector<VectorXd>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back(vec_to_json(p));
  return a;
}

std::vector<VectorXd> points_from_json(const json& a, Index dim) {
  if (!a.is_array()) throw FormatError("expected an array of points");
  std::vector<VectorXd> out;
  for (const auto& p : a) {
    VectorXd v = vec_from_json(p);
    if (dim >= 0 && v.size() != dim) throw FormatError("point has the wrong dimension");
    out.push_back(std::move(v));
  }
  return out;
}

json mat_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(vec_to_json(m.row(i).transpose()));
  return rows;
}

MatrixXd mat_from_json(const json& rows, Index r, Index c) {
  if (!rows.is_array() || static_cast<Index>(rows.size()) != r) throw FormatError("matrix has the wrong number of rows");
  MatrixXd m(r, c);
  for (Index i = 0; i < r; ++i) {
    const VectorXd row = vec_from_json(rows[static_cast<std::size_t>(i)]);
    if (row.size() != c) throw FormatError("matrix has the wrong number of columns");
    m.row(i) = row.transpose();
  }
  return m;
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what());
  }
}

void check_version(const json& j, const char* kind) {
  if (!j.is_object()) throw FormatError(std::string(kind) + ": expected a JSON object");
  if (j.contains("format_version") && j.at("format_version") != kFormatVersion)
    throw FormatError(std::string(kind) + ": unsupported format_version");
}

template <class F>
auto guarded(const char* kind, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw FormatError(std::string(kind) + ": " + e.what());
  }
}

json kernel_json(const KernelSpec& s) {
  if (s.family == KernelFamily::gaussian) return {{"family", "gaussian"}, {"sigma", s.sigma}};
  return {{"family", "polynomial"}, {"degree", s.degree}, {"offset", s.offset}};
}

KernelSpec kernel_parse(const json& j) {
  const std::string fam = j.at("family").get<std::string>();
  if (fam == "gaussian") return KernelSpec::gaussian(j.at("sigma").get<double>());
  if (fam == "polynomial") return KernelSpec::polynomial(j.at("degree").get<int>(), j.value("offset", 0.0));
  throw FormatError("kernel: unknown family '" + fam + "'");
}

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_num(const std::string& tok) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r')) --last;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) throw FormatError("CSV: invalid number '" + tok + "'");
  return v;
}

std::vector<std::vector<double>> parse_csv(const std::string& text, std::vector<std::string>* header) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> toks;
    std::stringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) toks.push_back(tok);
    if (first) {
      first = false;
      if (header) *header = toks;
      continue;
    }
    std::vector<double> row;
    for (const auto& t : toks) row.push_back(parse_num(t));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string header_names(const char* prefix, Index n) {
  std::string out;
  for (Index i = 1; i <= n; ++i) {
    if (i > 1) out += ',';
    out += prefix + std::to_string(i);
  }
  return out;
}

void append_row(std::string& out, const std::vector<const VectorXd*>& parts) {
  bool first = true;
  for (const VectorXd* v : parts) {
    for (Index i = 0; i < v->size(); ++i) {
      if (!first) out += ',';
      first = false;
      out += num((*v)(i));
    }
  }
  out += '\n';
}

json kkt_json(const KKTReport& r) {
  json j = {{"objective", r.objective},     {"eq_residual", r.eq_residual}, {"ineq_violation", r.ineq_violation},
            {"lmi_min_eig", r.lmi_min_eig}, {"p_min_eig", r.p_min_eig},     {"psd_min_eig", r.psd_min_eig}};
  j["dual_residual"] = r.dual_residual ? json(*r.dual_residual) : json(nullptr);
  j["rel_gap"] = r.rel_gap ? json(*r.rel_gap) : json(nullptr);
  return j;
}

KKTReport kkt_parse(const json& j) {
  KKTReport r;
  r.objective = j.at("objective").get<double>();
  r.eq_residual = j.at("eq_residual").get<double>();
  r.ineq_violation = j.at("ineq_violation").get<double>();
  r.lmi_min_eig = j.at("lmi_min_eig").get<double>();
  r.p_min_eig = j.at("p_min_eig").get<double>();
  r.psd_min_eig = j.at("psd_min_eig").get<double>();
  if (j.contains("dual_residual") && !j["dual_residual"].is_null()) r.dual_residual = j["dual_residual"].get<double>();
  if (j.contains("rel_gap") && !j["rel_gap"].is_null()) r.rel_gap = j["rel_gap"].get<double>();
  return r;
}

SolveStatus status_parse(const std::string& s) {
  if (s == "optimal") return SolveStatus::optimal;
  if (s == "max_iter") return SolveStatus::max_iter;
  if (s == "infeasible_detected") return SolveStatus::infeasible_detected;
  if (s == "numerical_failure") return SolveStatus::numerical_failure;
  throw FormatError("unknown solver status '" + s + "'");
}

}  // namespace

std::string kernel_to_json(const KernelSpec& spec) { return kernel_json(spec).dump(); }

KernelSpec kernel_from_json(const std::string& text) {
  return guarded("kernel", [&] { return kernel_parse(parse(text)); });
}

std::string grid_to_json(const GridSet& grid) {
  json j = {{"format_version", kFormatVersion}, {"kind", "grid"}, {"points", points_to_json(grid.points)}};
  j["dimension"] = grid.points.empty() ? 0 : grid.points.front().size();
  return j.dump(2);
}

GridSet grid_from_json(const std::string& text) {
  return guarded("grid", [&] {
    const json j = parse(text);
    check_version(j, "grid");
    GridSet g;
    const Index dim = j.value("dimension", Index{0});
    g.points = points_from_json(j.at("points"), dim > 0 ? dim : -1);
    return g;
  });
}

std::string grid_to_csv(const GridSet& grid) {
  const Index n = grid.points.empty() ? 0 : grid.points.front().size();
  std::string out = header_names("x", n) + '\n';
  for (const auto& p : grid.points) append_row(out, {&p});
  return out;
}

GridSet grid_from_csv(const std::string& text) {
  std::vector<std::string> header;
  const auto rows = parse_csv(text, &header);
  GridSet g;
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw FormatError("grid CSV: row width differs from header");
    g.points.push_back(Eigen::Map<const VectorXd>(r.data(), static_cast<Index>(r.size())));
  }
  return g;
}

std::string dataset_to_json(const DataSet& data) {
  const auto& pv = data.provenance;
  json meta = {{"seed", pv.seed},
               {"noise_var", pv.noise_var},
               {"t_end", pv.t_end},
               {"system", pv.system},
               {"initial_points", points_to_json(pv.initial_points)},
               {"trajectory_of_sample", pv.trajectory_of_sample}};
  json j = {{"format_version", kFormatVersion},
            {"kind", "dataset"},
            {"dimension", data.dimension()},
            {"x", points_to_json(data.x)},
            {"y", points_to_json(data.y)},
            {"metadata", meta}};
  return j.dump(2);
}

DataSet dataset_from_json(const std::string& text) {
  return guarded("dataset", [&] {
    const json j = parse(text);
    check_version(j, "dataset");
    DataSet d;
    const Index dim = j.at("dimension").get<Index>();
    d.x = points_from_json(j.at("x"), dim);
    d.y = points_from_json(j.at("y"), dim);
    if (j.contains("metadata")) {
      const json& m = j["metadata"];
      d.provenance.seed = m.value("seed", std::uint64_t{0});
      d.provenance.noise_var = m.value("noise_var", 0.0);
      d.provenance.t_end = m.value("t_end", 0.0);
      d.provenance.system = m.value("system", std::string{});
      if (m.contains("initial_points")) d.provenance.initial_points = points_from_json(m["initial_points"], dim);
      if (m.contains("trajectory_of_sample"))
        d.provenance.trajectory_of_sample = m["trajectory_of_sample"].get<std::vector<std::size_t>>();
    }
    d.validate();
    return d;
  });
}

std::string dataset_to_csv(const DataSet& data) {
  const Index n = data.dimension();
  std::string out = header_names("x", n) + ',' + header_names("y", n) + '\n';
  for (std::size_t i = 0; i < data.size(); ++i) append_row(out, {&data.x[i], &data.y[i]});
  return out;
}

DataSet dataset_from_csv(const std::string& text) {
  std::vector<std::string> header;
  const auto rows = parse_csv(text, &header);
  if (header.size() % 2 != 0 || header.empty()) throw FormatError("dataset CSV: header must be x1..xn,y1..yn");
  const auto n = static_cast<Index>(header.size() / 2);
  DataSet d;
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw FormatError("dataset CSV: row width differs from header");
    d.x.push_back(Eigen::Map<const VectorXd>(r.data(), n));
    d.y.push_back(Eigen::Map<const VectorXd>(r.data() + n, n));
  }
  d.validate();
  return d;
}

std::string trajectory_to_csv(const Trajectory& traj) {
  const Index n = traj.states.empty() ? 0 : traj.states.front().size();
  std::string out = "t," + header_names("x", n) + '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    VectorXd t(1);
    t(0) = traj.times[k];
    append_row(out, {&t, &traj.states[k]});
  }
  return out;
}

std::string model_to_json(const VectorFieldModel& model) {
  const Centers& c = model.centers;
  std::vector<VectorXd> data, grid;
  for (Index i = 0; i < c.n_s(); ++i) data.emplace_back(c.point(c.data_index(i)));
  for (Index k = 0; k < c.n_g(); ++k) grid.emplace_back(c.point(c.grid_index(k)));
  const auto& d = model.diagnostics;
  json diag = {{"status", to_string(d.status)},
               {"iterations", d.iterations},
               {"solve_seconds", d.solve_seconds},
               {"reduced_rank", d.reduced_rank},
               {"kkt", kkt_json(d.kkt)}};
  json j = {{"format_version", kFormatVersion},
            {"kind", "vector_field_model"},
            {"dimension", model.dimension()},
            {"kernel", kernel_json(model.kernel)},
            {"centers", {{"data", points_to_json(data)}, {"grid", points_to_json(grid)}}},
            {"A", mat_to_json(model.A)},
            {"P", mat_to_json(model.P)},
            {"lambda", model.lambda},
            {"roa_constrained", model.roa_constrained},
            {"diagnostics", diag}};
  return j.dump(2);
}

VectorFieldModel model_from_json(const std::string& text) {
  return guarded("model", [&] {
    const json j = parse(text);
    check_version(j, "model");
    VectorFieldModel m;
    const Index n = j.at("dimension").get<Index>();
    if (n < 1) throw FormatError("model: dimension must be positive");
    m.kernel = kernel_parse(j.at("kernel"));
    const auto data = points_from_json(j.at("centers").at("data"), n);
    const auto grid = points_from_json(j.at("centers").at("grid"), n);
    m.centers = Centers(n, data, grid);
    m.A = mat_from_json(j.at("A"), n, m.centers.m());
    m.P = mat_from_json(j.at("P"), n, n);
    m.lambda = j.at("lambda").get<double>();
    m.roa_constrained = j.value("roa_constrained", true);
    if (j.contains("diagnostics")) {
      const json& d = j["diagnostics"];
      m.diagnostics.status = status_parse(d.at("status").get<std::string>());
      m.diagnostics.iterations = d.value("iterations", 0);
      m.diagnostics.solve_seconds = d.value("solve_seconds", 0.0);
      m.diagnostics.reduced_rank = d.value("reduced_rank", Index{0});
      if (d.contains("kkt")) m.diagnostics.kkt = kkt_parse(d["kkt"]);
    }
    return m;
  });
}

std::string report_to_json(const CoverReport& r) {
  json j = {{"format_version", kFormatVersion}, {"kind", "cover_report"},
            {"covered", r.covered},
            {"n_samples", r.n_samples},
            {"max_gap_ratio", r.max_gap_ratio}};
  j["witness"] = r.witness ? vec_to_json(*r.witness) : json(nullptr);
  return j.dump(2);
}

std::string report_to_json(const CertificateReport& r) {
  json j = {{"format_version", kFormatVersion}, {"kind", "certificate_report"},
            {"n_samples", r.n_samples},
            {"negative_fraction", r.negative_fraction},
            {"epsilon", r.epsilon},
            {"worst_ratio", r.worst_ratio},
            {"witness", vec_to_json(r.witness)}};
  return j.dump(2);
}

std::string report_to_json(const EvalReport& r) {
  json roll = json::array();
  for (const auto& x : r.rollouts)
    roll.push_back({{"init", vec_to_json(x.init)},
                    {"max_deviation", x.max_deviation},
                    {"truth_final_norm", x.truth_final_norm},
                    {"model_final_norm", x.model_final_norm},
                    {"truth_diverged", x.truth_diverged},
                    {"model_diverged", x.model_diverged}});
  json j = {{"format_version", kFormatVersion}, {"kind", "eval_report"}, {"rmse", vec_to_json(r.rmse)}, {"rollouts", roll}};
  j["r2"] = r.r2 ? json(*r.r2) : json(nullptr);
  return j.dump(2);
}

std::string report_to_json(const KKTReport& r) {
  json j = kkt_json(r);
  j["format_version"] = kFormatVersion;
  j["kind"] = "kkt_report";
  return j.dump(2);
}

std::string report_to_json(const CvResult& r) {
  json table = json::array();
  for (const auto& c : r.table)
    table.push_back({{"kernel", kernel_json(c.kernel)},
                     {"lambda", c.lambda},
                     {"score", c.score},
                     {"failed_folds", c.failed_folds}});
  json j = {{"format_version", kFormatVersion}, {"kind", "cv_result"},
            {"kernel", kernel_json(r.kernel)},
            {"lambda", r.lambda},
            {"best_index", r.best_index},
            {"table", table}};
  return j.dump(2);
}

std::string lattice_to_csv(const LatticeEvaluation& lat) {
  const Index n = lat.points.empty() ? 0 : lat.points.front().size();
  std::string out = header_names("x", n) + ',' + header_names("f", n) + ',' + header_names("fhat", n) + ',' +
                    header_names("r", n) + '\n';
  for (std::size_t i = 0; i < lat.points.size(); ++i) {
    const VectorXd r = lat.truth[i] - lat.fitted[i];
    append_row(out, {&lat.points[i], &lat.truth[i], &lat.fitted[i], &r});
  }
  return out;
}

std::string field_to_csv(const VectorField& field, const EvalBox& box, int res) {
  const LatticeEvaluation lat = evaluate_lattice(field, field, box, res);
  const Index n = box.lo.size();
  std::string out = header_names("x", n) + ',' + header_names("f", n) + '\n';
  for (std::size_t i = 0; i < lat.points.size(); ++i) append_row(out, {&lat.points[i], &lat.fitted[i]});
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << contents;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace roaid
