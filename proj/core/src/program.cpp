#include "roaid/program.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace roaid {

FitConfig FitConfig::ablation(double lambda) {
  FitConfig c;
  c.lambda = lambda;
  c.include_grid_constraints = false;
  c.fix_P_to_identity = true;
  return c;
}

void FitConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("fit config: lambda must be > 0");
  if (!(feas_tol > 0.0) || !(gap_tol > 0.0)) throw std::invalid_argument("fit config: tolerances must be > 0");
  if (!(rho >= 0.0)) throw std::invalid_argument("fit config: rho must be >= 0");
  if (max_iter < 1) throw std::invalid_argument("fit config: max_iter must be >= 1");
}

double ConicProgram::objective(const MatrixXd& A, const MatrixXd& P) const {
  const MatrixXd Pe = P_fixed ? MatrixXd::Identity(n, n) : P;
  double value = 0.0;
  for (Index i = 0; i < n_s(); ++i)
    value += (Pe * targets.col(i) - A * K.col(data_columns[static_cast<std::size_t>(i)])).squaredNorm();
  value += lambda * (A * K * A.transpose()).trace();
  if (!P_fixed) value += rho * Pe.squaredNorm();
  return value;
}

ConicProgram assemble_program(const GramAssembly& gram, const DataSet& data,
                              const Centers& centers, const FitConfig& config) {
  config.validate();
  data.validate();
  const Index n = centers.dimension();
  const Index m = centers.m();
  if (gram.K.rows() != m || gram.K.cols() != m || gram.J.rows() != m || gram.J.cols() != n)
    throw std::invalid_argument("assemble_program: Gram does not match centers");
  if (static_cast<Index>(data.size()) != centers.n_s())
    throw std::invalid_argument("assemble_program: dataset size does not match centers");
  if (data.dimension() != n) throw std::invalid_argument("assemble_program: dataset dimension mismatch");

  ConicProgram prog;
  prog.n = n;
  prog.m = m;
  prog.K = gram.K;
  prog.J = gram.J;
  prog.lambda = config.lambda;
  prog.rho = config.fix_P_to_identity ? 0.0 : config.rho;
  prog.P_fixed = config.fix_P_to_identity;
  prog.targets.resize(n, centers.n_s());
  for (Index i = 0; i < centers.n_s(); ++i) {
    prog.targets.col(i) = data.y[static_cast<std::size_t>(i)];
    prog.data_columns.push_back(centers.data_index(i));
  }
  if (config.include_grid_constraints) {
    prog.grid_points.resize(n, centers.n_g());
    for (Index k = 0; k < centers.n_g(); ++k) {
      prog.grid_points.col(k) = centers.point(centers.grid_index(k));
      prog.grid_columns.push_back(centers.grid_index(k));
    }
  } else {
    prog.grid_points.resize(n, 0);
  }
  return prog;
}

namespace {

// Matrix M with M * vech(P) = P y.
MatrixXd vech_times(const VectorXd& y) {
  const Index n = y.size();
  MatrixXd M = MatrixXd::Zero(n, svec_dim(n));
  Index k = 0;
  for (Index j = 0; j < n; ++j) {
    for (Index i = j; i < n; ++i, ++k) {
      if (i == j) {
        M(i, k) = y(i);
      } else {
        M(i, k) = y(j);
        M(j, k) = y(i);
      }
    }
  }
  return M;
}

// Builds the conic form in coordinates A = B W^T for a given basis W (m x r).
CanonicalConic build(const ConicProgram& prog, const MatrixXd& W) {
  const Index n = prog.n;
  const Index r = W.cols();
  const Index nB = n * r;
  const Index nP = prog.P_fixed ? 0 : svec_dim(n);
  const Index N = nB + nP;
  const Index d = svec_dim(n);

  CanonicalConic c;
  c.n = n;
  c.m = prog.m;
  c.P_fixed = prog.P_fixed;
  c.basis = W;

  const MatrixXd Phi = prog.K * W;  // row i is phi_i^T = K_i^T W
  MatrixXd PhiD(r, prog.n_s());
  for (Index i = 0; i < prog.n_s(); ++i) PhiD.col(i) = Phi.row(prog.data_columns[static_cast<std::size_t>(i)]).transpose();

  // Objective as v^T H v + g^T v + const.
  MatrixXd H = MatrixXd::Zero(N, N);
  VectorXd g = VectorXd::Zero(N);
  double constant = 0.0;
  const MatrixXd S = PhiD * PhiD.transpose() + prog.lambda * (W.transpose() * prog.K * W);
  for (Index a = 0; a < r; ++a)
    for (Index b = 0; b < r; ++b)
      for (Index i = 0; i < n; ++i) H(a * n + i, b * n + i) = S(a, b);

  if (prog.P_fixed) {
    // Residual y_i - B phi_i.
    const MatrixXd YPhi = prog.targets * PhiD.transpose();  // n x r
    for (Index a = 0; a < r; ++a)
      for (Index i = 0; i < n; ++i) g(a * n + i) = -2.0 * YPhi(i, a);
    constant = prog.targets.squaredNorm();
  } else {
    // Residual M_i vech(P) - B phi_i.
    MatrixXd HPP = MatrixXd::Zero(d, d);
    MatrixXd HBP = MatrixXd::Zero(nB, d);
    for (Index s = 0; s < prog.n_s(); ++s) {
      const MatrixXd M = vech_times(prog.targets.col(s));
      HPP += M.transpose() * M;
      for (Index a = 0; a < r; ++a)
        for (Index i = 0; i < n; ++i) HBP.row(a * n + i) -= PhiD(a, s) * M.row(i);
    }
    // |P|_F^2 counts each off-diagonal entry twice.
    const MatrixXd frob = 2.0 * MatrixXd::Ones(n, n) - MatrixXd::Identity(n, n);
    HPP.diagonal() += prog.rho * vech(frob);
    H.block(nB, nB, d, d) = HPP;
    H.block(0, nB, nB, d) = HBP;
    H.block(nB, 0, d, nB) = HBP.transpose();
  }
  c.Q = 2.0 * H;
  c.q = g;
  c.c0 = constant;

  // A K_0 = 0  ->  B phi_0 = 0.
  c.A_eq = MatrixXd::Zero(n, N);
  c.b_eq = VectorXd::Zero(n);
  for (Index a = 0; a < r; ++a)
    for (Index i = 0; i < n; ++i) c.A_eq(i, a * n + i) = Phi(0, a);

  const Index n_in = prog.n_ineq();
  c.n_nonneg = n_in;
  const Index rows = n_in + d + nP;
  c.G = MatrixXd::Zero(rows, N);
  c.h = VectorXd::Zero(rows);

  for (Index k = 0; k < n_in; ++k) {
    const auto z = prog.grid_points.col(k);
    const Index col = prog.grid_columns[static_cast<std::size_t>(k)];
    for (Index a = 0; a < r; ++a)
      for (Index i = 0; i < n; ++i) c.G(k, a * n + i) = z(i) * Phi(col, a);
    c.h(k) = -z.squaredNorm();
  }

  // s = svec(-(sym(A J) + I)) = h - G v with G v = svec(sym(B Psi)).
  const MatrixXd Psi = W.transpose() * prog.J;  // r x n
  const VectorXd neg_identity = svec(-MatrixXd::Identity(n, n));
  for (Index a = 0; a < r; ++a) {
    for (Index i = 0; i < n; ++i) {
      MatrixXd E = MatrixXd::Zero(n, r);
      E(i, a) = 1.0;
      c.G.block(n_in, a * n + i, d, 1) = svec(sym(E * Psi));
    }
  }
  c.h.segment(n_in, d) = neg_identity;
  c.psd.push_back({n, ConeRole::lmi});

  if (!prog.P_fixed) {
    // s = svec(P - I) = h - G v with G v = -svec(P) = -D vech(P).
    for (Index k = 0; k < d; ++k) {
      VectorXd e = VectorXd::Zero(d);
      e(k) = 1.0;
      c.G.block(n_in + d, nB + k, d, 1) = -svec(unvech(e, n));
    }
    c.h.segment(n_in + d, d) = neg_identity;
    c.psd.push_back({n, ConeRole::lyapunov_p});
  }
  return c;
}

}  // namespace

Index CanonicalConic::cone_degree() const {
  Index deg = n_nonneg;
  for (const auto& b : psd) deg += b.order;
  return deg;
}

double CanonicalConic::cost(const VectorXd& x) const { return 0.5 * x.dot(Q * x) + q.dot(x) + c0; }

MatrixXd CanonicalConic::lift() const {
  const Index r = basis.cols();
  const Index nP = P_fixed ? 0 : svec_dim(n);
  MatrixXd T = MatrixXd::Zero(n * m + nP, n * r + nP);
  for (Index a = 0; a < r; ++a)
    for (Index c = 0; c < m; ++c)
      for (Index i = 0; i < n; ++i) T(c * n + i, a * n + i) = basis(c, a);
  if (nP > 0) T.bottomRightCorner(nP, nP).setIdentity();
  return T;
}

std::pair<MatrixXd, MatrixXd> CanonicalConic::decanonicalize(const VectorXd& x) const {
  const Index r = basis.cols();
  if (x.size() != n_vars()) throw std::invalid_argument("decanonicalize: size mismatch");
  const MatrixXd B = Eigen::Map<const MatrixXd>(x.data(), n, r);
  MatrixXd A = B * basis.transpose();
  MatrixXd P = P_fixed ? MatrixXd(MatrixXd::Identity(n, n)) : unvech(x.tail(svec_dim(n)), n);
  return {std::move(A), std::move(P)};
}

VectorXd CanonicalConic::canonical_point(const MatrixXd& A, const MatrixXd& P) const {
  if (A.rows() != n || A.cols() != m) throw std::invalid_argument("canonical_point: A has wrong shape");
  const Index r = basis.cols();
  MatrixXd B;
  if (r == m && basis.isIdentity(0.0)) {
    B = A;
  } else {
    // Least squares in B for A = B W^T.
    B = basis.colPivHouseholderQr().solve(A.transpose()).transpose();
  }
  VectorXd x(n_vars());
  x.head(n * r) = Eigen::Map<const VectorXd>(B.data(), n * r);
  if (!P_fixed) x.tail(svec_dim(n)) = vech(P);
  return x;
}

std::string CanonicalConic::dump() const {
  std::ostringstream os;
  os << std::setprecision(17);
  auto triplets = [&os](const char* name, const MatrixXd& M) {
    Index nnz = 0;
    for (Index j = 0; j < M.cols(); ++j)
      for (Index i = 0; i < M.rows(); ++i)
        if (M(i, j) != 0.0) ++nnz;
    os << name << ' ' << M.rows() << ' ' << M.cols() << ' ' << nnz << '\n';
    for (Index j = 0; j < M.cols(); ++j)
      for (Index i = 0; i < M.rows(); ++i)
        if (M(i, j) != 0.0) os << i << ' ' << j << ' ' << M(i, j) << '\n';
  };
  auto vector = [&os](const char* name, const VectorXd& v) {
    os << name << ' ' << v.size() << '\n';
    for (Index i = 0; i < v.size(); ++i) os << v(i) << '\n';
  };
  os << "roaid-conic 1\n";
  os << "vars " << n_vars() << '\n';
  os << "c0 " << c0 << '\n';
  triplets("Q", Q);
  vector("q", q);
  triplets("A_eq", A_eq);
  vector("b_eq", b_eq);
  os << "cones zero " << A_eq.rows() << " nonneg " << n_nonneg << " psd " << psd.size();
  for (const auto& b : psd) os << ' ' << b.order;
  os << '\n';
  triplets("G", G);
  vector("h", h);
  return os.str();
}

CanonicalConic canonicalize(const ConicProgram& program) {
  return build(program, MatrixXd::Identity(program.m, program.m));
}

CanonicalConic canonicalize(const ConicProgram& program, const MatrixXd& basis) {
  if (basis.rows() != program.m || basis.cols() < 1)
    throw std::invalid_argument("canonicalize: basis must have m rows");
  return build(program, basis);
}

MatrixXd reduced_basis(const MatrixXd& K, double jitter) {
  if (!(jitter > 0.0)) throw std::invalid_argument("reduced_basis: jitter must be > 0");
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(K);
  if (eig.info() != Eigen::Success) throw std::runtime_error("reduced_basis: eigendecomposition failed");
  const double floor = jitter * K.trace() / static_cast<double>(K.rows());
  const VectorXd& w = eig.eigenvalues();
  Index keep = 0;
  for (Index i = 0; i < w.size(); ++i)
    if (w(i) > floor) ++keep;
  if (keep == 0) throw std::runtime_error("reduced_basis: Gram matrix is numerically zero");
  // Eigenvalues are ascending; the kept ones are the trailing block.
  const Index first = w.size() - keep;
  MatrixXd W = eig.eigenvectors().rightCols(keep);
  for (Index j = 0; j < keep; ++j) W.col(j) /= std::sqrt(w(first + j));
  return W;
}

CanonicalConic canonicalize_reduced(const ConicProgram& program, double jitter) {
  return build(program, reduced_basis(program.K, jitter));
}

bool KKTReport::primal_feasible(double tol) const {
  return eq_residual <= tol && ineq_violation <= tol && psd_min_eig >= -tol;
}

namespace {

struct Blocks {
  VectorXd ineq_slack;  // h - G v for the grid rows
  MatrixXd lmi_slack;   // -(sym(...) + I)
  MatrixXd p_slack;     // P - I
};

void fill_primal(KKTReport& rep, const Blocks& b, const MatrixXd& A, const ConicProgram& prog) {
  rep.eq_residual = (A * prog.K.col(0)).cwiseAbs().maxCoeff();
  rep.ineq_violation = 0.0;
  for (Index k = 0; k < b.ineq_slack.size(); ++k) rep.ineq_violation = std::max(rep.ineq_violation, -b.ineq_slack(k));
  rep.lmi_min_eig = min_eigenvalue(b.lmi_slack);
  rep.p_min_eig = prog.P_fixed ? 0.0 : min_eigenvalue(b.p_slack);
  rep.psd_min_eig = std::min(rep.lmi_min_eig, rep.p_min_eig);
}

}  // namespace

KKTReport kkt_report(const ConicProgram& prog, const MatrixXd& A, const MatrixXd& P,
                     const std::optional<Duals>& duals) {
  const Index n = prog.n;
  const Index m = prog.m;
  if (A.rows() != n || A.cols() != m) throw std::invalid_argument("kkt_report: A has wrong shape");
  const MatrixXd Pe = prog.P_fixed ? MatrixXd(MatrixXd::Identity(n, n)) : P;
  if (Pe.rows() != n || Pe.cols() != n) throw std::invalid_argument("kkt_report: P has wrong shape");

  KKTReport rep;
  rep.objective = prog.objective(A, Pe);

  const MatrixXd AK = A * prog.K;
  Blocks b;
  b.ineq_slack.resize(prog.n_ineq());
  for (Index k = 0; k < prog.n_ineq(); ++k) {
    const auto z = prog.grid_points.col(k);
    b.ineq_slack(k) = -z.squaredNorm() - z.dot(AK.col(prog.grid_columns[static_cast<std::size_t>(k)]));
  }
  const MatrixXd I = MatrixXd::Identity(n, n);
  b.lmi_slack = -(sym(A * prog.J) + I);
  b.p_slack = Pe - I;
  fill_primal(rep, b, A, prog);

  if (duals) {
    const Index d = svec_dim(n);
    const Index rows = prog.n_ineq() + d + (prog.P_fixed ? 0 : d);
    if (duals->y.size() != n || duals->z.size() != rows)
      throw std::invalid_argument("kkt_report: duals do not match the program");
    const VectorXd& zv = duals->z;
    const MatrixXd Zl = smat(zv.segment(prog.n_ineq(), d), n);

    // Gradient of the objective and of the Lagrangian terms with respect to A.
    MatrixXd gradA = 2.0 * prog.lambda * AK;
    MatrixXd gradP = MatrixXd::Zero(n, n);
    for (Index i = 0; i < prog.n_s(); ++i) {
      const Index col = prog.data_columns[static_cast<std::size_t>(i)];
      const VectorXd res = Pe * prog.targets.col(i) - AK.col(col);
      gradA -= 2.0 * res * prog.K.col(col).transpose();
      gradP += 2.0 * res * prog.targets.col(i).transpose();
    }
    MatrixXd consA = duals->y * prog.K.col(0).transpose();
    for (Index k = 0; k < prog.n_ineq(); ++k)
      consA += zv(k) * prog.grid_points.col(k) * prog.K.col(prog.grid_columns[static_cast<std::size_t>(k)]).transpose();
    consA += Zl * prog.J.transpose();
    const MatrixXd statA = gradA + consA;
    double stat = statA.cwiseAbs().maxCoeff();
    double scale = 1.0 + gradA.cwiseAbs().maxCoeff();

    double comp = b.ineq_slack.dot(zv.head(prog.n_ineq())) + (Zl * b.lmi_slack).trace();
    if (!prog.P_fixed) {
      // Gradient in svec coordinates: svec of the symmetrized matrix gradient.
      const VectorXd gradP_svec = svec(sym(gradP)) + 2.0 * prog.rho * svec(Pe);
      const MatrixXd Zp = smat(zv.tail(d), n);
      const VectorXd statP = gradP_svec - svec(Zp);
      stat = std::max(stat, statP.cwiseAbs().maxCoeff());
      scale = std::max(scale, 1.0 + gradP_svec.cwiseAbs().maxCoeff());
      comp += (Zp * b.p_slack).trace();
    }
    rep.dual_residual = stat / scale;
    rep.rel_gap = std::abs(comp) / std::max(1.0, std::abs(rep.objective));
  }
  return rep;
}

KKTReport kkt_report_weighted(const ConicProgram& prog, const MatrixXd& A, const MatrixXd& P,
                              const MatrixXd& T, const MatrixXd& W) {
  const Index n = prog.n;
  if (A.rows() != n || A.cols() != prog.m) throw std::invalid_argument("kkt_report_weighted: A has wrong shape");
  if (P.rows() != n || T.rows() != n || W.rows() != n || P.cols() != n || T.cols() != n || W.cols() != n)
    throw std::invalid_argument("kkt_report_weighted: P, T, W must be n x n");
  const Eigen::PartialPivLU<MatrixXd> Tlu(T);
  const MatrixXd AK = A * prog.K;
  const MatrixXd F = Tlu.solve(AK);  // column i is f(x_i)
  const MatrixXd PTinv = P * Tlu.inverse();

  KKTReport rep;
  double value = 0.0;
  for (Index i = 0; i < prog.n_s(); ++i) {
    const VectorXd e = prog.targets.col(i) - F.col(prog.data_columns[static_cast<std::size_t>(i)]);
    value += e.dot(W * e);
  }
  value += prog.lambda * (AK * A.transpose()).trace();
  if (!prog.P_fixed) value += prog.rho * P.squaredNorm();
  rep.objective = value;

  Blocks b;
  b.ineq_slack.resize(prog.n_ineq());
  for (Index k = 0; k < prog.n_ineq(); ++k) {
    const auto z = prog.grid_points.col(k);
    b.ineq_slack(k) = -z.squaredNorm() - z.dot(PTinv * AK.col(prog.grid_columns[static_cast<std::size_t>(k)]));
  }
  const MatrixXd I = MatrixXd::Identity(n, n);
  b.lmi_slack = -(sym(PTinv * A * prog.J) + I);
  b.p_slack = P - I;
  fill_primal(rep, b, A, prog);
  return rep;
}

}  // namespace roaid
