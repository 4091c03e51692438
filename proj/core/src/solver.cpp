#include "roaid/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace roaid {

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::infeasible_detected: return "infeasible_detected";
    case SolveStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Layout {
  Index l = 0;
  std::vector<Index> order;
  std::vector<Index> offset;  // start row of each PSD block
  Index rows = 0;
  Index degree = 0;
};

Layout make_layout(const CanonicalConic& c) {
  Layout lay;
  lay.l = c.n_nonneg;
  Index row = c.n_nonneg;
  lay.degree = c.n_nonneg;
  for (const auto& b : c.psd) {
    lay.order.push_back(b.order);
    lay.offset.push_back(row);
    row += svec_dim(b.order);
    lay.degree += b.order;
  }
  lay.rows = row;
  return lay;
}

// Nesterov-Todd scaling W with W s = W^{-T} z = lambda.
struct Scaling {
  VectorXd w;       // nonnegative part: sqrt(z / s)
  VectorXd lam_l;   // sqrt(s z)
  std::vector<MatrixXd> r, rinv;
  std::vector<VectorXd> lam;  // eigenvalues of the diagonal scaled point
};

MatrixXd psd_factor(const MatrixXd& X) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(X);
  const VectorXd ev = es.eigenvalues().cwiseMax(std::numeric_limits<double>::min());
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
}

Scaling compute_scaling(const Layout& lay, const VectorXd& s, const VectorXd& z) {
  Scaling W;
  W.w = (z.head(lay.l).array() / s.head(lay.l).array()).sqrt();
  W.lam_l = (z.head(lay.l).array() * s.head(lay.l).array()).sqrt();
  for (std::size_t b = 0; b < lay.order.size(); ++b) {
    const Index k = lay.order[b];
    const Index d = svec_dim(k);
    const MatrixXd Ls = psd_factor(smat(s.segment(lay.offset[b], d), k));
    const MatrixXd Lz = psd_factor(smat(z.segment(lay.offset[b], d), k));
    Eigen::JacobiSVD<MatrixXd> svd(Lz.transpose() * Ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const VectorXd sig = svd.singularValues().cwiseMax(std::numeric_limits<double>::min());
    MatrixXd r = Ls * svd.matrixV() * sig.cwiseSqrt().cwiseInverse().asDiagonal();
    W.rinv.push_back(r.inverse());
    W.r.push_back(std::move(r));
    W.lam.push_back(sig);
  }
  return W;
}

// W applied to a primal direction.
VectorXd apply_W(const Layout& lay, const Scaling& W, const VectorXd& u) {
  VectorXd out(u.size());
  out.head(lay.l) = W.w.cwiseProduct(u.head(lay.l));
  for (std::size_t b = 0; b < lay.order.size(); ++b) {
    const Index k = lay.order[b], d = svec_dim(k);
    out.segment(lay.offset[b], d) = svec(W.rinv[b] * smat(u.segment(lay.offset[b], d), k) * W.rinv[b].transpose());
  }
  return out;
}

// W^{-T} applied to a dual direction.
VectorXd apply_W_invT(const Layout& lay, const Scaling& W, const VectorXd& u) {
  VectorXd out(u.size());
  out.head(lay.l) = u.head(lay.l).cwiseQuotient(W.w);
  for (std::size_t b = 0; b < lay.order.size(); ++b) {
    const Index k = lay.order[b], d = svec_dim(k);
    out.segment(lay.offset[b], d) = svec(W.r[b].transpose() * smat(u.segment(lay.offset[b], d), k) * W.r[b]);
  }
  return out;
}

// W^T applied to a scaled vector.
VectorXd apply_WT(const Layout& lay, const Scaling& W, const VectorXd& u) {
  VectorXd out(u.size());
  out.head(lay.l) = W.w.cwiseProduct(u.head(lay.l));
  for (std::size_t b = 0; b < lay.order.size(); ++b) {
    const Index k = lay.order[b], d = svec_dim(k);
    out.segment(lay.offset[b], d) = svec(W.rinv[b].transpose() * smat(u.segment(lay.offset[b], d), k) * W.rinv[b]);
  }
  return out;
}

// Dense svec matrix of U -> M U M with M = (r r^T)^{-1}; this is W^T W.
MatrixXd wtw_block(const MatrixXd& rinv, Index k) {
  const MatrixXd M = rinv.transpose() * rinv;
  const Index d = svec_dim(k);
  MatrixXd D(d, d);
  for (Index j = 0; j < d; ++j) {
    VectorXd e = VectorXd::Zero(d);
    e(j) = 1.0;
    const MatrixXd E = smat(e, k);
    D.col(j) = svec(M * E * M);
  }
  return sym(D);
}

VectorXd apply_WTW(const Layout& lay, const Scaling& W, const std::vector<MatrixXd>& blocks,
                   const VectorXd& u) {
  VectorXd out(u.size());
  out.head(lay.l) = W.w.array().square().matrix().cwiseProduct(u.head(lay.l));
  for (std::size_t b = 0; b < lay.order.size(); ++b) {
    const Index d = svec_dim(lay.order[b]);
    out.segment(lay.offset[b], d) = blocks[b] * u.segment(lay.offset[b], d);
  }
  return out;
}

// Scaled point lambda as a cone vector (diagonal PSD blocks).
VectorXd lambda_vector(const Layout& lay, const Scaling& W) {
  VectorXd out = VectorXd::Zero(lay.rows);
  out.head(lay.l) = W.lam_l;
  for (std::size_t b = 0; b < lay.order.size(); ++b)
    out.segment(lay.offset[b], svec_dim(lay.order[b])) = svec(MatrixXd(W.lam[b].asDiagonal()));
  return out;
}

// Jordan product u o v.
VectorXd jordan(const Layout& lay, const VectorXd& u, const VectorXd& v) {
  VectorXd out(u.size());
  out.head(lay.l) = u.head(lay.l).cwiseProduct(v.head(lay.l));
  for (std::size_t b = 0; b < lay.order.size(); ++b) {
    const Index k = lay.order[b], d = svec_dim(k);
    const MatrixXd U = smat(u.segment(lay.offset[b], d), k);
    const MatrixXd V = smat(v.segment(lay.offset[b], d), k);
    out.segment(lay.offset[b], d) = svec(0.5 * (U * V + V * U));
  }
  return out;
}

// Solves lambda o x = r for x (lambda diagonal in the PSD blocks).
VectorXd jordan_solve(const Layout& lay, const Scaling& W, const VectorXd& r) {
  VectorXd out(r.size());
  out.head(lay.l) = r.head(lay.l).cwiseQuotient(W.lam_l);
  for (std::size_t b = 0; b < lay.order.size(); ++b) {
    const Index k = lay.order[b], d = svec_dim(k);
    const MatrixXd R = smat(r.segment(lay.offset[b], d), k);
    MatrixXd X(k, k);
    for (Index i = 0; i < k; ++i)
      for (Index j = 0; j < k; ++j) X(i, j) = 2.0 * R(i, j) / (W.lam[b](i) + W.lam[b](j));
    out.segment(lay.offset[b], d) = svec(X);
  }
  return out;
}

VectorXd identity_vector(const Layout& lay) {
  VectorXd e = VectorXd::Zero(lay.rows);
  e.head(lay.l).setOnes();
  for (std::size_t b = 0; b < lay.order.size(); ++b)
    e.segment(lay.offset[b], svec_dim(lay.order[b])) = svec(MatrixXd::Identity(lay.order[b], lay.order[b]));
  return e;
}

// Largest t with lambda + t * delta in the cone, for diagonal PSD lambda.
double max_step(const Layout& lay, const Scaling& W, const VectorXd& delta) {
  double t = kInf;
  for (Index i = 0; i < lay.l; ++i)
    if (delta(i) < 0.0) t = std::min(t, -W.lam_l(i) / delta(i));
  for (std::size_t b = 0; b < lay.order.size(); ++b) {
    const Index k = lay.order[b], d = svec_dim(k);
    const VectorXd isq = W.lam[b].cwiseSqrt().cwiseInverse();
    const MatrixXd D = isq.asDiagonal() * smat(delta.segment(lay.offset[b], d), k) * isq.asDiagonal();
    const double mu = min_eigenvalue(D);
    if (mu < 0.0) t = std::min(t, -1.0 / mu);
  }
  return t;
}

// Most negative "eigenvalue" of a cone vector (min entry / min eigenvalue).
double cone_min(const Layout& lay, const VectorXd& u) {
  double v = kInf;
  if (lay.l > 0) v = u.head(lay.l).minCoeff();
  for (std::size_t b = 0; b < lay.order.size(); ++b)
    v = std::min(v, min_eigenvalue(smat(u.segment(lay.offset[b], svec_dim(lay.order[b])), lay.order[b])));
  return v;
}

// Solves [H A^T; A 0] [dx; dy] = [rx; ry] with a regularized Cholesky of H,
// a Schur complement for the equality rows and iterative refinement.
class KktSolver {
 public:
  KktSolver(const MatrixXd& H, const MatrixXd& A) : H_(H), A_(A) {
    const double scale = std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
    double delta = 1e-13 * scale;
    for (int attempt = 0; attempt < 8; ++attempt, delta *= 100.0) {
      MatrixXd Hr = H;
      Hr.diagonal().array() += delta;
      llt_.compute(Hr);
      if (llt_.info() == Eigen::Success) {
        ok_ = true;
        break;
      }
    }
    if (!ok_) return;
    if (A_.rows() > 0) {
      const MatrixXd HinvAt = llt_.solve(A_.transpose());
      MatrixXd S = A_ * HinvAt;
      S.diagonal().array() += 1e-14 * std::max(1.0, S.diagonal().cwiseAbs().maxCoeff());
      schur_.compute(S);
      if (schur_.info() != Eigen::Success) ok_ = false;
    }
  }

  bool ok() const { return ok_; }

  void solve(const VectorXd& rx, const VectorXd& ry, VectorXd& dx, VectorXd& dy) const {
    dx = VectorXd::Zero(rx.size());
    dy = VectorXd::Zero(ry.size());
    VectorXd ex = rx, ey = ry;
    for (int it = 0; it < 3; ++it) {
      VectorXd cx, cy;
      approx(ex, ey, cx, cy);
      dx += cx;
      dy += cy;
      ex = rx - H_ * dx;
      if (A_.rows() > 0) {
        ex -= A_.transpose() * dy;
        ey = ry - A_ * dx;
      }
    }
  }

 private:
  void approx(const VectorXd& rx, const VectorXd& ry, VectorXd& dx, VectorXd& dy) const {
    const VectorXd u = llt_.solve(rx);
    if (A_.rows() == 0) {
      dx = u;
      dy = VectorXd::Zero(0);
      return;
    }
    dy = schur_.solve(A_ * u - ry);
    dx = llt_.solve(rx - A_.transpose() * dy);
  }

  const MatrixXd& H_;
  const MatrixXd& A_;
  Eigen::LLT<MatrixXd> llt_;
  Eigen::LDLT<MatrixXd> schur_;
  bool ok_ = false;
};

void validate(const CanonicalConic& c) {
  const Index N = c.Q.rows();
  if (c.Q.cols() != N || c.q.size() != N) throw std::invalid_argument("solve: Q/q size mismatch");
  if (c.A_eq.cols() != N || c.A_eq.rows() != c.b_eq.size()) throw std::invalid_argument("solve: A_eq/b_eq size mismatch");
  if (c.G.cols() != N || c.G.rows() != c.h.size()) throw std::invalid_argument("solve: G/h size mismatch");
  Index rows = c.n_nonneg;
  for (const auto& b : c.psd) rows += svec_dim(b.order);
  if (rows != c.G.rows()) throw std::invalid_argument("solve: cone sizes do not match G");
}

}  // namespace

Solution solve(const CanonicalConic& c, const SolverOptions& opt) {
  if (!(opt.feas_tol > 0.0) || !(opt.gap_tol > 0.0) || opt.max_iter < 1)
    throw std::invalid_argument("solve: tolerances must be > 0 and max_iter >= 1");
  validate(c);
  const auto t0 = std::chrono::steady_clock::now();
  const Layout lay = make_layout(c);
  const Index N = c.n_vars();
  const Index p = c.A_eq.rows();
  const VectorXd e = identity_vector(lay);

  Solution sol;
  auto finish = [&](SolveStatus st, const VectorXd& x, const VectorXd& s, const VectorXd& y,
                    const VectorXd& z, int iters, std::string msg) {
    sol.status = st;
    sol.x = x;
    sol.s = s;
    sol.duals = {y, z};
    const Index structured = c.n * c.basis.cols() + (c.P_fixed ? 0 : svec_dim(c.n));
    if (c.n > 0 && c.basis.rows() == c.m && structured == N) {
      auto [A, P] = c.decanonicalize(x);
      sol.A = std::move(A);
      sol.P = std::move(P);
    }
    sol.objective = c.cost(x);
    sol.iterations = iters;
    sol.message = std::move(msg);
    sol.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return sol;
  };

  const double bnorm = std::max(1.0, c.b_eq.norm());
  const double hnorm = std::max(1.0, c.h.norm());
  const double qnorm = std::max(1.0, c.q.norm());

  // Initial point from the KKT system with W = I.
  VectorXd x, y, s, z;
  {
    const MatrixXd H = c.Q + c.G.transpose() * c.G;
    KktSolver kkt(H, c.A_eq);
    if (!kkt.ok()) return finish(SolveStatus::numerical_failure, VectorXd::Zero(N), VectorXd::Zero(lay.rows),
                                 VectorXd::Zero(p), VectorXd::Zero(lay.rows), 0, "initial factorization failed");
    kkt.solve(-c.q + c.G.transpose() * c.h, c.b_eq, x, y);
    z = c.G * x - c.h;
    s = -z;
    if (lay.rows > 0) {
      const double ts = -cone_min(lay, s);
      if (ts >= -1e-8 * std::max(1.0, s.norm())) s += (1.0 + ts) * e;
      const double tz = -cone_min(lay, z);
      if (tz >= -1e-8 * std::max(1.0, z.norm())) z += (1.0 + tz) * e;
    }
  }

  double best_merit = kInf;
  int stalled = 0;
  for (int it = 0; it <= opt.max_iter; ++it) {
    const VectorXd Qx = c.Q * x;
    VectorXd rx = Qx + c.q + c.G.transpose() * z;
    if (p > 0) rx += c.A_eq.transpose() * y;
    const VectorXd ry = c.A_eq * x - c.b_eq;
    const VectorXd rz = c.G * x + s - c.h;
    const double gap = lay.rows > 0 ? s.dot(z) : 0.0;
    const double pcost = 0.5 * x.dot(Qx) + c.q.dot(x) + c.c0;
    const double pres = std::max(ry.norm() / bnorm, rz.norm() / hnorm);
    const double dres = rx.norm() / std::max(qnorm, Qx.norm());
    const double relgap = gap / std::max(1.0, std::abs(pcost));
    sol.primal_residual = pres;
    sol.dual_residual = dres;
    sol.rel_gap = relgap;

    if (opt.verbose)
      std::fprintf(stderr, "%3d pcost % .6e pres %.2e dres %.2e gap %.2e\n", it, pcost, pres, dres, relgap);
    if (!x.allFinite() || !z.allFinite() || !s.allFinite() || !std::isfinite(pcost))
      return finish(SolveStatus::numerical_failure, x, s, y, z, it, "non-finite iterate");
    if (pres <= opt.feas_tol && dres <= opt.feas_tol && relgap <= opt.gap_tol)
      return finish(SolveStatus::optimal, x, s, y, z, it, "converged");

    // Primal infeasibility: A^T y + G^T z ~ 0 with b^T y + h^T z < 0.
    {
      const double t = -(c.b_eq.dot(y) + c.h.dot(z));
      if (t > 0.0) {
        VectorXd ray = c.G.transpose() * z;
        if (p > 0) ray += c.A_eq.transpose() * y;
        if (ray.norm() <= opt.feas_tol * t && z.norm() > 1e6 * std::max(1.0, x.norm()))
          return finish(SolveStatus::infeasible_detected, x, s, y / t, z / t, it, "primal infeasibility certificate");
      }
    }
    if (it == opt.max_iter) break;
    const double merit = std::max({pres / opt.feas_tol, dres / opt.feas_tol, relgap / opt.gap_tol});
    if (merit < 0.5 * best_merit) {
      best_merit = merit;
      stalled = 0;
    } else if (++stalled >= 15) {
      return finish(SolveStatus::max_iter, x, s, y, z, it, "no progress");
    }

    const Scaling W = compute_scaling(lay, s, z);
    std::vector<MatrixXd> blocks;
    for (std::size_t b = 0; b < lay.order.size(); ++b) blocks.push_back(wtw_block(W.rinv[b], lay.order[b]));

    // H = Q + G^T W^T W G.
    MatrixXd H = c.Q;
    if (lay.l > 0) {
      const MatrixXd X = W.w.asDiagonal() * c.G.topRows(lay.l);
      H.noalias() += X.transpose() * X;
    }
    for (std::size_t b = 0; b < lay.order.size(); ++b) {
      const auto Gb = c.G.middleRows(lay.offset[b], svec_dim(lay.order[b]));
      H.noalias() += Gb.transpose() * blocks[b] * Gb;
    }
    H = sym(H);
    KktSolver kkt(H, c.A_eq);
    if (!kkt.ok()) return finish(SolveStatus::numerical_failure, x, s, y, z, it, "KKT factorization failed");

    const VectorXd lam = lambda_vector(lay, W);
    // Solves Q dx + A^T dy + G^T dz = bx, A dx = by, G dx + ds = bz,
    // W ds + W^{-T} dz = bd.
    auto linsolve = [&](const VectorXd& bx, const VectorXd& by, const VectorXd& bz, const VectorXd& bd,
                        VectorXd& dx, VectorXd& dy, VectorXd& dz, VectorXd& ds) {
      const VectorXd wtd = apply_WT(lay, W, bd);
      kkt.solve(bx - c.G.transpose() * (wtd - apply_WTW(lay, W, blocks, bz)), by, dx, dy);
      ds = bz - c.G * dx;
      dz = wtd - apply_WTW(lay, W, blocks, ds);
    };
    // Newton step for right-hand side d of W ds + W^{-T} dz = d, refined
    // against the unreduced equations.
    auto newton = [&](const VectorXd& d, VectorXd& dx, VectorXd& dy, VectorXd& dz, VectorXd& ds) {
      const VectorXd bx = -rx, by = -ry, bz = -rz;
      linsolve(bx, by, bz, d, dx, dy, dz, ds);
      for (int k = 0; k < 2; ++k) {
        VectorXd ex = bx - c.Q * dx - c.G.transpose() * dz;
        if (p > 0) ex -= c.A_eq.transpose() * dy;
        const VectorXd ey = by - c.A_eq * dx;
        const VectorXd ez = bz - c.G * dx - ds;
        const VectorXd ed = d - apply_W(lay, W, ds) - apply_W_invT(lay, W, dz);
        VectorXd cx, cy, cz, cs;
        linsolve(ex, ey, ez, ed, cx, cy, cz, cs);
        dx += cx;
        dy += cy;
        dz += cz;
        ds += cs;
      }
    };

    VectorXd dxa, dya, dza, dsa;
    newton(-lam, dxa, dya, dza, dsa);
    const VectorXd ws_a = apply_W(lay, W, dsa);
    const VectorXd wz_a = apply_W_invT(lay, W, dza);
    double alpha_a = 1.0;
    if (lay.rows > 0) alpha_a = std::min({1.0, max_step(lay, W, ws_a), max_step(lay, W, wz_a)});

    double sigma = 0.0;
    double mu = 0.0;
    if (lay.rows > 0) {
      mu = gap / static_cast<double>(lay.degree);
      const double gap_a = (s + alpha_a * dsa).dot(z + alpha_a * dza);
      sigma = std::clamp(gap_a / gap, 0.0, 1.0);
      sigma = sigma * sigma * sigma;
    }

    VectorXd dx, dy, dz, ds;
    if (lay.rows > 0) {
      const VectorXd rhs = -jordan(lay, lam, lam) - jordan(lay, ws_a, wz_a) + sigma * mu * e;
      newton(jordan_solve(lay, W, rhs), dx, dy, dz, ds);
    } else {
      dx = dxa;
      dy = dya;
      dz = dza;
      ds = dsa;
    }

    double alpha = 1.0;
    if (lay.rows > 0) {
      const double smax = std::min(max_step(lay, W, apply_W(lay, W, ds)), max_step(lay, W, apply_W_invT(lay, W, dz)));
      alpha = std::min(1.0, 0.99 * smax);
    }
    x += alpha * dx;
    if (p > 0) y += alpha * dy;
    s += alpha * ds;
    z += alpha * dz;
    sol.iterations = it + 1;
  }
  return finish(SolveStatus::max_iter, x, s, y, z, opt.max_iter, "iteration limit reached");
}

KKTReport verify_solution(const CanonicalConic& c, const Solution& sol) {
  validate(c);
  if (sol.x.size() != c.n_vars()) throw std::invalid_argument("verify_solution: solution size mismatch");
  const Layout lay = make_layout(c);
  KKTReport rep;
  const VectorXd& x = sol.x;
  rep.objective = c.cost(x);
  rep.eq_residual = c.A_eq.rows() > 0 ? (c.A_eq * x - c.b_eq).cwiseAbs().maxCoeff() : 0.0;
  const VectorXd slack = c.h - c.G * x;
  rep.ineq_violation = lay.l > 0 ? std::max(0.0, -slack.head(lay.l).minCoeff()) : 0.0;
  rep.lmi_min_eig = kInf;
  rep.p_min_eig = kInf;
  double generic = kInf;
  for (std::size_t b = 0; b < lay.order.size(); ++b) {
    const double ev = min_eigenvalue(smat(slack.segment(lay.offset[b], svec_dim(lay.order[b])), lay.order[b]));
    switch (c.psd[b].role) {
      case ConeRole::lmi: rep.lmi_min_eig = std::min(rep.lmi_min_eig, ev); break;
      case ConeRole::lyapunov_p: rep.p_min_eig = std::min(rep.p_min_eig, ev); break;
      case ConeRole::generic: generic = std::min(generic, ev); break;
    }
  }
  rep.psd_min_eig = std::min({rep.lmi_min_eig, rep.p_min_eig, generic});
  if (!std::isfinite(rep.lmi_min_eig)) rep.lmi_min_eig = 0.0;
  if (!std::isfinite(rep.p_min_eig)) rep.p_min_eig = 0.0;
  if (!std::isfinite(rep.psd_min_eig)) rep.psd_min_eig = 0.0;

  if (sol.duals.z.size() == c.G.rows() && sol.duals.y.size() == c.A_eq.rows()) {
    const VectorXd Qx = c.Q * x;
    VectorXd r = Qx + c.q + c.G.transpose() * sol.duals.z;
    if (c.A_eq.rows() > 0) r += c.A_eq.transpose() * sol.duals.y;
    const double scale = std::max({1.0, c.q.cwiseAbs().maxCoeff(), Qx.size() ? Qx.cwiseAbs().maxCoeff() : 0.0});
    double dres = r.size() ? r.cwiseAbs().maxCoeff() / scale : 0.0;
    // Dual cone membership.
    if (lay.rows > 0) dres = std::max(dres, std::max(0.0, -cone_min(lay, sol.duals.z)) / scale);
    rep.dual_residual = dres;
    rep.rel_gap = std::abs(slack.dot(sol.duals.z)) / std::max(1.0, std::abs(rep.objective));
  }
  return rep;
}

}  // namespace roaid
