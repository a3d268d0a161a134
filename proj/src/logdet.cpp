#include "risopt/logdet.hpp"

#include <Eigen/Cholesky>

#include "risopt/linalg.hpp"

namespace ris {

namespace {

constexpr int kMaxOuter = 200;
constexpr int kMaxInner = 60;
constexpr double kMu = 10.0;
constexpr double kLn2 = 0.6931471805599453;

CMat term_block(const LogDetTerm& t, const RVec& x, int b) {
  CMat M = t.base[b];
  for (size_t v = 0; v < t.var_idx.size(); ++v) M += x[t.var_idx[v]] * t.coef[v][b];
  return M;
}

struct TermEval {
  bool in_domain = false;
  double slack = 0.0;
  RVec grad;   // of slack, dense over dim
  RMat hess;   // of slack (NSD part from logdet)
};

// Evaluates slack, and optionally its derivatives, for one term.
TermEval eval_term(const LogDetTerm& t, const RVec& x, int dim, bool with_derivs) {
  TermEval ev;
  const int nv = static_cast<int>(t.var_idx.size());
  double logdet2 = 0.0;
  RVec g = RVec::Zero(nv);
  RMat h = RMat::Zero(nv, nv);
  for (int b = 0; b < t.blocks(); ++b) {
    CMat M = term_block(t, x, b);
    Eigen::LLT<CMat> llt(M);
    if (llt.info() != Eigen::Success) return ev;  // out of domain
    const CMat& L = llt.matrixLLT();
    for (Eigen::Index i = 0; i < L.rows(); ++i) logdet2 += 2.0 * std::log(L(i, i).real());
    if (with_derivs) {
      std::vector<CMat> Minv_C(nv);
      for (int v = 0; v < nv; ++v) Minv_C[v] = llt.solve(t.coef[v][b]);
      for (int v = 0; v < nv; ++v) {
        g[v] += Minv_C[v].trace().real();
        for (int u = 0; u <= v; ++u) {
          const double huv = (Minv_C[u] * Minv_C[v]).trace().real();
          h(u, v) -= huv;
          if (u != v) h(v, u) -= huv;
        }
      }
    }
  }
  ev.in_domain = true;
  ev.slack = logdet2 / kLn2 - t.lhs.dot(x) - t.lhs0;
  if (ev.slack <= 0.0) {
    ev.in_domain = false;
    return ev;
  }
  if (with_derivs) {
    ev.grad = -t.lhs;
    for (int v = 0; v < nv; ++v) ev.grad[t.var_idx[v]] += g[v] / kLn2;
    ev.hess = RMat::Zero(dim, dim);
    for (int v = 0; v < nv; ++v)
      for (int u = 0; u < nv; ++u) ev.hess(t.var_idx[u], t.var_idx[v]) = h(u, v) / kLn2;
  }
  return ev;
}

struct Eval {
  bool in_domain = false;
  double barrier = 0.0;
  RVec grad;
  RMat hess;
};

Eval eval_barrier(const LogDetProblem& p, const RVec& x, double t, bool with_derivs,
                  double f0_ref = 0.0) {
  Eval ev;
  const int n = p.dim;
  double val = t * (p.objective.eval(x) - f0_ref);
  RVec g;
  RMat H;
  if (with_derivs) {
    g = t * p.objective.grad(x);
    H = t * p.objective.P;
  }
  for (const auto& term : p.logdets) {
    TermEval te = eval_term(term, x, n, with_derivs);
    if (!te.in_domain) return ev;
    val -= std::log(te.slack);
    if (with_derivs) {
      const double inv = 1.0 / te.slack;
      g -= inv * te.grad;
      H += (inv * inv) * (te.grad * te.grad.transpose()) - inv * te.hess;
    }
  }
  for (const auto& [a, b] : p.lin_ge) {
    const double s = a.dot(x) - b;
    if (s <= 0.0) return ev;
    val -= std::log(s);
    if (with_derivs) {
      g -= a / s;
      H += (a * a.transpose()) / (s * s);
    }
  }
  for (const auto& q : p.quad_le) {
    const double f = q.eval(x);
    if (f >= 0.0) return ev;
    val -= std::log(-f);
    if (with_derivs) {
      const RVec cg = q.grad(x);
      const double inv = 1.0 / (-f);
      g += inv * cg;
      H += (inv * inv) * (cg * cg.transpose()) + inv * q.P;
    }
  }
  ev.in_domain = true;
  ev.barrier = val;
  if (with_derivs) {
    ev.grad = std::move(g);
    ev.hess = std::move(H);
  }
  return ev;
}

int constraint_count(const LogDetProblem& p) {
  return static_cast<int>(p.logdets.size() + p.lin_ge.size() + p.quad_le.size());
}

void center(const LogDetProblem& p, double t, RVec& x, int early_exit_idx = -1,
            double early_exit_thresh = 0.0) {
  const int n = p.dim;
  const double f0_ref = p.objective.eval(x);
  for (int it = 0; it < kMaxInner; ++it) {
    if (early_exit_idx >= 0 && x[early_exit_idx] < early_exit_thresh) return;
    Eval ev = eval_barrier(p, x, t, true, f0_ref);
    if (!ev.in_domain)
      throw NonPsdIterateError("logdet: iterate left the domain (step-size bug)");
    RVec d;
    double reg = 0.0;
    const double hscale = std::max(1.0, ev.hess.cwiseAbs().maxCoeff());
    const double gnorm = ev.grad.norm();
    for (;;) {
      const RMat Hreg = ev.hess + reg * RMat::Identity(n, n);
      Eigen::LDLT<RMat> ldlt(Hreg);
      if (ldlt.info() == Eigen::Success) {
        d = ldlt.solve(-ev.grad);
        if (d.allFinite() && ev.grad.dot(d) <= 0.0 &&
            (Hreg * d + ev.grad).norm() <= 1e-8 * (gnorm + hscale * d.norm()) + 1e-300)
          break;
      }
      reg = (reg == 0.0) ? 1e-12 * hscale : reg * 100.0;
      if (reg > 1e8 * hscale) throw Error("logdet: Newton system unsolvable");
    }
    const double dec2 = -ev.grad.dot(d);
    if (dec2 * 0.5 < 1e-11) return;
    const double slope = ev.grad.dot(d);
    const double dnorm = d.norm();
    double a = std::min(1.0, 1e3 * (1.0 + x.norm()) / std::max(dnorm, 1e-300));
    int ls = 0;
    for (; ls < 80; ++ls) {
      Eval trial = eval_barrier(p, x + a * d, t, false, f0_ref);
      if (trial.in_domain && trial.barrier <= ev.barrier + 0.3 * a * slope) {
        x += a * d;
        break;
      }
      a *= 0.5;
    }
    if (ls >= 80) return;
    if (a * dnorm <= 1e-13 * (1.0 + x.norm())) return;  // noise floor
  }
  throw MaxIterationsError("logdet: inner Newton iteration cap exceeded");
}

RVec barrier_loop(const LogDetProblem& p, RVec x, double tol, int early_exit_idx = -1,
                  double early_exit_thresh = 0.0, double* t_out = nullptr) {
  const int m = constraint_count(p);
  double t = 1.0;
  int outer = 0;
  for (;;) {
    if (outer++ >= kMaxOuter) throw MaxIterationsError("logdet: outer iteration cap exceeded");
    center(p, t, x, early_exit_idx, early_exit_thresh);
    if (early_exit_idx >= 0 && x[early_exit_idx] < early_exit_thresh) break;
    if (m == 0 || static_cast<double>(m) / t < tol) break;
    t *= kMu;
  }
  if (t_out) *t_out = t;
  return x;
}

// Phase-I: minimize s with every constraint relaxed by sigma_i s, where
// sigma_i normalizes the start violation of constraint i to at most one.
RVec phase1(const LogDetProblem& p, double tol) {
  const int n = p.dim;
  RVec x0 = RVec::Zero(n);
  if (p.start && p.start->size() == n) x0 = *p.start;

  LogDetProblem aux;
  aux.dim = n + 1;
  aux.objective.P = RMat::Zero(n + 1, n + 1);
  aux.objective.q = RVec::Zero(n + 1);
  aux.objective.q[n] = 1.0;
  for (const auto& t : p.logdets) {
    // Matrix arguments must be PD at the start; the slack cannot repair that.
    for (int b = 0; b < t.blocks(); ++b) {
      Eigen::LLT<CMat> llt(term_block(t, x0, b));
      if (llt.info() != Eigen::Success)
        throw InfeasibleError("logdet: phase-I start has non-PD matrix argument");
    }
    LogDetTerm e = t;
    e.lhs.conservativeResize(n + 1);
    e.lhs[n] = -std::max(1.0, -logdet_slack(t, x0));
    aux.logdets.push_back(std::move(e));
  }
  for (const auto& [a, b] : p.lin_ge) {
    RVec e(n + 1);
    e.head(n) = a;
    e[n] = std::max(1.0, b - a.dot(x0));
    aux.lin_ge.emplace_back(e, b);
  }
  for (const auto& q : p.quad_le) {
    Quadratic e;
    e.P = RMat::Zero(n + 1, n + 1);
    e.P.topLeftCorner(n, n) = q.P;
    e.q = RVec::Zero(n + 1);
    e.q.head(n) = q.q;
    e.q[n] = -std::max(1.0, q.eval(x0));
    e.c = q.c;
    aux.quad_le.push_back(std::move(e));
  }
  RVec z0(n + 1);
  z0.head(n) = x0;
  z0[n] = 1.0 + 1e-3;

  RVec z = barrier_loop(aux, z0, std::min(tol, 1e-9), n, -1e-9);
  if (z[n] >= -1e-12)
    throw InfeasibleError("logdet: phase-I found no strictly feasible point");
  return z.head(n);
}

bool strictly_feasible(const LogDetProblem& p, const RVec& x) {
  Eval ev = eval_barrier(p, x, 1.0, false);
  return ev.in_domain;
}

}  // namespace

double logdet_slack(const LogDetTerm& term, const RVec& x) {
  double logdet2 = 0.0;
  for (int b = 0; b < term.blocks(); ++b) {
    Eigen::LLT<CMat> llt(term_block(term, x, b));
    if (llt.info() != Eigen::Success)
      throw SingularMatrixError("logdet_slack: block not positive definite");
    const CMat& L = llt.matrixLLT();
    for (Eigen::Index i = 0; i < L.rows(); ++i) logdet2 += 2.0 * std::log(L(i, i).real());
  }
  return logdet2 / kLn2 - term.lhs.dot(x) - term.lhs0;
}

RVec logdet_slack_gradient(const LogDetTerm& term, const RVec& x, int dim) {
  TermEval te = eval_term(term, x, dim, true);
  if (!te.in_domain) {
    // Slack may be non-positive at a probe point; recompute derivatives
    // directly (blocks must still be PD).
    RVec g = -term.lhs;
    for (int b = 0; b < term.blocks(); ++b) {
      CMat M = term_block(term, x, b);
      Eigen::LLT<CMat> llt(M);
      if (llt.info() != Eigen::Success)
        throw SingularMatrixError("logdet_slack_gradient: block not PD");
      for (size_t v = 0; v < term.var_idx.size(); ++v)
        g[term.var_idx[v]] += llt.solve(term.coef[v][b]).trace().real() / kLn2;
    }
    return g;
  }
  return te.grad;
}

LogDetResult solve_logdet_program(const LogDetProblem& problem, double tol) {
  if (tol <= 0.0) throw Error("logdet: tol must be positive");
  if (problem.dim <= 0) throw DimensionError("logdet: empty decision vector");
  for (const auto& t : problem.logdets) {
    if (t.lhs.size() != problem.dim) throw DimensionError("logdet: lhs dimension");
    for (const auto& per_var : t.coef)
      if (static_cast<int>(per_var.size()) != t.blocks())
        throw DimensionError("logdet: coefficient block count");
  }

  RVec x0;
  if (problem.start && problem.start->size() == problem.dim &&
      strictly_feasible(problem, *problem.start)) {
    x0 = *problem.start;
  } else {
    x0 = phase1(problem, tol);
  }
  double t_final = 1.0;
  RVec x = barrier_loop(problem, std::move(x0), tol, -1, 0.0, &t_final);

  LogDetResult res;
  res.x = x;
  res.objective = problem.objective.eval(x);
  // KKT verification with least-squares multipliers over the near-active set.
  const RVec g0 = problem.objective.grad(x);
  std::vector<RVec> slack_grads;  // gradient of each slack (>= 0 constraint form)
  std::vector<double> slacks;
  for (const auto& term : problem.logdets) {
    TermEval te = eval_term(term, x, problem.dim, true);
    if (!te.in_domain) throw NonPsdIterateError("logdet: returned point left the domain");
    slack_grads.push_back(te.grad);
    slacks.push_back(te.slack);
  }
  for (const auto& [a, b] : problem.lin_ge) {
    slack_grads.push_back(a);
    slacks.push_back(a.dot(x) - b);
  }
  for (const auto& q : problem.quad_le) {
    slack_grads.push_back(-q.grad(x));
    slacks.push_back(-q.eval(x));
  }
  const int m = static_cast<int>(slacks.size());
  RVec lambda = RVec::Zero(m);
  std::vector<int> active;
  const double act_thresh = 100.0 * static_cast<double>(std::max(m, 1)) / t_final;
  for (int i = 0; i < m; ++i) {
    if (slacks[i] <= act_thresh)
      active.push_back(i);
    else
      lambda[i] = 1.0 / (t_final * slacks[i]);
  }
  if (!active.empty()) {
    RMat A(problem.dim, static_cast<int>(active.size()));
    for (size_t j = 0; j < active.size(); ++j) A.col(j) = slack_grads[active[j]];
    RVec lam = A.colPivHouseholderQr().solve(g0);
    for (size_t j = 0; j < active.size(); ++j) lambda[active[j]] = std::max(lam[j], 0.0);
  }
  RVec stat = g0;
  double comp = 0.0;
  for (int i = 0; i < m; ++i) {
    stat -= lambda[i] * slack_grads[i];
    comp = std::max(comp, lambda[i] * slacks[i]);
  }
  const double gscale = std::max(1.0, g0.cwiseAbs().maxCoeff());
  res.kkt_residual = std::max(stat.cwiseAbs().maxCoeff() / gscale, comp);
  return res;
}

}  // namespace ris
