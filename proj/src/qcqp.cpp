#include "risopt/qcqp.hpp"

#include <Eigen/Cholesky>

#include "risopt/linalg.hpp"

#include <cstdio>
#include <cstdlib>

namespace ris {

namespace {

constexpr int kMaxOuter = 200;
constexpr int kMaxInner = 50;
constexpr double kMu = 10.0;
constexpr double kArmijoAlpha = 0.3;
constexpr double kArmijoBeta = 0.5;

void validate(const QcqpProblem& p) {
  if (p.dim <= 0) throw DimensionError("qcqp: empty decision vector");
  if (p.objective.P.rows() != p.dim || p.objective.q.size() != p.dim)
    throw DimensionError("qcqp: objective dimension mismatch");
  if (!is_psd(p.objective.P)) throw Error("qcqp: objective quadratic is not PSD");
  for (const auto& c : p.cons) {
    if (c.P.rows() != p.dim || c.q.size() != p.dim)
      throw DimensionError("qcqp: constraint dimension mismatch");
    if (!is_psd(c.P)) throw Error("qcqp: constraint quadratic is not PSD");
  }
}

bool strictly_feasible(const QcqpProblem& p, const RVec& x, double margin) {
  for (const auto& c : p.cons)
    if (c.eval(x) >= -margin) return false;
  return true;
}

// Objective values are referenced to f0_ref so Armijo comparisons do not run
// out of floating-point resolution when t is large.
double barrier_value(const QcqpProblem& p, const RVec& x, double t, double f0_ref) {
  double val = t * (p.objective.eval(x) - f0_ref);
  for (const auto& c : p.cons) {
    double f = c.eval(x);
    if (f >= 0.0) return std::numeric_limits<double>::infinity();
    val -= std::log(-f);
  }
  return val;
}

struct CenterState {
  RVec x;
  int newton_steps = 0;
};

// Newton centering of t*f0(x) - sum log(-f_i(x)). Returns when the Newton
// decrement is small. early_exit_idx >= 0 stops as soon as x[idx] < early_exit_thresh
// (used by phase-I).
void center(const QcqpProblem& p, double t, CenterState& st, int early_exit_idx = -1,
            double early_exit_thresh = 0.0) {
  const int n = p.dim;
  const double f0_ref = p.objective.eval(st.x);
  for (int it = 0; it < kMaxInner; ++it) {
    if (early_exit_idx >= 0 && st.x[early_exit_idx] < early_exit_thresh) return;
    RVec g = t * p.objective.grad(st.x);
    RMat H = t * p.objective.P;
    for (const auto& c : p.cons) {
      const double f = c.eval(st.x);
      const RVec cg = c.grad(st.x);
      const double inv = 1.0 / (-f);
      g += inv * cg;
      H += (inv * inv) * (cg * cg.transpose()) + inv * c.P;
    }
    // Solve (H + reg I) d = -g with escalating regularization; LDLT of a
    // singular H can report success with a garbage direction, so verify the
    // residual explicitly.
    RVec d;
    double reg = 0.0;
    const double hscale = std::max(1.0, H.cwiseAbs().maxCoeff());
    const double gnorm = g.norm();
    for (;;) {
      const RMat Hreg = H + reg * RMat::Identity(n, n);
      Eigen::LDLT<RMat> ldlt(Hreg);
      if (ldlt.info() == Eigen::Success) {
        d = ldlt.solve(-g);
        if (d.allFinite() && g.dot(d) <= 0.0 &&
            (Hreg * d + g).norm() <= 1e-8 * (gnorm + hscale * d.norm()) + 1e-300)
          break;
      }
      reg = (reg == 0.0) ? 1e-12 * hscale : reg * 100.0;
      if (reg > 1e6 * hscale) throw Error("qcqp: Newton system unsolvable");
    }
    const double decrement2 = -g.dot(d);
    if (decrement2 * 0.5 < 1e-11) return;
    // Backtracking line search (alpha=0.3, beta=0.5), staying in the domain.
    // The first trial step is clamped so unbounded directions (phase-I) do
    // not launch the iterate to absurd magnitudes.
    const double phi0 = barrier_value(p, st.x, t, f0_ref);
    const double slope = g.dot(d);
    const double dnorm = d.norm();
    double a = std::min(1.0, 1e3 * (1.0 + st.x.norm()) / std::max(dnorm, 1e-300));
    int ls = 0;
    for (; ls < 80; ++ls) {
      RVec xn = st.x + a * d;
      double phin = barrier_value(p, xn, t, f0_ref);
      if (std::isfinite(phin) && phin <= phi0 + kArmijoAlpha * a * slope) {
        st.x = xn;
        break;
      }
      a *= kArmijoBeta;
    }
    ++st.newton_steps;
    if (std::getenv("RISOPT_QCQP_DEBUG"))
      std::fprintf(stderr, "center t=%g it=%d dec2/2=%g ls=%d a=%g xnorm=%g\n", t, it,
                   decrement2 * 0.5, ls, a, st.x.norm());
    if (ls >= 80) return;  // step size underflow: as centered as we can get
    // At the floating-point noise floor the decrement stalls while the
    // iterate stops moving; treat that as centered.
    if (a * dnorm <= 1e-13 * (1.0 + st.x.norm())) return;
  }
  throw MaxIterationsError("qcqp: inner Newton iteration cap exceeded (t=" +
                           std::to_string(t) + ")");
}

// KKT verification with least-squares multiplier estimates over the
// near-active set (the barrier multipliers 1/(t slack) are too noisy at the
// final slacks to certify tight tolerances).
double kkt_residual(const QcqpProblem& p, const RVec& x, double t) {
  const RVec g0 = p.objective.grad(x);
  const int m = static_cast<int>(p.cons.size());
  std::vector<int> active;
  RVec lambda = RVec::Zero(m);
  double feas = 0.0;
  const double act_thresh = 100.0 * static_cast<double>(std::max(m, 1)) / t;
  for (int i = 0; i < m; ++i) {
    const double f = p.cons[i].eval(x);
    feas = std::max(feas, f);
    if (-f <= act_thresh)
      active.push_back(i);
    else
      lambda[i] = 1.0 / (t * std::max(-f, 1e-300));
  }
  if (!active.empty()) {
    RMat A(p.dim, static_cast<int>(active.size()));
    for (size_t j = 0; j < active.size(); ++j) A.col(j) = p.cons[active[j]].grad(x);
    RVec lam = A.colPivHouseholderQr().solve(-g0);
    for (size_t j = 0; j < active.size(); ++j) lambda[active[j]] = std::max(lam[j], 0.0);
  }
  RVec stat = g0;
  double comp = 0.0;
  for (int i = 0; i < m; ++i) {
    const double f = p.cons[i].eval(x);
    stat += lambda[i] * p.cons[i].grad(x);
    comp = std::max(comp, lambda[i] * (-f));
  }
  const double gscale = std::max(1.0, g0.cwiseAbs().maxCoeff());
  return std::max({stat.cwiseAbs().maxCoeff() / gscale, feas, comp});
}

// Barrier loop from a strictly feasible start.
QcqpResult barrier_solve(const QcqpProblem& p, RVec x0, double tol, int early_exit_idx = -1,
                         double early_exit_thresh = 0.0) {
  const int m = static_cast<int>(p.cons.size());
  CenterState st{std::move(x0), 0};
  double t = 1.0;
  int outer = 0;
  std::vector<double> trace;
  for (;;) {
    if (outer++ >= kMaxOuter) throw MaxIterationsError("qcqp: outer iteration cap exceeded");
    center(p, t, st, early_exit_idx, early_exit_thresh);
    trace.push_back(p.objective.eval(st.x));
    if (early_exit_idx >= 0 && st.x[early_exit_idx] < early_exit_thresh) break;
    if (m == 0 || static_cast<double>(m) / t < tol) break;
    t *= kMu;
  }
  QcqpResult res;
  res.objective_trace = std::move(trace);
  res.x = st.x;
  res.objective = p.objective.eval(st.x);
  res.kkt_residual = (m == 0) ? p.objective.grad(st.x).cwiseAbs().maxCoeff()
                              : kkt_residual(p, st.x, t);
  res.outer_iters = outer;
  return res;
}

// Phase-I: minimize s subject to f_i(x) - sigma_i s <= 0, with sigma_i
// normalizing each start violation to at most one (the damped Newton phase
// makes O(1) progress in s per step). Succeeds as soon as an iterate with
// s < -margin appears; certifies infeasibility otherwise.
RVec phase1(const QcqpProblem& p, double tol) {
  const int n = p.dim;
  RVec x0 = RVec::Zero(n);
  if (p.start && p.start->size() == n) x0 = *p.start;

  QcqpProblem aux;
  aux.dim = n + 1;
  aux.objective.P = RMat::Zero(n + 1, n + 1);
  aux.objective.q = RVec::Zero(n + 1);
  aux.objective.q[n] = 1.0;
  for (const auto& c : p.cons) {
    Quadratic f;
    f.P = RMat::Zero(n + 1, n + 1);
    f.P.topLeftCorner(n, n) = c.P;
    f.q = RVec::Zero(n + 1);
    f.q.head(n) = c.q;
    f.q[n] = -std::max(1.0, c.eval(x0));
    f.c = c.c;
    aux.cons.push_back(std::move(f));
  }
  RVec z0(n + 1);
  z0.head(n) = x0;
  z0[n] = 1.0 + 1e-3;  // every normalized violation is <= 1

  const double margin = 1e-9;
  QcqpResult r = barrier_solve(aux, z0, std::min(tol, 1e-9), n, -margin);
  if (r.x[n] >= -1e-12)
    throw InfeasibleError("qcqp: phase-I found no strictly feasible point");
  return r.x.head(n);
}

}  // namespace

QcqpResult solve_qcqp(const QcqpProblem& problem, double tol) {
  if (tol <= 0.0) throw Error("qcqp: tol must be positive");
  validate(problem);

  if (problem.cons.empty()) {
    // Unconstrained QP: exact Newton solve.
    Eigen::LDLT<RMat> ldlt(problem.objective.P);
    RVec x = ldlt.solve(-problem.objective.q);
    if (!x.allFinite() || problem.objective.grad(x).cwiseAbs().maxCoeff() >
                              1e-8 * std::max(1.0, problem.objective.q.cwiseAbs().maxCoeff()))
      throw Error("qcqp: unbounded or degenerate unconstrained objective");
    QcqpResult res;
    res.x = x;
    res.objective = problem.objective.eval(x);
    res.kkt_residual = problem.objective.grad(x).cwiseAbs().maxCoeff();
    return res;
  }

  RVec x0;
  if (problem.start && problem.start->size() == problem.dim &&
      strictly_feasible(problem, *problem.start, 0.0)) {
    x0 = *problem.start;
  } else {
    x0 = phase1(problem, tol);
  }
  return barrier_solve(problem, std::move(x0), tol);
}

MaxMinResult solve_maxmin_concave_quadratics(const std::vector<ConcaveQuadratic>& pieces,
                                             const RVec& start, double tol) {
  if (pieces.empty()) throw Error("maxmin: no pieces");
  const int n = static_cast<int>(start.size());
  for (const auto& p : pieces) {
    if (p.P.rows() != n || p.q.size() != n) throw DimensionError("maxmin: piece dimension");
    if (!is_psd(-p.P)) throw Error("maxmin: piece quadratic is not NSD");
  }
  // Epigraph: maximize t s.t. t <= p_k(x)  <=>  minimize -t s.t. t - p_k(x) <= 0.
  QcqpProblem epi;
  epi.dim = n + 1;
  epi.objective.P = RMat::Zero(n + 1, n + 1);
  epi.objective.q = RVec::Zero(n + 1);
  epi.objective.q[n] = -1.0;
  for (const auto& p : pieces) {
    Quadratic f;
    f.P = RMat::Zero(n + 1, n + 1);
    f.P.topLeftCorner(n, n) = -p.P;
    f.q = RVec::Zero(n + 1);
    f.q.head(n) = -p.q;
    f.q[n] = 1.0;
    f.c = -p.c;
    epi.cons.push_back(std::move(f));
  }
  double minval = std::numeric_limits<double>::infinity();
  for (const auto& p : pieces) minval = std::min(minval, p.eval(start));
  RVec z0(n + 1);
  z0.head(n) = start;
  z0[n] = minval - std::max(1.0, 1e-3 * std::abs(minval));
  epi.start = z0;

  QcqpResult r = solve_qcqp(epi, tol);
  MaxMinResult out;
  out.x = r.x.head(n);
  out.value = std::numeric_limits<double>::infinity();
  for (const auto& p : pieces) out.value = std::min(out.value, p.eval(out.x));
  return out;
}

}  // namespace ris
