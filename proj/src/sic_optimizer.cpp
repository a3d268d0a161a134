#include "risopt/sic_optimizer.hpp"

#include <Eigen/Cholesky>
#include <algorithm>

#include "risopt/linalg.hpp"
#include "risopt/qcqp.hpp"

namespace ris {

namespace {

// Constraints sharing a weight vector share the covariance B; group them so B
// is factored once per class.
std::vector<std::vector<int>> weight_classes(const std::vector<SinrConstraint>& cons) {
  std::vector<std::vector<int>> classes;
  std::vector<const RVec*> reps;
  for (size_t i = 0; i < cons.size(); ++i) {
    bool placed = false;
    for (size_t c = 0; c < reps.size(); ++c) {
      if (reps[c]->size() == cons[i].weights.size() && *reps[c] == cons[i].weights) {
        classes[c].push_back(static_cast<int>(i));
        placed = true;
        break;
      }
    }
    if (!placed) {
      reps.push_back(&cons[i].weights);
      classes.push_back({static_cast<int>(i)});
    }
  }
  return classes;
}

struct ConstraintState {
  std::vector<CVec> y;     // per subcarrier
  double tau = 0.0;        // (1/J) a^H B^{-1} a
  double lin = 0.0;        // 2Re{y^H a} - y^H B y   (raw sum over subcarriers)
  double quad = 0.0;       // a^H B^{-1} a           (raw sum)
};

// y-updates (Eq-27 style) and the FP tightness values for every constraint.
std::vector<ConstraintState> build_states(const ComposedChannel& ch, const PrecoderSet& W,
                                          const std::vector<SinrConstraint>& cons) {
  const int K = ch.K, M = ch.M, J = ch.J;
  std::vector<ConstraintState> st(cons.size());
  for (auto& s : st) s.y.resize(J);
  const auto classes = weight_classes(cons);
  std::vector<CVec> a(K);
  for (int j = 0; j < J; ++j) {
    for (int k = 0; k < K; ++k) a[k] = W.w[k][j] * ch.G[k].row(j).transpose();
    for (const auto& cls : classes) {
      const RVec& wgt = cons[cls.front()].weights;
      CMat B = ch.sigma2 * CMat::Identity(M, M);
      for (int k = 0; k < K; ++k)
        if (wgt[k] != 0.0) B += wgt[k] * (a[k] * a[k].adjoint());
      Eigen::LLT<CMat> llt(B);
      if (llt.info() != Eigen::Success)
        throw SingularMatrixError("fp: singular covariance");
      for (int ci : cls) {
        const int k = cons[ci].user;
        CVec y = llt.solve(a[k]);
        st[ci].quad += a[k].dot(y).real();
        st[ci].lin += 2.0 * y.dot(a[k]).real() - y.dot(B * y).real();
        st[ci].y[j] = std::move(y);
      }
    }
  }
  for (size_t i = 0; i < st.size(); ++i) st[i].tau = st[i].quad / J;
  return st;
}

double constraint_rhs(const SinrConstraint& c, int J) {
  return J * c.rho_req / (1.0 + c.own_v * c.rho_req);
}

// Eq-26-style convex constraint in the interleaved real precoder variables,
// at fixed y.
Quadratic fp_constraint(const ComposedChannel& ch, const std::vector<CVec>& y,
                        const SinrConstraint& con, int dim) {
  const int K = ch.K, J = ch.J;
  RMat P = RMat::Zero(dim, dim);
  RVec q = RVec::Zero(dim);
  double yy = 0.0;
  for (int j = 0; j < J; ++j) {
    yy += y[j].squaredNorm();
    for (int k = 0; k < K; ++k) {
      const cplx c = y[j].dot(ch.G[k].row(j).transpose());  // y^H g_k(j)
      const int idx = 2 * (k * J + j);
      if (con.weights[k] != 0.0) {
        const double d = 2.0 * con.weights[k] * std::norm(c);
        P(idx, idx) += d;
        P(idx + 1, idx + 1) += d;
      }
      if (k == con.user) {
        q[idx] += 2.0 * c.real();
        q[idx + 1] -= 2.0 * c.imag();
      }
    }
  }
  // GE sense: -(1/2)x^T P x + q^T x + c0 >= 0, stored negated by the caller.
  Quadratic f;
  f.P = std::move(P);
  f.q = std::move(q);
  f.c = -ch.sigma2 * yy - constraint_rhs(con, J);
  return f;
}

RVec precoders_to_x(const PrecoderSet& W) {
  const int K = W.users(), J = W.J;
  RVec x(2 * K * J);
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < J; ++j) {
      x[2 * (k * J + j)] = W.w[k][j].real();
      x[2 * (k * J + j) + 1] = W.w[k][j].imag();
    }
  return x;
}

PrecoderSet x_to_precoders(const RVec& x, int K, int J) {
  PrecoderSet W;
  W.J = J;
  W.w.assign(K, CVec::Zero(J));
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < J; ++j)
      W.w[k][j] = cplx(x[2 * (k * J + j)], x[2 * (k * J + j) + 1]);
  return W;
}

PrecoderSet initial_precoders(const ComposedChannel& ch,
                              const std::vector<SinrConstraint>& cons) {
  const int K = ch.K, J = ch.J;
  RVec req = RVec::Zero(K);
  for (const auto& c : cons) req[c.user] = std::max(req[c.user], c.rho_req);
  PrecoderSet W;
  W.J = J;
  W.w.assign(K, CVec::Zero(J));
  for (int k = 0; k < K; ++k) {
    for (int j = 0; j < J; ++j) {
      const double gain = ch.G[k].row(j).squaredNorm();
      const double p =
          gain > 1e-100 ? K * std::max(req[k], 1.0) * ch.sigma2 / gain : 1.0;
      W.w[k][j] = cplx(std::sqrt(p), 0.0);
    }
  }
  return W;
}

}  // namespace

std::vector<SinrConstraint> sic_constraints(const Grouping& grouping, const RVec& rho_tar) {
  const int K = grouping.users();
  if (rho_tar.size() != K) throw DimensionError("sic_constraints: rho_tar size");
  std::vector<SinrConstraint> cons(K);
  for (int k = 0; k < K; ++k) {
    cons[k].user = k;
    cons[k].own_v = 1.0;
    cons[k].rho_req = rho_tar[k];
    cons[k].weights = RVec::Zero(K);
    for (int kp = 0; kp < K; ++kp)
      if (grouping.group_of[kp] >= grouping.group_of[k]) cons[k].weights[kp] = 1.0;
  }
  return cons;
}

PrecoderSet fp_precode(const EffectiveChannel& eff, const CVec& theta,
                       const std::vector<SinrConstraint>& constraints,
                       const std::optional<PrecoderSet>& warm, const FpOptions& opts,
                       FpDiagnostics* diag) {
  if (constraints.empty()) throw Error("fp_precode: no constraints");
  const ComposedChannel ch = compose(eff, theta);
  const int K = ch.K, J = ch.J;
  const int dim = 2 * K * J;

  PrecoderSet W = warm ? *warm : initial_precoders(ch, constraints);
  double power = W.total_power();
  FpDiagnostics local;
  local.min_quadratic_margin = std::numeric_limits<double>::infinity();

  int rescue = 0;
  for (int inner = 0; inner < opts.max_inner; ++inner) {
    auto states = build_states(ch, W, constraints);
    for (const auto& s : states) {
      const double resid = std::abs(s.lin - s.quad);
      local.max_tightness_residual = std::max(local.max_tightness_residual, resid);
      if (resid > opts.tightness_tol * std::max(1.0, std::abs(s.quad)))
        throw Error("fp_precode: FP substitution identity violated");
    }

    QcqpProblem qp;
    qp.dim = dim;
    qp.objective.P = 2.0 * RMat::Identity(dim, dim);
    qp.objective.q = RVec::Zero(dim);
    for (size_t i = 0; i < constraints.size(); ++i) {
      Quadratic f = fp_constraint(ch, states[i].y, constraints[i], dim);
      qp.add_constraint(f.P, f.q, f.c, Sense::GE);
    }
    // Warm start: scaling the current point up strictly increases every
    // constraint value at the FP point. Prefer the most interior inflation
    // (the t=1 centering stage is cheap from deep inside the feasible set,
    // slow from near the boundary).
    for (double delta : {10.0, 3.0, 1.0, 0.5, 1e-1, 1e-2, 1e-4, 1e-6, 0.0}) {
      RVec cand = (1.0 + delta) * precoders_to_x(W);
      bool ok = true;
      for (const auto& c : qp.cons)
        if (c.eval(cand) >= -1e-12) {
          ok = false;
          break;
        }
      if (ok) {
        qp.start = cand;
        break;
      }
    }

    QcqpResult sol;
    try {
      sol = solve_qcqp(qp, opts.qcqp_tol);
    } catch (const InfeasibleError&) {
      if (inner == 0 && !warm && rescue < 3) {
        // The initial y may be poor; retry the first y-update from a hotter start.
        ++rescue;
        for (auto& wk : W.w) wk *= 10.0;
        power = W.total_power();
        --inner;
        continue;
      }
      int binding = constraints.front().user;
      double worst = std::numeric_limits<double>::infinity();
      for (size_t i = 0; i < constraints.size(); ++i) {
        const double slack = states[i].quad - constraint_rhs(constraints[i], J);
        if (slack < worst) {
          worst = slack;
          binding = constraints[i].user;
        }
      }
      throw InfeasibleError("fp_precode: targets unreachable (binding user " +
                            std::to_string(binding) + ")");
    }
    PrecoderSet W_new = x_to_precoders(sol.x, K, J);
    const double p_new = W_new.total_power();
    W = std::move(W_new);
    local.inner_iters = inner + 1;
    if (p_new >= power * (1.0 - opts.inner_tol) && inner > 0) {
      power = p_new;
      break;
    }
    power = p_new;
  }

  // Eq-24 audit at the returned point.
  auto states = build_states(ch, W, constraints);
  for (size_t i = 0; i < constraints.size(); ++i) {
    const double margin = states[i].quad - constraint_rhs(constraints[i], J);
    local.min_quadratic_margin = std::min(local.min_quadratic_margin, margin);
  }
  if (diag) *diag = local;
  return W;
}

namespace {

// Shared per-subcarrier precomputation plus B-factorization per weight class;
// the heavy inner accumulation is then done per constraint.
std::vector<ScaWorkingSet> build_sca_working_sets(const EffectiveChannel& eff,
                                                  const PrecoderSet& precoders,
                                                  const std::vector<SinrConstraint>& cons,
                                                  const RVec& beta_bar) {
  const int K = eff.K, M = eff.M, J = eff.J, N = eff.N;
  if (beta_bar.size() != N) throw DimensionError("sca: beta size");
  CVec theta(N);
  for (int n = 0; n < N; ++n) theta[n] = std::polar(1.0, beta_bar[n]);

  std::vector<ScaWorkingSet> out(cons.size());
  struct Acc {
    double c1_lin = 0.0, c1_quad = 0.0, yy = 0.0, tau_raw = 0.0;
  };
  std::vector<Acc> acc(cons.size());
  for (size_t i = 0; i < cons.size(); ++i) {
    out[i].u = CVec::Zero(N);
    out[i].U = CMat::Zero(N, N);
    out[i].rho_req = cons[i].rho_req;
    out[i].own_v = cons[i].own_v;
    out[i].J = J;
  }
  const auto classes = weight_classes(cons);

  std::vector<CVec> d(K), a(K);
  std::vector<CMat> casc(K);  // M x N per user at the current subcarrier
  CMat g_row(K, N);
  CVec delta(K);
  for (int j = 0; j < J; ++j) {
    for (int k = 0; k < K; ++k) {
      d[k] = precoders.w[k][j] * eff.direct[k].row(j).transpose();
      CMat c(M, N);
      for (int n = 0; n < N; ++n)
        c.col(n) = precoders.w[k][j] * eff.cascade[k][n].row(j).transpose();
      a[k] = d[k] + c * theta;
      casc[k] = std::move(c);
    }
    for (const auto& cls : classes) {
      const RVec& wgt = cons[cls.front()].weights;
      CMat B = eff.sigma2 * CMat::Identity(M, M);
      for (int k = 0; k < K; ++k)
        if (wgt[k] != 0.0) B += wgt[k] * (a[k] * a[k].adjoint());
      Eigen::LLT<CMat> llt(B);
      if (llt.info() != Eigen::Success)
        throw SingularMatrixError("sca: singular covariance");
      for (int ci : cls) {
        const SinrConstraint& con = cons[ci];
        const CVec y = llt.solve(a[con.user]);
        acc[ci].tau_raw += a[con.user].dot(y).real();
        acc[ci].yy += y.squaredNorm();
        acc[ci].c1_lin += 2.0 * y.dot(d[con.user]).real();
        for (int k = 0; k < K; ++k) {
          delta[k] = y.dot(d[k]);                    // y^H d_k
          g_row.row(k) = (y.adjoint() * casc[k]);    // y^H c_{k,n}
        }
        for (int n = 0; n < N; ++n) out[ci].u[n] += std::conj(g_row(con.user, n));
        for (int k = 0; k < K; ++k) {
          if (con.weights[k] == 0.0) continue;
          acc[ci].c1_quad += con.weights[k] * std::norm(delta[k]);
          out[ci].u -= (con.weights[k] * delta[k]) * g_row.row(k).conjugate().transpose();
          out[ci].U +=
              con.weights[k] * (g_row.row(k).conjugate().transpose() * g_row.row(k));
        }
      }
    }
  }
  for (size_t i = 0; i < cons.size(); ++i) {
    ScaWorkingSet& ws = out[i];
    ws.u /= static_cast<double>(J);
    ws.U /= static_cast<double>(J);
    ws.C1 = (acc[i].c1_lin - acc[i].c1_quad - eff.sigma2 * acc[i].yy) / J;
    ws.tau = acc[i].tau_raw / J;
    const double denom = 1.0 - cons[i].own_v * ws.tau;
    ws.phi = denom <= 1e-14 ? kRhoCap : std::min(ws.tau / denom, kRhoCap);
    ws.alpha = 1.0 / (J * std::max(denom, 1e-14) * std::max(denom, 1e-14));

    // grad l2 = 2 Re{ i conj(theta) o (U theta - u) }
    CVec res = ws.U * theta - ws.u;
    ws.grad_l2.resize(N);
    for (int n = 0; n < N; ++n)
      ws.grad_l2[n] = 2.0 * (kImag * std::conj(theta[n]) * res[n]).real();

    // kappa = ||Gamma||_F with Gamma the entrywise Hessian magnitude bound.
    double fro2 = 0.0;
    for (int n = 0; n < N; ++n) {
      double offsum = 0.0;
      for (int m = 0; m < N; ++m) {
        if (m == n) continue;
        const double um = std::abs(ws.U(n, m));
        fro2 += um * um;
        offsum += um;
      }
      const double dn = std::abs(ws.u[n]) + offsum;
      fro2 += dn * dn;
    }
    ws.kappa = std::sqrt(fro2);
  }
  return out;
}

}  // namespace

ScaWorkingSet build_sca_working_set(const EffectiveChannel& eff, const PrecoderSet& precoders,
                                    const SinrConstraint& con, const RVec& beta_bar) {
  return build_sca_working_sets(eff, precoders, {con}, beta_bar).front();
}

double eval_l2(const ScaWorkingSet& ws, const RVec& beta) {
  const int N = static_cast<int>(beta.size());
  CVec theta(N);
  for (int n = 0; n < N; ++n) theta[n] = std::polar(1.0, beta[n]);
  const double lin = 2.0 * (ws.u.dot(theta)).real();  // 2 Re{u^H theta}
  const double quad = (theta.dot(ws.U * theta)).real();
  return lin - quad + ws.C1;
}

double eval_l2_raw(const EffectiveChannel& eff, const PrecoderSet& precoders,
                   const SinrConstraint& con, const RVec& beta_bar, const RVec& beta) {
  const int K = eff.K, M = eff.M, J = eff.J, N = eff.N;
  CVec theta_bar(N), theta(N);
  for (int n = 0; n < N; ++n) {
    theta_bar[n] = std::polar(1.0, beta_bar[n]);
    theta[n] = std::polar(1.0, beta[n]);
  }
  double acc = 0.0;
  for (int j = 0; j < J; ++j) {
    std::vector<CVec> a_bar(K), a(K);
    for (int k = 0; k < K; ++k) {
      CVec d = precoders.w[k][j] * eff.direct[k].row(j).transpose();
      a_bar[k] = d;
      a[k] = d;
      for (int n = 0; n < N; ++n) {
        const CVec c = precoders.w[k][j] * eff.cascade[k][n].row(j).transpose();
        a_bar[k] += theta_bar[n] * c;
        a[k] += theta[n] * c;
      }
    }
    CMat B_bar = eff.sigma2 * CMat::Identity(M, M);
    for (int k = 0; k < K; ++k)
      if (con.weights[k] != 0.0) B_bar += con.weights[k] * (a_bar[k] * a_bar[k].adjoint());
    const CVec y = llt_pd(B_bar).solve(a_bar[con.user]);
    double quad = eff.sigma2 * y.squaredNorm();
    for (int k = 0; k < K; ++k)
      if (con.weights[k] != 0.0) quad += con.weights[k] * std::norm(y.dot(a[k]));
    acc += 2.0 * y.dot(a[con.user]).real() - quad;
  }
  return acc / J;
}

double eval_surrogate(const ScaWorkingSet& ws, const RVec& beta, const RVec& beta_bar) {
  const RVec d = beta - beta_bar;
  return (ws.phi - ws.rho_req) +
         ws.J * ws.alpha * (ws.grad_l2.dot(d) - 0.5 * ws.kappa * d.squaredNorm());
}

namespace {

double min_gap(const EffectiveChannel& eff, const PrecoderSet& W,
               const std::vector<SinrConstraint>& cons, const RVec& beta) {
  CVec theta(eff.N);
  for (int n = 0; n < eff.N; ++n) theta[n] = std::polar(1.0, beta[n]);
  const ComposedChannel ch = compose(eff, theta);
  const auto states = build_states(ch, W, cons);
  double gap = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < cons.size(); ++i) {
    const double denom = 1.0 - cons[i].own_v * states[i].tau;
    const double phi_i = denom <= 1e-14 ? kRhoCap : std::min(states[i].tau / denom, kRhoCap);
    gap = std::min(gap, phi_i - cons[i].rho_req);
  }
  return gap;
}

}  // namespace

RVec sca_beamform(const EffectiveChannel& eff, const PrecoderSet& precoders,
                  const std::vector<SinrConstraint>& constraints, const RVec& beta_init,
                  const ScaOptions& opts, ScaDiagnostics* diag) {
  const int N = eff.N;
  RVec beta = beta_init;
  double gap = min_gap(eff, precoders, constraints, beta);
  ScaDiagnostics local;
  local.min_gap_trace.push_back(gap);

  for (int it = 0; it < opts.max_iters; ++it) {
    const auto sets = build_sca_working_sets(eff, precoders, constraints, beta);
    std::vector<ConcaveQuadratic> pieces;
    pieces.reserve(constraints.size());
    for (const auto& ws : sets) {
      const double h = ws.J * ws.alpha * ws.kappa;
      const RVec g = ws.J * ws.alpha * ws.grad_l2;
      ConcaveQuadratic p;
      p.P = -h * RMat::Identity(N, N);
      p.q = g + h * beta;
      p.c = (ws.phi - ws.rho_req) - g.dot(beta) - 0.5 * h * beta.squaredNorm();
      pieces.push_back(std::move(p));
    }
    MaxMinResult mm = solve_maxmin_concave_quadratics(pieces, beta, opts.qcqp_tol);
    const double gap_new = min_gap(eff, precoders, constraints, mm.x);
    if (gap_new < gap - 1e-12) break;  // MM guardrail: never accept a decrease
    const double improvement = gap_new - gap;
    beta = mm.x;
    gap = gap_new;
    local.iters = it + 1;
    local.min_gap_trace.push_back(gap);
    if (improvement < opts.gap_tol) break;
  }
  if (diag) *diag = local;
  return beta;
}

double group_rate(const ComposedChannel& ch, const PrecoderSet& precoders,
                  const std::vector<int>& undecoded, int k) {
  const int M = ch.M, J = ch.J;
  double rate = 0.0;
  for (int j = 0; j < J; ++j) {
    CMat A = CMat::Identity(M, M);
    CMat A_wo = CMat::Identity(M, M);
    for (int kp : undecoded) {
      const CVec a = precoders.w[kp][j] * ch.G[kp].row(j).transpose();
      const CMat outer = (a * a.adjoint()) / ch.sigma2;
      A += outer;
      if (kp != k) A_wo += outer;
    }
    auto logdet2 = [](const CMat& X) {
      Eigen::LLT<CMat> llt(X);
      double s = 0.0;
      const CMat& L = llt.matrixLLT();
      for (Eigen::Index i = 0; i < L.rows(); ++i) s += 2.0 * std::log(L(i, i).real());
      return s / std::log(2.0);
    };
    rate += logdet2(A) - logdet2(A_wo);
  }
  return rate;
}

double sum_rate(const ComposedChannel& ch, const PrecoderSet& precoders, const Grouping& g) {
  double total = 0.0;
  for (int t = 0; t < g.groups(); ++t) {
    std::vector<int> undecoded;
    for (int k = 0; k < g.users(); ++k)
      if (g.group_of[k] >= t) undecoded.push_back(k);
    for (int k : g.members[t]) total += group_rate(ch, precoders, undecoded, k);
  }
  return total;
}

Grouping group_users(const ComposedChannel& ch, int T_max,
                     const std::optional<PrecoderSet>& precoders) {
  const int K = ch.K;
  if (T_max < 1) throw Error("group_users: T_max must be >= 1");
  const PrecoderSet W = precoders ? *precoders : PrecoderSet::uniform(K, ch.J, 1.0);

  Grouping g;
  g.group_of.assign(K, -1);
  g.members.resize(T_max);

  // Initial greedy fill by descending groupwise rate; earlier groups take the
  // remainder when T_max does not divide K.
  std::vector<int> unassigned(K);
  for (int k = 0; k < K; ++k) unassigned[k] = k;
  const int base = K / T_max;
  const int extra = K % T_max;
  for (int t = 0; t < T_max; ++t) {
    const int take = std::min<int>(base + (t < extra ? 1 : 0), unassigned.size());
    std::vector<std::pair<double, int>> rated;
    for (int k : unassigned) rated.emplace_back(group_rate(ch, W, unassigned, k), k);
    std::sort(rated.begin(), rated.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (int i = 0; i < take; ++i) {
      const int k = rated[i].second;
      g.group_of[k] = t;
      g.members[t].push_back(k);
    }
    std::vector<int> rest;
    for (int k : unassigned)
      if (g.group_of[k] < 0) rest.push_back(k);
    unassigned = std::move(rest);
  }

  auto moved = [&](int k, int to) {
    Grouping h = g;
    auto& from = h.members[h.group_of[k]];
    from.erase(std::find(from.begin(), from.end(), k));
    h.members[to].push_back(k);
    std::sort(h.members[to].begin(), h.members[to].end());
    h.group_of[k] = to;
    return h;
  };

  // Single-user pre/sub reassignment passes, accepting strict sum-rate
  // improvements; ties favor the preceding move.
  double r_sum = sum_rate(ch, W, g);
  bool improved = true;
  int guard = 0;
  while (improved && guard++ < 1000) {
    improved = false;
    for (int k = 0; k < K; ++k) {
      const int t = g.group_of[k];
      double r_pre = r_sum, r_sub = r_sum;
      Grouping g_pre, g_sub;
      if (t > 0) {
        g_pre = moved(k, t - 1);
        r_pre = sum_rate(ch, W, g_pre);
      }
      if (t + 1 < T_max) {
        g_sub = moved(k, t + 1);
        r_sub = sum_rate(ch, W, g_sub);
      }
      if (r_pre > r_sum && r_pre >= r_sub) {
        g = std::move(g_pre);
        r_sum = r_pre;
        improved = true;
      } else if (r_sub > r_sum && r_sub > r_pre) {
        g = std::move(g_sub);
        r_sum = r_sub;
        improved = true;
      }
    }
  }
  g.validate();
  return g;
}

AoResult alternating_optimize(const EffectiveChannel& eff,
                              const std::vector<SinrConstraint>& constraints, const CVec& theta0,
                              const AoOptions& opts) {
  const int N = eff.N;
  AoResult res;
  res.theta = theta0;
  res.grouping = Grouping::single_group(eff.K);

  RVec beta(N);
  for (int n = 0; n < N; ++n) beta[n] = std::arg(res.theta[n]);

  std::optional<PrecoderSet> warm;
  double power_prev = std::numeric_limits<double>::infinity();
  for (int round = 0; round < opts.max_rounds; ++round) {
    res.precoders = fp_precode(eff, res.theta, constraints, warm, opts.fp);
    warm = res.precoders;
    const double power = res.precoders.total_power();
    res.power_trace.push_back(power);
    res.rounds.push_back({round, power, min_gap(eff, res.precoders, constraints, beta)});
    if (power_prev - power < opts.power_tol * power_prev) break;
    power_prev = power;
    if (N == 0) break;
    beta = sca_beamform(eff, res.precoders, constraints, beta, opts.sca);
    for (int n = 0; n < N; ++n) res.theta[n] = std::polar(1.0, beta[n]);
  }
  return res;
}

AoResult sic_optimize(const EffectiveChannel& eff, int T_max, const RVec& rho_tar,
                      std::uint64_t seed, const AoOptions& opts, bool regroup_each_round) {
  const int N = eff.N;
  Rng rng(seed);
  CVec theta0(N);
  for (int n = 0; n < N; ++n) theta0[n] = std::polar(1.0, rng.uniform(0.0, 2.0 * kPi));

  Grouping grouping = group_users(compose(eff, theta0), T_max);
  auto constraints = sic_constraints(grouping, rho_tar);

  AoResult res;
  if (!regroup_each_round) {
    res = alternating_optimize(eff, constraints, theta0, opts);
  } else {
    // Experimental: regroup after each theta update (not the Algorithm-2 flow).
    res.theta = theta0;
    RVec beta(N);
    for (int n = 0; n < N; ++n) beta[n] = std::arg(theta0[n]);
    std::optional<PrecoderSet> warm;
    double power_prev = std::numeric_limits<double>::infinity();
    for (int round = 0; round < opts.max_rounds; ++round) {
      grouping = group_users(compose(eff, res.theta), T_max);
      constraints = sic_constraints(grouping, rho_tar);
      res.precoders = fp_precode(eff, res.theta, constraints, warm, opts.fp);
      warm = res.precoders;
      const double power = res.precoders.total_power();
      res.power_trace.push_back(power);
      res.rounds.push_back({round, power, min_gap(eff, res.precoders, constraints, beta)});
      if (power_prev - power < opts.power_tol * power_prev) break;
      power_prev = power;
      if (N == 0) break;
      beta = sca_beamform(eff, res.precoders, constraints, beta, opts.sca);
      for (int n = 0; n < N; ++n) res.theta[n] = std::polar(1.0, beta[n]);
    }
  }
  res.grouping = grouping;
  return res;
}

std::vector<SinrConstraint> diagonal_path_constraints(int K, const TransferFunctionTable& table,
                                                      double v_end, int points, double eps) {
  if (v_end <= 0.0 || v_end >= 1.0) throw Error("diagonal_path: v_end must be in (0,1)");
  std::vector<SinrConstraint> cons;
  cons.reserve(static_cast<size_t>(points) * K);
  for (int m = 0; m < points; ++m) {
    const double v = std::pow(v_end, static_cast<double>(m) / (points - 1));
    const double rho_req = table.psi_inv(v) + eps;
    for (int k = 0; k < K; ++k) {
      SinrConstraint c;
      c.user = k;
      c.weights = RVec::Constant(K, v);
      c.own_v = v;
      c.rho_req = rho_req;
      cons.push_back(std::move(c));
    }
  }
  return cons;
}

AoResult diagonal_path_optimize(const EffectiveChannel& eff, const TransferFunctionTable& table,
                                double v_end, std::uint64_t seed, int points, double eps,
                                const AoOptions& opts) {
  const auto cons = diagonal_path_constraints(eff.K, table, v_end, points, eps);
  Rng rng(seed);
  CVec theta0(eff.N);
  for (int n = 0; n < eff.N; ++n) theta0[n] = std::polar(1.0, rng.uniform(0.0, 2.0 * kPi));
  return alternating_optimize(eff, cons, theta0, opts);
}

}  // namespace ris
