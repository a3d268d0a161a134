#include "risopt/info_optimizer.hpp"

#include <Eigen/Cholesky>

#include "risopt/logdet.hpp"

namespace ris {

namespace {

double logdet2(const CMat& X) {
  Eigen::LLT<CMat> llt(X);
  if (llt.info() != Eigen::Success)
    throw SingularMatrixError("capacity: matrix not positive definite");
  double s = 0.0;
  const CMat& L = llt.matrixLLT();
  for (Eigen::Index i = 0; i < L.rows(); ++i) s += 2.0 * std::log(L(i, i).real());
  return s / std::log(2.0);
}

}  // namespace

std::vector<std::vector<int>> all_subsets(int K) {
  std::vector<std::vector<int>> out;
  for (int mask = 1; mask < (1 << K); ++mask) {
    std::vector<int> s;
    for (int k = 0; k < K; ++k)
      if (mask & (1 << k)) s.push_back(k);
    out.push_back(std::move(s));
  }
  return out;
}

double capacity_slack(const ComposedChannel& ch, const PrecoderSet& precoders,
                      const std::vector<int>& subset, const RateSpec& rates) {
  if (subset.empty()) throw Error("capacity_slack: empty subset");
  double cap = 0.0;
  for (int j = 0; j < ch.J; ++j) {
    CMat A = CMat::Identity(ch.M, ch.M);
    for (int k : subset) {
      const CVec a = precoders.w[k][j] * ch.G[k].row(j).transpose();
      A += (a * a.adjoint()) / ch.sigma2;
    }
    cap += logdet2(A);
  }
  return cap - rates.floor(subset);
}

PrecoderSet solve_w_info(const EffectiveChannel& eff, const CVec& theta, const RateSpec& rates,
                         double tol) {
  const int K = eff.K, M = eff.M, J = eff.J;
  if (K > 6) throw Error("solve_w_info: K <= 6 required (2^K constraints)");
  const ComposedChannel ch = compose(eff, theta);
  const int dim = K * J;  // per-subcarrier powers p_k(j) >= 0

  LogDetProblem prob;
  prob.dim = dim;
  prob.objective.P = RMat::Zero(dim, dim);
  prob.objective.q = RVec::Ones(dim);
  const auto subsets = all_subsets(K);
  for (const auto& S : subsets) {
    LogDetTerm term;
    term.lhs = RVec::Zero(dim);
    term.lhs0 = rates.floor(S);
    term.base.assign(J, CMat::Identity(M, M));
    for (int k : S) {
      for (int j = 0; j < J; ++j) {
        term.var_idx.push_back(k * J + j);
        std::vector<CMat> blocks(J, CMat::Zero(M, M));
        const CVec g = ch.G[k].row(j).transpose();
        blocks[j] = (g * g.adjoint()) / ch.sigma2;
        term.coef.push_back(std::move(blocks));
      }
    }
    prob.logdets.push_back(std::move(term));
  }
  for (int i = 0; i < dim; ++i) {
    RVec a = RVec::Zero(dim);
    a[i] = 1.0;
    prob.lin_ge.emplace_back(a, 0.0);
  }

  // Strictly feasible start by doubling a uniform power.
  double p0 = 1e-6;
  bool found = false;
  for (int it = 0; it < 80; ++it) {
    RVec x = RVec::Constant(dim, p0);
    bool ok = true;
    for (const auto& t : prob.logdets) {
      try {
        if (logdet_slack(t, x) <= 1e-9) ok = false;
      } catch (const SingularMatrixError&) {
        ok = false;
      }
      if (!ok) break;
    }
    if (ok) {
      prob.start = x;
      found = true;
      break;
    }
    p0 *= 2.0;
  }
  if (!found) throw InfeasibleError("solve_w_info: rate floors unreachable");

  LogDetResult sol = solve_logdet_program(prob, tol);
  PrecoderSet W;
  W.J = J;
  W.w.assign(K, CVec::Zero(J));
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < J; ++j)
      W.w[k][j] = cplx(std::sqrt(std::max(sol.x[k * J + j], 0.0)), 0.0);
  return W;
}

ThetaInfoResult solve_theta_info(const EffectiveChannel& eff, const CVec& theta,
                                 const PrecoderSet& precoders, const RateSpec& rates, int n,
                                 bool guarded, double tol) {
  const int K = eff.K, M = eff.M, J = eff.J;
  if (n < 0 || n >= eff.N) throw DimensionError("solve_theta_info: bad element index");

  // d_k(j): channel without element n; c_k(j): element-n cascade. Both precoded.
  std::vector<CMat> d(K), c(K);  // J x M
  for (int k = 0; k < K; ++k) {
    CMat Dk = eff.direct[k];
    for (int np = 0; np < eff.N; ++np)
      if (np != n) Dk += theta[np] * eff.cascade[k][np];
    d[k].resize(J, M);
    c[k].resize(J, M);
    for (int j = 0; j < J; ++j) {
      d[k].row(j) = precoders.w[k][j] * Dk.row(j);
      c[k].row(j) = precoders.w[k][j] * eff.cascade[k][n].row(j);
    }
  }

  // Variables x = (Re theta_n, Im theta_n, Delta R).
  LogDetProblem prob;
  prob.dim = 3;
  prob.objective.P = RMat::Zero(3, 3);
  prob.objective.q = RVec::Zero(3);
  prob.objective.q[2] = -1.0;  // maximize Delta R
  const auto subsets = all_subsets(K);
  for (const auto& S : subsets) {
    LogDetTerm term;
    term.lhs = RVec::Zero(3);
    term.lhs[2] = static_cast<double>(S.size()) * rates.Q * (rates.J_full + rates.L_cp) *
                  (static_cast<double>(rates.J_sub) / rates.J_full);
    term.lhs0 = rates.floor(S);
    term.var_idx = {0, 1};
    term.base.assign(J, CMat());
    std::vector<CMat> coef_re(J), coef_im(J);
    for (int j = 0; j < J; ++j) {
      CMat base = CMat::Identity(M, M);
      CMat cross = CMat::Zero(M, M);
      for (int k : S) {
        const CVec dk = d[k].row(j).transpose();
        const CVec ck = c[k].row(j).transpose();
        // |theta_n| = 1 substituted in the quadratic term (Eq.-47 form).
        base += (dk * dk.adjoint() + ck * ck.adjoint()) / eff.sigma2;
        cross += (ck * dk.adjoint()) / eff.sigma2;
      }
      term.base[j] = base;
      coef_re[j] = cross + cross.adjoint();
      coef_im[j] = kImag * cross - kImag * cross.adjoint();
    }
    term.coef = {std::move(coef_re), std::move(coef_im)};
    prob.logdets.push_back(std::move(term));
  }
  {
    Quadratic disc;  // Re^2 + Im^2 <= 1
    disc.P = RMat::Zero(3, 3);
    disc.P(0, 0) = 2.0;
    disc.P(1, 1) = 2.0;
    disc.q = RVec::Zero(3);
    disc.c = -1.0;
    prob.quad_le.push_back(std::move(disc));
  }
  // Start: current element pulled slightly inside the disc, Delta R below the
  // smallest margin.
  RVec x0(3);
  x0[0] = theta[n].real() * (1.0 - 1e-6);
  x0[1] = theta[n].imag() * (1.0 - 1e-6);
  x0[2] = 0.0;
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& t : prob.logdets) {
    const double slack = logdet_slack(t, x0);  // at Delta R = 0
    margin = std::min(margin, slack / t.lhs[2]);
  }
  x0[2] = margin - std::max(1e-6, 1e-3 * std::abs(margin));
  prob.start = x0;

  LogDetResult sol = solve_logdet_program(prob, tol);
  ThetaInfoResult res;
  res.theta_n = cplx(sol.x[0], sol.x[1]);
  res.delta_r = sol.x[2];
  const double mod = std::abs(res.theta_n);
  if (mod < 1e-12) {
    res.theta_n = theta[n];  // degenerate element: keep the previous phase
    res.normalized = true;
    return res;
  }
  const cplx unit = res.theta_n / mod;
  if (!guarded) {
    res.theta_n = unit;
    res.normalized = true;
  } else {
    CVec cand = theta;
    cand[n] = unit;
    const ComposedChannel ch = compose(eff, cand);
    bool feasible = true;
    for (const auto& S : subsets)
      if (capacity_slack(ch, precoders, S, rates) < -1e-6) {
        feasible = false;
        break;
      }
    if (feasible) {
      res.theta_n = unit;
      res.normalized = true;
    }
  }
  return res;
}

InfoResult optimize_info(const EffectiveChannel& eff, const RateSpec& rates, std::uint64_t seed,
                         const InfoOptions& opts) {
  const int N = eff.N;
  Rng rng(seed);
  InfoResult res;
  res.theta = CVec(N);
  for (int n = 0; n < N; ++n) res.theta[n] = std::polar(1.0, rng.uniform(0.0, 2.0 * kPi));

  res.precoders = solve_w_info(eff, res.theta, rates, opts.solver_tol);
  double power = res.precoders.total_power();
  res.power_trace.push_back(power);

  PrecoderSet best_w = res.precoders;
  CVec best_theta = res.theta;
  double best_power = power;

  for (int round = 0; round < opts.max_rounds && N > 0; ++round) {
    for (int n = 0; n < N; ++n) {
      ThetaInfoResult tn = solve_theta_info(eff, res.theta, res.precoders, rates, n,
                                            opts.guarded_normalization, opts.solver_tol);
      res.theta[n] = tn.theta_n;
    }
    res.precoders = solve_w_info(eff, res.theta, rates, opts.solver_tol);
    const double p_new = res.precoders.total_power();
    res.power_trace.push_back(p_new);
    if (p_new < best_power) {
      best_power = p_new;
      best_w = res.precoders;
      best_theta = res.theta;
    }
    if (p_new > power) {
      res.non_monotone = true;  // relaxation+normalization: convergence not guaranteed
      break;
    }
    if (power - p_new < opts.power_tol * power) {
      power = p_new;
      break;
    }
    power = p_new;
  }

  res.precoders = best_w;
  res.theta = best_theta;
  // The guarded variant can leave elements inside the disc; restore unit
  // modulus and repair feasibility with a final W-solve.
  bool repaired = false;
  for (int n = 0; n < N; ++n) {
    const double mod = std::abs(res.theta[n]);
    if (std::abs(mod - 1.0) > 1e-9) {
      res.theta[n] = mod < 1e-12 ? cplx(1.0, 0.0) : res.theta[n] / mod;
      repaired = true;
    }
  }
  if (repaired) {
    res.precoders = solve_w_info(eff, res.theta, rates, opts.solver_tol);
    res.power_trace.push_back(res.precoders.total_power());
  }
  return res;
}

}  // namespace ris
