#include "risopt/state_evolution.hpp"

#include <Eigen/Cholesky>
#include <fstream>
#include <iomanip>

namespace ris {

namespace {

// tau_k for all users at shared weights w: tau_k = (1/J) sum_j a_k^H B_j^{-1} a_k
// with B_j = sigma2 I + sum_k' weights_k' a_k' a_k'^H.
RVec tau_all(const ComposedChannel& ch, const PrecoderSet& precoders, const RVec& weights) {
  const int K = ch.K, M = ch.M, J = ch.J;
  RVec tau = RVec::Zero(K);
  std::vector<CVec> a(K);
  for (int j = 0; j < J; ++j) {
    CMat B = ch.sigma2 * CMat::Identity(M, M);
    for (int k = 0; k < K; ++k) {
      a[k] = precoders.w[k][j] * ch.G[k].row(j).transpose();
      if (weights[k] != 0.0) B += weights[k] * (a[k] * a[k].adjoint());
    }
    Eigen::LLT<CMat> llt(B);
    if (llt.info() != Eigen::Success)
      throw SingularMatrixError("phi: singular covariance");
    for (int k = 0; k < K; ++k) tau[k] += a[k].dot(llt.solve(a[k])).real();
  }
  return tau / static_cast<double>(J);
}

double cap_ratio(double tau, double own_v) {
  const double denom = 1.0 - own_v * tau;
  if (denom <= 1e-14) return kRhoCap;
  return std::min(tau / denom, kRhoCap);
}

}  // namespace

RVec phi(const ComposedChannel& ch, const PrecoderSet& precoders, const RVec& v) {
  if (v.size() != ch.K) throw DimensionError("phi: v size");
  RVec tau = tau_all(ch, precoders, v);
  RVec rho(ch.K);
  for (int k = 0; k < ch.K; ++k) rho[k] = cap_ratio(tau[k], v[k]);
  return rho;
}

double phi_weighted(const ComposedChannel& ch, const PrecoderSet& precoders, int k,
                    const RVec& weights, double own_v) {
  RVec tau = tau_all(ch, precoders, weights);
  return cap_ratio(tau[k], own_v);
}

double phi_prime(const ComposedChannel& ch, const PrecoderSet& precoders,
                 const Grouping& grouping, int k) {
  const int t = grouping.group_of[k];
  RVec weights = RVec::Zero(ch.K);
  for (int kp = 0; kp < ch.K; ++kp)
    if (grouping.group_of[kp] >= t) weights[kp] = 1.0;
  return phi_weighted(ch, precoders, k, weights, 1.0);
}

SeTrace se_run(const ComposedChannel& ch, const PrecoderSet& precoders,
               const TransferFunctionTable& table, int T_max, const SeOptions& opts) {
  const int K = ch.K;
  if (opts.sic_cancellation && opts.v_tar.size() != K)
    throw DimensionError("se_run: v_tar required for cancellation");
  SeTrace trace;
  trace.v = RMat::Zero(T_max, K);
  trace.rho = RMat::Zero(T_max, K);
  RVec v = RVec::Ones(K);
  std::vector<bool> frozen(K, false);
  for (int t = 0; t < T_max; ++t) {
    RVec rho = phi(ch, precoders, v);
    for (int k = 0; k < K; ++k) {
      if (frozen[k]) {
        v[k] = 0.0;
      } else {
        v[k] = table.psi(rho[k]);
        if (opts.sic_cancellation && v[k] <= opts.v_tar[k]) {
          frozen[k] = true;  // decoded and perfectly cancelled from here on
          v[k] = 0.0;
        }
      }
      trace.rho(t, k) = rho[k];
      trace.v(t, k) = v[k];
    }
  }
  return trace;
}

void PathSpec::validate(const RVec& v_tar) const {
  if (points.empty()) throw Error("path: empty");
  const Eigen::Index K = points.front().size();
  for (Eigen::Index k = 0; k < K; ++k)
    if (std::abs(points.front()[k] - 1.0) > 1e-12)
      throw Error("path: must start at (1,...,1)");
  for (size_t i = 1; i < points.size(); ++i)
    for (Eigen::Index k = 0; k < K; ++k)
      if (points[i][k] > points[i - 1][k] + 1e-12)
        throw Error("path: not coordinatewise non-increasing");
  for (Eigen::Index k = 0; k < K; ++k)
    if (points.back()[k] > v_tar[k] + 1e-12) throw Error("path: endpoint above target");
}

PathCheck path_feasible(const PathSpec& path, const TransferFunctionTable& table,
                        const ComposedChannel& ch, const PrecoderSet& precoders,
                        const RVec& v_tar, double eps) {
  PathCheck out;
  for (size_t i = 0; i < path.points.size(); ++i) {
    const RVec& v = path.points[i];
    RVec rho = phi(ch, precoders, v);
    for (int k = 0; k < ch.K; ++k) {
      double required;
      try {
        required = table.psi_inv(v[k]);
      } catch (const OutOfRangeError&) {
        out.feasible = false;  // table cannot certify this point
        out.first_violation_point = static_cast<int>(i);
        out.first_violation_user = k;
        return out;
      }
      if (!(rho[k] > required + eps)) {
        out.feasible = false;
        out.first_violation_point = static_cast<int>(i);
        out.first_violation_user = k;
        return out;
      }
    }
  }
  // Endpoint condition v^(T) <= v_tar (non-strict).
  for (int k = 0; k < ch.K; ++k) {
    if (path.points.back()[k] > v_tar[k]) {
      out.feasible = false;
      out.first_violation_point = static_cast<int>(path.points.size()) - 1;
      out.first_violation_user = k;
      return out;
    }
  }
  return out;
}

void save_trace_csv(const SeTrace& trace, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("save_trace_csv: cannot open " + path);
  os << std::setprecision(12);
  const int T = static_cast<int>(trace.v.rows());
  const int K = static_cast<int>(trace.v.cols());
  os << "t";
  for (int k = 0; k < K; ++k) os << ",v" << k + 1;
  for (int k = 0; k < K; ++k) os << ",rho" << k + 1;
  os << '\n';
  for (int t = 0; t < T; ++t) {
    os << t + 1;
    for (int k = 0; k < K; ++k) os << ',' << trace.v(t, k);
    for (int k = 0; k < K; ++k) os << ',' << trace.rho(t, k);
    os << '\n';
  }
}

}  // namespace ris
