#include "risopt/transceiver.hpp"

#include <Eigen/Cholesky>

#include "risopt/dft.hpp"

namespace ris {

namespace {
constexpr double kVFloor = 1e-8;
constexpr double kExtCap = 1e12;
}  // namespace

PrecoderSet PrecoderSet::expand(int J_full) const {
  if (J_full % J != 0) throw NonDivisorError("PrecoderSet::expand: J must divide J_full");
  const int rep = J_full / J;
  PrecoderSet out;
  out.J = J_full;
  out.w.resize(w.size());
  for (size_t k = 0; k < w.size(); ++k) {
    CVec full(J_full);
    for (int j = 0; j < J; ++j) full.segment(static_cast<Eigen::Index>(j) * rep, rep).setConstant(w[k][j]);
    out.w[k] = std::move(full);
  }
  return out;
}

double PrecoderSet::total_power() const {
  double p = 0.0;
  for (const auto& wk : w) p += wk.squaredNorm();
  return p;
}

double PrecoderSet::avg_symbol_power() const {
  return total_power() / (static_cast<double>(J) * static_cast<double>(w.size()));
}

PrecoderSet PrecoderSet::uniform(int K, int J, double power_per_entry) {
  PrecoderSet p;
  p.J = J;
  p.w.assign(K, CVec::Constant(J, cplx(std::sqrt(power_per_entry), 0.0)));
  return p;
}

std::vector<CMat> transmit(const ComposedChannel& ch, const PrecoderSet& precoders,
                           const std::vector<CVec>& x, double sigma2, Rng& rng) {
  const int K = ch.K, M = ch.M, J = ch.J;
  if (static_cast<int>(x.size()) != K || precoders.users() != K || precoders.J != J)
    throw DimensionError("transmit: dimension mismatch");
  const int S = static_cast<int>(x[0].size()) / J;
  if (S * J != static_cast<int>(x[0].size()))
    throw DimensionError("transmit: symbol count not a multiple of J");

  std::vector<CMat> r(S, CMat::Zero(J, M));
  const double nstd = std::sqrt(sigma2);
  for (int s = 0; s < S; ++s) {
    for (int k = 0; k < K; ++k) {
      CVec X = dft_unitary(x[k].segment(static_cast<Eigen::Index>(s) * J, J));
      for (int j = 0; j < J; ++j)
        r[s].row(j) += (precoders.w[k][j] * X[j]) * ch.G[k].row(j);
    }
    if (sigma2 > 0.0)
      for (int j = 0; j < J; ++j)
        for (int m = 0; m < M; ++m) r[s](j, m) += nstd * rng.cgaussian();
  }
  return r;
}

LmmseOutput lmmse_ese(const std::vector<CMat>& r, const ComposedChannel& ch,
                      const PrecoderSet& precoders, const std::vector<CVec>& x_pri,
                      const RVec& v) {
  const int K = ch.K, M = ch.M, J = ch.J;
  const int S = static_cast<int>(r.size());
  if (static_cast<int>(x_pri.size()) != K || v.size() != K)
    throw DimensionError("lmmse_ese: state dimension mismatch");

  // Frequency-domain priors.
  std::vector<std::vector<CVec>> X_pri(K, std::vector<CVec>(S));
  for (int k = 0; k < K; ++k)
    for (int s = 0; s < S; ++s)
      X_pri[k][s] = dft_unitary(x_pri[k].segment(static_cast<Eigen::Index>(s) * J, J));

  std::vector<std::vector<CVec>> X_post(K, std::vector<CVec>(S, CVec::Zero(J)));
  RVec tau_tilde = RVec::Zero(K);  // (1/J) sum_j |w|^2 G^H V^-1 G

  std::vector<CVec> gw(K);  // per user at current subcarrier
  for (int j = 0; j < J; ++j) {
    CMat V = ch.sigma2 * CMat::Identity(M, M);
    for (int k = 0; k < K; ++k) {
      gw[k] = precoders.w[k][j] * ch.G[k].row(j).transpose();
      V += v[k] * (gw[k] * gw[k].adjoint());
    }
    Eigen::LLT<CMat> llt(V);
    if (llt.info() != Eigen::Success)
      throw SingularMatrixError("lmmse_ese: singular covariance (sigma2=0, rank-deficient)");
    std::vector<CVec> Vinv_gw(K);
    for (int k = 0; k < K; ++k) {
      Vinv_gw[k] = llt.solve(gw[k]);
      tau_tilde[k] += (gw[k].dot(Vinv_gw[k])).real();  // dot() conjugates the left side
    }
    for (int s = 0; s < S; ++s) {
      CVec e = r[s].row(j).transpose();
      for (int k = 0; k < K; ++k) e -= gw[k] * X_pri[k][s][j];
      for (int k = 0; k < K; ++k)
        X_post[k][s][j] = X_pri[k][s][j] + v[k] * (Vinv_gw[k].dot(e));
    }
  }
  tau_tilde /= static_cast<double>(J);

  LmmseOutput out;
  out.x_ext.resize(K);
  out.v_ext.resize(K);
  out.v_post.resize(K);
  for (int k = 0; k < K; ++k) {
    const double v_post = v[k] - v[k] * v[k] * tau_tilde[k];
    out.v_post[k] = v_post;
    const double denom = 1.0 / std::max(v_post, 1e-300) - 1.0 / v[k];
    double v_ext = denom > 1.0 / kExtCap ? 1.0 / denom : kExtCap;
    v_ext = std::max(v_ext, kVFloor);
    out.v_ext[k] = v_ext;
    CVec xe(static_cast<Eigen::Index>(S) * J);
    for (int s = 0; s < S; ++s) {
      CVec X_ext = v_ext * (X_post[k][s] / v_post - X_pri[k][s] / v[k]);
      xe.segment(static_cast<Eigen::Index>(s) * J, J) = idft_unitary(X_ext);
    }
    out.x_ext[k] = std::move(xe);
  }
  return out;
}

FrameResult simulate_frame(const ComposedChannel& ch, const PrecoderSet& precoders,
                           const CodeSpec& spec, int T_max, int bp_iters, Rng& rng) {
  const int K = ch.K, J = ch.J;
  const int n_sym = spec.symbols_per_codeword();
  if (n_sym % J != 0)
    throw DimensionError("simulate_frame: codeword symbols not a multiple of J");
  if (T_max < 1) throw Error("simulate_frame: T_max must be >= 1");

  std::vector<std::vector<std::uint8_t>> msgs(K);
  std::vector<Interleaver> pis;
  std::vector<CVec> x(K);
  for (int k = 0; k < K; ++k) {
    msgs[k].resize(spec.code->info_length());
    for (auto& b : msgs[k]) b = rng.bit() ? 1 : 0;
    pis.emplace_back(spec.code->n(), rng.raw());
    x[k] = encode_modulate(spec, pis[k], msgs[k]);
  }
  auto r = transmit(ch, precoders, x, ch.sigma2, rng);

  FrameResult res;
  res.bit_errors.assign(K, 0);
  res.info_bits = spec.code->info_length();
  res.v_trace = RMat::Zero(T_max, K);
  res.rho_trace = RMat::Zero(T_max, K);
  res.emp_ext_var = RMat::Zero(T_max, K);

  std::vector<CVec> x_pri(K, CVec::Zero(n_sym));
  RVec v = RVec::Ones(K);
  std::vector<DecOutput> dec(K);

  for (int t = 0; t < T_max; ++t) {
    LmmseOutput ese = lmmse_ese(r, ch, precoders, x_pri, v);
    for (int k = 0; k < K; ++k) {
      res.rho_trace(t, k) = 1.0 / ese.v_ext[k];
      res.emp_ext_var(t, k) = (ese.x_ext[k] - x[k]).squaredNorm() / n_sym;
      dec[k] = app_decode(spec, pis[k], ese.x_ext[k], ese.v_ext[k], bp_iters);
      // DEC -> ESE extrinsic update, clipped to [1e-8, 1].
      const double denom = 1.0 / std::max(dec[k].vbar, 1e-300) - 1.0 / ese.v_ext[k];
      double v_new = denom > 0.0 ? 1.0 / denom : 1.0;
      v_new = std::clamp(v_new, kVFloor, 1.0);
      CVec x_new = v_new * (dec[k].xbar / std::max(dec[k].vbar, kVFloor) -
                            ese.x_ext[k] / ese.v_ext[k]);
      v[k] = v_new;
      x_pri[k] = std::move(x_new);
      res.v_trace(t, k) = v_new;
    }
  }
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < res.info_bits; ++i)
      res.bit_errors[k] += dec[k].hard_info[i] != msgs[k][i];
  return res;
}

MonteCarloResult simulate_frames(const ComposedChannel& ch, const PrecoderSet& precoders,
                                 const CodeSpec& spec, int T_max, int bp_iters, int frames,
                                 std::uint64_t seed) {
  const int K = ch.K;
  MonteCarloResult mc;
  mc.ber.assign(K, 0.0);
  mc.v_trace = RMat::Zero(T_max, K);
  mc.rho_trace = RMat::Zero(T_max, K);
  mc.frames = frames;
  Rng rng(seed);
  std::vector<long> errors(K, 0);
  long bits = 0;
  for (int f = 0; f < frames; ++f) {
    FrameResult fr = simulate_frame(ch, precoders, spec, T_max, bp_iters, rng);
    for (int k = 0; k < K; ++k) errors[k] += fr.bit_errors[k];
    bits = fr.info_bits;
    mc.v_trace += fr.v_trace;
    mc.rho_trace += fr.rho_trace;
  }
  for (int k = 0; k < K; ++k)
    mc.ber[k] = static_cast<double>(errors[k]) / (static_cast<double>(bits) * frames);
  mc.v_trace /= frames;
  mc.rho_trace /= frames;
  return mc;
}

}  // namespace ris
