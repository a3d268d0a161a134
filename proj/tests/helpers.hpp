#pragma once

// Shared test fixtures and independent oracles. Everything here recomputes
// quantities from first principles (dense matrices, brute force) so the
// per-subcarrier implementations are checked against a separate path.

#include "risopt/channel.hpp"
#include "risopt/dft.hpp"
#include "risopt/transceiver.hpp"

namespace ris::testing {

/// Synthetic frequency-domain channel with CN(0, scale^2) entries; avoids the
/// geometry machinery so tests control dimensions directly.
inline EffectiveChannel random_effective(int K, int M, int N, int J, double sigma2,
                                         std::uint64_t seed, double direct_scale = 1.0,
                                         double cascade_scale = 0.3) {
  Rng rng(seed);
  EffectiveChannel eff;
  eff.K = K;
  eff.M = M;
  eff.N = N;
  eff.J = J;
  eff.L_cp = 8;
  eff.sigma2 = sigma2;
  eff.direct.resize(K);
  eff.cascade.assign(K, std::vector<CMat>(N));
  for (int k = 0; k < K; ++k) {
    CMat d(J, M);
    for (int j = 0; j < J; ++j)
      for (int m = 0; m < M; ++m) d(j, m) = direct_scale * rng.cgaussian();
    eff.direct[k] = std::move(d);
    for (int n = 0; n < N; ++n) {
      CMat c(J, M);
      for (int j = 0; j < J; ++j)
        for (int m = 0; m < M; ++m) c(j, m) = cascade_scale * rng.cgaussian();
      eff.cascade[k][n] = std::move(c);
    }
  }
  return eff;
}

inline CVec random_theta(int N, Rng& rng) {
  CVec t(N);
  for (int n = 0; n < N; ++n) t[n] = std::polar(1.0, rng.uniform(0.0, 2.0 * kPi));
  return t;
}

inline PrecoderSet random_precoders(int K, int J, Rng& rng, double scale = 1.0) {
  PrecoderSet W;
  W.J = J;
  W.w.resize(K);
  for (int k = 0; k < K; ++k) {
    CVec w(J);
    for (int j = 0; j < J; ++j) w[j] = scale * rng.cgaussian();
    W.w[k] = std::move(w);
  }
  return W;
}

/// Dense A_k = G_k W_k F (JM x J) for the Eq.-(10) style oracle.
inline CMat dense_A(const ComposedChannel& ch, const PrecoderSet& W, int k) {
  const int J = ch.J, M = ch.M;
  const CMat F = dft_matrix(J);
  CMat A(J * M, J);
  for (int j = 0; j < J; ++j)
    for (int m = 0; m < M; ++m)
      for (int l = 0; l < J; ++l) A(j * M + m, l) = ch.G[k](j, m) * W.w[k][j] * F(j, l);
  return A;
}

struct DenseLmmseResult {
  std::vector<CVec> x_ext;
  RVec v_ext;
  RVec v_post;
  std::vector<CVec> x_post;
};

/// JM-dimensional posterior/extrinsic formulas, materialized densely.
inline DenseLmmseResult dense_lmmse_oracle(const ComposedChannel& ch, const PrecoderSet& W,
                                           const std::vector<CVec>& x_pri, const RVec& v,
                                           const CMat& r) {
  const int K = ch.K, M = ch.M, J = ch.J;
  std::vector<CMat> A(K);
  for (int k = 0; k < K; ++k) A[k] = dense_A(ch, W, k);
  CMat V = ch.sigma2 * CMat::Identity(J * M, J * M);
  for (int k = 0; k < K; ++k) V += v[k] * (A[k] * A[k].adjoint());
  CVec r_vec(J * M);
  for (int j = 0; j < J; ++j)
    for (int m = 0; m < M; ++m) r_vec[j * M + m] = r(j, m);
  CVec resid = r_vec;
  for (int k = 0; k < K; ++k) resid -= A[k] * x_pri[k];
  const CMat Vinv = V.inverse();

  DenseLmmseResult out;
  out.x_ext.resize(K);
  out.x_post.resize(K);
  out.v_ext.resize(K);
  out.v_post.resize(K);
  for (int k = 0; k < K; ++k) {
    const CMat Vpost = v[k] * CMat::Identity(J, J) - v[k] * v[k] * A[k].adjoint() * Vinv * A[k];
    const double v_post = Vpost.trace().real() / J;
    const CVec x_post = x_pri[k] + v[k] * (A[k].adjoint() * (Vinv * resid));
    const double v_ext = 1.0 / (1.0 / v_post - 1.0 / v[k]);
    out.x_post[k] = x_post;
    out.v_post[k] = v_post;
    out.v_ext[k] = v_ext;
    out.x_ext[k] = v_ext * (x_post / v_post - x_pri[k] / v[k]);
  }
  return out;
}

/// Dense Eq.-(9a) transmit oracle: r' = sum_k G_k W_k F x_k + eta.
inline CMat dense_transmit_oracle(const ComposedChannel& ch, const PrecoderSet& W,
                                  const std::vector<CVec>& x, const CVec& eta) {
  const int K = ch.K, M = ch.M, J = ch.J;
  CVec r_vec = eta;
  for (int k = 0; k < K; ++k) r_vec += dense_A(ch, W, k) * x[k];
  CMat r(J, M);
  for (int j = 0; j < J; ++j)
    for (int m = 0; m < M; ++m) r(j, m) = r_vec[j * M + m];
  return r;
}

}  // namespace ris::testing
