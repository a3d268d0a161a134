#include "risopt/modem.hpp"

namespace ris {

Constellation::Constellation(int Q) : Q_(Q) {
  if (Q == 1) {
    points_ = {cplx(1.0, 0.0), cplx(-1.0, 0.0)};
  } else if (Q == 2) {
    const double s = 1.0 / std::sqrt(2.0);
    points_.resize(4);
    for (int idx = 0; idx < 4; ++idx) {
      const int b0 = (idx >> 1) & 1;
      const int b1 = idx & 1;
      points_[idx] = cplx((1 - 2 * b0) * s, (1 - 2 * b1) * s);
    }
  } else {
    throw Error("Constellation: only BPSK (Q=1) and QPSK (Q=2) are supported");
  }
}

cplx Constellation::map(const std::uint8_t* bits) const {
  int idx = 0;
  for (int q = 0; q < Q_; ++q) idx = (idx << 1) | (bits[q] & 1);
  return points_[idx];
}

void Constellation::llr(cplx y, double var, double* out) const {
  var = std::max(var, 1e-300);
  const int n = size();
  // log p(y|c) up to a constant
  double logp[4];
  for (int idx = 0; idx < n; ++idx) logp[idx] = -std::norm(y - points_[idx]) / var;
  for (int q = 0; q < Q_; ++q) {
    double max0 = -std::numeric_limits<double>::infinity();
    double max1 = max0;
    for (int idx = 0; idx < n; ++idx) {
      const int bit = (idx >> (Q_ - 1 - q)) & 1;
      (bit ? max1 : max0) = std::max(bit ? max1 : max0, logp[idx]);
    }
    double s0 = 0.0, s1 = 0.0;
    for (int idx = 0; idx < n; ++idx) {
      const int bit = (idx >> (Q_ - 1 - q)) & 1;
      if (bit)
        s1 += std::exp(logp[idx] - max1);
      else
        s0 += std::exp(logp[idx] - max0);
    }
    out[q] = std::clamp(max0 + std::log(s0) - max1 - std::log(s1), -300.0, 300.0);
  }
}

void Constellation::posterior_moments(const double* bit_llr, cplx* mean, double* var) const {
  const int n = size();
  double p1[2];  // per-bit probability of value 1, filled per bit below
  double prob[4];
  double total = 0.0;
  for (int idx = 0; idx < n; ++idx) {
    double p = 1.0;
    for (int q = 0; q < Q_; ++q) {
      const int bit = (idx >> (Q_ - 1 - q)) & 1;
      // stable sigmoid
      const double l = bit_llr[q];
      if (l >= 0) {
        const double e = std::exp(-l);
        p1[1] = e / (1.0 + e);
      } else {
        const double e = std::exp(l);
        p1[1] = 1.0 / (1.0 + e);
      }
      p1[0] = 1.0 - p1[1];
      p *= p1[bit];
    }
    prob[idx] = p;
    total += p;
  }
  cplx m(0.0, 0.0);
  for (int idx = 0; idx < n; ++idx) m += (prob[idx] / total) * points_[idx];
  double v = 0.0;
  for (int idx = 0; idx < n; ++idx) v += (prob[idx] / total) * std::norm(points_[idx] - m);
  *mean = m;
  *var = v;
}

Interleaver::Interleaver(int n, std::uint64_t seed) : perm_(n) {
  for (int i = 0; i < n; ++i) perm_[i] = i;
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.index(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm_[i], perm_[j]);
  }
}

}  // namespace ris
