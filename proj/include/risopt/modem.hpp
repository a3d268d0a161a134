#pragma once

#include <vector>

#include "risopt/common.hpp"

namespace ris {

/// Zero-mean unit-power constellation with a Gray bit mapping.
/// Q=1: BPSK {+1,-1}. Q=2: QPSK, bits (b0,b1) -> ((1-2 b0) + i (1-2 b1))/sqrt(2),
/// so (0,0) -> (1+i)/sqrt(2).
class Constellation {
 public:
  explicit Constellation(int Q);

  int bits_per_symbol() const { return Q_; }
  int size() const { return static_cast<int>(points_.size()); }
  const std::vector<cplx>& points() const { return points_; }

  cplx map(const std::uint8_t* bits) const;

  /// Per-bit LLRs ln p(b=0|y)/p(b=1|y) for an AWGN observation y with complex
  /// noise variance `var` and uniform priors.
  void llr(cplx y, double var, double* out) const;

  /// Posterior mean/variance of the symbol given independent per-bit LLRs.
  void posterior_moments(const double* bit_llr, cplx* mean, double* var) const;

 private:
  int Q_;
  std::vector<cplx> points_;  // index = bits with b0 as MSB
};

/// Seeded uniform bit permutation. interleave: out[i] = in[perm[i]].
class Interleaver {
 public:
  Interleaver(int n, std::uint64_t seed);

  int size() const { return static_cast<int>(perm_.size()); }

  template <typename T>
  std::vector<T> interleave(const std::vector<T>& in) const {
    std::vector<T> out(in.size());
    for (size_t i = 0; i < perm_.size(); ++i) out[i] = in[perm_[i]];
    return out;
  }

  template <typename T>
  std::vector<T> deinterleave(const std::vector<T>& in) const {
    std::vector<T> out(in.size());
    for (size_t i = 0; i < perm_.size(); ++i) out[perm_[i]] = in[i];
    return out;
  }

 private:
  std::vector<int> perm_;
};

}  // namespace ris
