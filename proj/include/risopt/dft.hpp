#pragma once

#include <vector>

#include <unsupported/Eigen/FFT>

#include "risopt/common.hpp"

namespace ris {

/// Unitary DFT matrix F with F(j,l) = exp(-i 2*pi*j*l/J) / sqrt(J).
inline CMat dft_matrix(int J) {
  CMat F(J, J);
  const double s = 1.0 / std::sqrt(static_cast<double>(J));
  for (int j = 0; j < J; ++j)
    for (int l = 0; l < J; ++l)
      F(j, l) = std::polar(s, -2.0 * kPi * j * l / J);
  return F;
}

/// X = F x with unitary F.
inline CVec dft_unitary(const CVec& x) {
  if (x.size() <= 1) return x;
  thread_local Eigen::FFT<double> fft;
  std::vector<cplx> in(x.data(), x.data() + x.size());
  std::vector<cplx> out;
  fft.fwd(out, in);
  CVec X = Eigen::Map<CVec>(out.data(), static_cast<Eigen::Index>(out.size()));
  X *= 1.0 / std::sqrt(static_cast<double>(x.size()));
  return X;
}

/// x = F^H X with unitary F.
inline CVec idft_unitary(const CVec& X) {
  if (X.size() <= 1) return X;
  thread_local Eigen::FFT<double> fft;
  std::vector<cplx> in(X.data(), X.data() + X.size());
  std::vector<cplx> out;
  fft.inv(out, in);  // includes 1/J
  CVec x = Eigen::Map<CVec>(out.data(), static_cast<Eigen::Index>(out.size()));
  x *= std::sqrt(static_cast<double>(X.size()));
  return x;
}

/// Per-subcarrier response of a tap sequence: lambda_j = sum_l h(l) exp(-i 2*pi*j*l/J).
/// This is the unnormalized DFT of the first (block-)column of the circulant
/// channel matrix, i.e. exactly the block-diagonal of F_M H F^H for unitary F.
/// `taps` is L x M (one row per tap); the result is J x M.
inline CMat freq_response(const CMat& taps, int J) {
  const int L = static_cast<int>(taps.rows());
  const int M = static_cast<int>(taps.cols());
  if (L > J) throw DimensionError("freq_response: more taps than subcarriers");
  CMat out = CMat::Zero(J, M);
  for (int j = 0; j < J; ++j) {
    for (int l = 0; l < L; ++l) {
      out.row(j) += taps.row(l) * std::polar(1.0, -2.0 * kPi * j * l / J);
    }
  }
  return out;
}

}  // namespace ris
