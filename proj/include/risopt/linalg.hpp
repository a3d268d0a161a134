#pragma once

#include <Eigen/Cholesky>

#include "risopt/common.hpp"

namespace ris {

/// Verifies A is Hermitian to relative tolerance (default 1e-12).
inline void require_hermitian(const CMat& A, double rtol = 1e-12) {
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  const double err = (A - A.adjoint()).cwiseAbs().maxCoeff();
  if (err > rtol * scale) throw SingularMatrixError("matrix is not Hermitian");
}

/// Cholesky of a Hermitian positive-definite matrix; fails loudly on non-PD input.
inline Eigen::LLT<CMat> llt_pd(const CMat& A) {
  Eigen::LLT<CMat> llt(A);
  if (llt.info() != Eigen::Success)
    throw SingularMatrixError("matrix is not positive definite");
  return llt;
}

/// True iff A + shift*I admits a Cholesky factorization (PSD check with tolerance).
inline bool is_psd(const RMat& A, double tol = 1e-10) {
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  RMat shifted = A + tol * scale * RMat::Identity(A.rows(), A.cols());
  Eigen::LLT<RMat> llt(shifted);
  return llt.info() == Eigen::Success;
}

// Complex decision variables are expanded once into interleaved real pairs:
// z_k = x[2k] + i x[2k+1]. The helpers below keep that convention in one place.

inline RVec re_expand(const CVec& z) {
  RVec x(2 * z.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    x[2 * k] = z[k].real();
    x[2 * k + 1] = z[k].imag();
  }
  return x;
}

inline CVec re_collapse(const RVec& x) {
  if (x.size() % 2 != 0) throw DimensionError("re_collapse: odd length");
  CVec z(x.size() / 2);
  for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = cplx(x[2 * k], x[2 * k + 1]);
  return z;
}

/// Real symmetric M with x^T M x = z^H A z for Hermitian A (interleaved pairs).
inline RMat re_expand_hermitian_form(const CMat& A) {
  const Eigen::Index n = A.rows();
  RMat M(2 * n, 2 * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const double R = A(j, k).real();
      const double I = A(j, k).imag();
      M(2 * j, 2 * k) = R;
      M(2 * j, 2 * k + 1) = -I;
      M(2 * j + 1, 2 * k) = I;
      M(2 * j + 1, 2 * k + 1) = R;
    }
  }
  return 0.5 * (M + M.transpose());
}

/// Real r with r^T x = Re{c^H z} (interleaved pairs).
inline RVec re_expand_linear(const CVec& c) {
  RVec r(2 * c.size());
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    r[2 * k] = c[k].real();
    r[2 * k + 1] = c[k].imag();
  }
  return r;
}

}  // namespace ris
