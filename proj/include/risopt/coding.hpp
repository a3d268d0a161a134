#pragma once

#include <memory>
#include <string>
#include <vector>

#include "risopt/common.hpp"
#include "risopt/ldpc.hpp"
#include "risopt/modem.hpp"

namespace ris {

struct CodeSpec {
  std::shared_ptr<const LdpcCode> code;
  Constellation constellation{2};

  int symbols_per_codeword() const { return code->n() / constellation.bits_per_symbol(); }
  double rate() const { return code->rate(); }
};

CodeSpec load_code(const std::string& alist_path, int Q);

/// Encode + interleave + modulate.
CVec encode_modulate(const CodeSpec& spec, const Interleaver& pi,
                     const std::vector<std::uint8_t>& message);

struct DecOutput {
  CVec xbar;                           // posterior symbol means, Eq.-style constellation expectation
  double vbar = 0.0;                   // average posterior symbol variance
  std::vector<double> posterior_llr;   // codeword order
  std::vector<std::uint8_t> hard_info; // hard decisions at info positions
};

/// Soft demodulation of the extrinsic AWGN observations, de-interleave, APP
/// decode (belief propagation), posterior constellation moments.
DecOutput app_decode(const CodeSpec& spec, const Interleaver& pi, const CVec& x_ext,
                     double noise_variance, int bp_iters);

/// Monte Carlo tabulation of the DEC transfer v = psi(rho) and the BER map.
/// Values are stored on an ascending rho grid (dB); v is the DEC output
/// variance after the extrinsic subtraction (clipped to [1e-8, 1]) and pe is
/// the information-bit error rate. Both are isotonically regressed so that v
/// and pe are non-increasing in rho.
struct TransferFunctionTable {
  std::vector<double> rho_db;
  std::vector<double> v;
  std::vector<double> pe;
  long bits_per_point = 0;  // info bits simulated per grid point

  static constexpr double kVFloor = 1e-8;

  /// v = psi(rho). Below the grid the zero-information limit 1 is returned;
  /// above the grid the value saturates at the last entry (an error is raised
  /// if that entry has not converged to the clip floor, since the table then
  /// cannot resolve the attained quality).
  double psi(double rho_linear) const;

  /// Smallest rho with psi(rho) <= v_target. Throws OutOfRangeError when the
  /// table cannot certify v_target.
  double psi_inv(double v_target) const;

  /// BER as a function of the DEC input variance v (clamped at the grid ends).
  double xi_of_v(double v_in) const;

  /// Largest v with xi(v) <= pe_target; zero-error grid points count as
  /// resolved only when their binomial upper bound (3 / bits) is below target.
  double xi_inv(double pe_target) const;

  void save(const std::string& path) const;
  static TransferFunctionTable load(const std::string& path);
};

TransferFunctionTable estimate_transfer(const CodeSpec& spec, const std::vector<double>& rho_grid_db,
                                        int frames_per_point, int bp_iters, std::uint64_t seed);

struct SinrTarget {
  double v_tar = 0.0;
  double rho_tar = 0.0;  // linear
};

/// v_tar = xi^{-1}(P_tar), rho_tar = psi^{-1}(v_tar); round trip psi(rho_tar) <= v_tar.
SinrTarget target_to_sinr(const TransferFunctionTable& table, double p_tar);

/// Pool-adjacent-violators, non-increasing fit.
std::vector<double> isotonic_non_increasing(const std::vector<double>& y);

}  // namespace ris
