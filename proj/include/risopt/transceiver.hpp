#pragma once

#include <vector>

#include "risopt/channel.hpp"
#include "risopt/coding.hpp"
#include "risopt/common.hpp"

namespace ris {

/// Per-user per-subcarrier complex precoder diagonals on a J-point grid.
struct PrecoderSet {
  int J = 0;
  std::vector<CVec> w;  // [k], length J

  int users() const { return static_cast<int>(w.size()); }

  /// Replicates each entry over a block of J_full/J adjacent subcarriers
  /// (every J/J' subcarriers share the same power).
  PrecoderSet expand(int J_full) const;

  /// sum_k sum_j |w_k(j)|^2 on this grid.
  double total_power() const;

  /// (1/(J K)) sum_k sum_j |w_k(j)|^2.
  double avg_symbol_power() const;

  static PrecoderSet uniform(int K, int J, double power_per_entry);
};

struct LmmseOutput {
  std::vector<CVec> x_ext;  // per user, symbol domain
  RVec v_ext;               // per user
  RVec v_post;              // per user (diagnostic)
};

/// Per-subcarrier LMMSE elementary signal estimator. `r` holds one J x M
/// matrix per OFDM symbol; `x_pri` are symbol-domain prior means (length
/// S*J per user) and `v` the per-user prior variances. Never materializes
/// JM x JM matrices.
LmmseOutput lmmse_ese(const std::vector<CMat>& r, const ComposedChannel& ch,
                      const PrecoderSet& precoders, const std::vector<CVec>& x_pri,
                      const RVec& v);

/// Frequency-domain transmit: r'(j) = sum_k G_k(j) w_k(j) X_k(j) + eta(j)
/// with X = F x per OFDM symbol and eta ~ CN(0, sigma2 I).
std::vector<CMat> transmit(const ComposedChannel& ch, const PrecoderSet& precoders,
                           const std::vector<CVec>& x, double sigma2, Rng& rng);

struct FrameResult {
  std::vector<long> bit_errors;  // per user
  long info_bits = 0;            // per user
  RMat v_trace;                  // T x K, DEC-output prior variance fed back to the ESE
  RMat rho_trace;                // T x K, extrinsic SINR 1/v_ext
  RMat emp_ext_var;              // T x K, empirical variance of (x_ext - x)
};

/// One coded frame through the iterative receiver (T_max LMMSE/DEC rounds).
FrameResult simulate_frame(const ComposedChannel& ch, const PrecoderSet& precoders,
                           const CodeSpec& spec, int T_max, int bp_iters, Rng& rng);

struct MonteCarloResult {
  std::vector<double> ber;  // per user
  RMat v_trace;             // averaged
  RMat rho_trace;           // averaged
  long frames = 0;
};

MonteCarloResult simulate_frames(const ComposedChannel& ch, const PrecoderSet& precoders,
                                 const CodeSpec& spec, int T_max, int bp_iters, int frames,
                                 std::uint64_t seed);

}  // namespace ris
