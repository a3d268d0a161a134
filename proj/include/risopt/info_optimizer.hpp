#pragma once

#include <vector>

#include "risopt/channel.hpp"
#include "risopt/transceiver.hpp"

namespace ris {

/// Per-user rate floors for the capacity-region constraints. With a
/// downsampled J'-subcarrier channel the floor is scaled by J'/J so both
/// sides of each constraint count the same subcarriers.
struct RateSpec {
  double Q = 2.0;
  std::vector<double> R;  // per-user code rate
  int J_full = 0;
  int L_cp = 0;
  int J_sub = 0;

  double floor(const std::vector<int>& subset) const {
    double f = 0.0;
    for (int k : subset) f += Q * (J_full + L_cp) * R[k];
    return f * (static_cast<double>(J_sub) / J_full);
  }
};

/// All nonempty subsets of {0..K-1}.
std::vector<std::vector<int>> all_subsets(int K);

/// logdet(I + (1/sigma2) sum_{k in subset} [G_k W_k]^2) minus the subset's
/// rate floor, computed per subcarrier (block-diagonal) and summed.
double capacity_slack(const ComposedChannel& ch, const PrecoderSet& precoders,
                      const std::vector<int>& subset, const RateSpec& rates);

/// Power-minimizing precoders under all 2^K-1 capacity constraints at fixed
/// theta (convex in the per-subcarrier powers).
PrecoderSet solve_w_info(const EffectiveChannel& eff, const CVec& theta, const RateSpec& rates,
                         double tol = 1e-8);

struct ThetaInfoResult {
  cplx theta_n;
  double delta_r = 0.0;
  bool normalized = false;
};

/// Per-element relaxation |theta_n| <= 1, maximizing the common rate margin
/// Delta R; the returned element is normalized to unit modulus per the
/// unconditional variant unless `guarded` is set (then only when the
/// normalized point stays capacity-feasible).
ThetaInfoResult solve_theta_info(const EffectiveChannel& eff, const CVec& theta,
                                 const PrecoderSet& precoders, const RateSpec& rates, int n,
                                 bool guarded = false, double tol = 1e-8);

struct InfoOptions {
  double power_tol = 1e-3;
  int max_rounds = 30;
  bool guarded_normalization = false;
  double solver_tol = 1e-8;
};

struct InfoResult {
  PrecoderSet precoders;
  CVec theta;
  std::vector<double> power_trace;
  bool non_monotone = false;  // AO hit a power increase (convergence not guaranteed)
};

/// Alternating W-solve and per-element theta solves; stops on small relative
/// power change, the round cap, or the first power increase (recorded).
/// Every returned iterate is capacity-feasible at unit-modulus theta.
InfoResult optimize_info(const EffectiveChannel& eff, const RateSpec& rates, std::uint64_t seed,
                         const InfoOptions& opts = {});

}  // namespace ris
