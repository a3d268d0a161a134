#pragma once

#include <optional>
#include <vector>

#include "risopt/channel.hpp"
#include "risopt/coding.hpp"
#include "risopt/grouping.hpp"
#include "risopt/state_evolution.hpp"
#include "risopt/transceiver.hpp"

namespace ris {

/// One extrinsic-SINR constraint phi_k >= rho_req where the interference
/// covariance carries per-user variance weights and the denominator carries
/// own_v: phi = tau / (1 - own_v * tau), tau = (1/J) a_k^H B^{-1} a_k,
/// B = sum_k' weights_k' [G_k' W_k']^2 + sigma2 I.
/// Groupwise SIC uses weights in {0,1} and own_v = 1; the diagonal-path
/// baseline uses weights = own_v = v at each grid point.
struct SinrConstraint {
  int user = 0;
  RVec weights;
  double own_v = 1.0;
  double rho_req = 0.0;
};

std::vector<SinrConstraint> sic_constraints(const Grouping& grouping, const RVec& rho_tar);

struct FpOptions {
  double inner_tol = 1e-4;   // relative power decrease stop
  int max_inner = 60;
  double qcqp_tol = 1e-9;
  double tightness_tol = 1e-8;  // FP substitution identity guard
};

struct FpDiagnostics {
  int inner_iters = 0;
  double max_tightness_residual = 0.0;  // |(2Re{y^H a} - y^H B y) - a^H B^-1 a| / J
  double min_quadratic_margin = 0.0;    // min_k a^H B^-1 a - J rho/(1+v rho)
};

/// Fractional-programming precoder update (alternating y-update and convex
/// QCQP). Throws InfeasibleError when the targets are unreachable at this
/// theta/grouping.
PrecoderSet fp_precode(const EffectiveChannel& eff, const CVec& theta,
                       const std::vector<SinrConstraint>& constraints,
                       const std::optional<PrecoderSet>& warm, const FpOptions& opts = {},
                       FpDiagnostics* diag = nullptr);

/// Quadratic form of the surrogate in e^{i beta}:
/// l2(beta) = 2 Re{u^H e^{i beta}} - (e^{i beta})^H U e^{i beta} + C1,
/// equal to (2/J) Re{y^H a(beta)} - (1/J) y^H B(beta) y.
struct ScaWorkingSet {
  CVec u;
  CMat U;
  double C1 = 0.0;
  double tau = 0.0;       // tau at the expansion point
  double phi = 0.0;       // phi at the expansion point
  double alpha = 0.0;     // 1 / (J (1 - own_v tau)^2)
  double kappa = 0.0;     // ||Gamma||_F
  RVec grad_l2;           // gradient of l2 at the expansion point
  double rho_req = 0.0;
  double own_v = 1.0;
  int J = 0;
};

ScaWorkingSet build_sca_working_set(const EffectiveChannel& eff, const PrecoderSet& precoders,
                                    const SinrConstraint& con, const RVec& beta_bar);

double eval_l2(const ScaWorkingSet& ws, const RVec& beta);

/// Same value computed from raw channel assembly at fixed y(beta_bar);
/// validates the (u, U, C1) reconstruction.
double eval_l2_raw(const EffectiveChannel& eff, const PrecoderSet& precoders,
                   const SinrConstraint& con, const RVec& beta_bar, const RVec& beta);

/// Full surrogate l(beta, beta_bar) = phi - rho_req
///   + J*alpha*(grad_l2^T (beta - beta_bar) - kappa/2 ||beta - beta_bar||^2).
double eval_surrogate(const ScaWorkingSet& ws, const RVec& beta, const RVec& beta_bar);

struct ScaOptions {
  double gap_tol = 1e-5;  // stop when the min-gap improvement falls below
  int max_iters = 40;
  double qcqp_tol = 1e-9;
};

struct ScaDiagnostics {
  int iters = 0;
  std::vector<double> min_gap_trace;  // non-decreasing
};

/// Successive convex approximation over the phase parameters beta
/// (theta = e^{i beta}; unit modulus by construction).
RVec sca_beamform(const EffectiveChannel& eff, const PrecoderSet& precoders,
                  const std::vector<SinrConstraint>& constraints, const RVec& beta_init,
                  const ScaOptions& opts = {}, ScaDiagnostics* diag = nullptr);

/// Achievable rate of user k against the not-yet-decoded set (log-det
/// difference), and the groupwise sum rate.
double group_rate(const ComposedChannel& ch, const PrecoderSet& precoders,
                  const std::vector<int>& undecoded, int k);
double sum_rate(const ComposedChannel& ch, const PrecoderSet& precoders, const Grouping& g);

/// Heuristic grouping: greedy fill by descending rate, then single-user
/// pre/sub reassignment passes accepting strict sum-rate improvements.
Grouping group_users(const ComposedChannel& ch, int T_max,
                     const std::optional<PrecoderSet>& precoders = std::nullopt);

struct AoOptions {
  double power_tol = 1e-3;
  int max_rounds = 30;
  FpOptions fp;
  ScaOptions sca;
};

struct AoRound {
  int round = 0;
  double power = 0.0;
  double min_gap = 0.0;
};

struct AoResult {
  PrecoderSet precoders;  // on the optimizer grid
  CVec theta;
  Grouping grouping;
  std::vector<double> power_trace;
  std::vector<AoRound> rounds;
};

/// Alternating FP precoding / SCA passive beamforming over a fixed
/// constraint-set builder (the constraints do not depend on theta).
AoResult alternating_optimize(const EffectiveChannel& eff,
                              const std::vector<SinrConstraint>& constraints, const CVec& theta0,
                              const AoOptions& opts = {});

/// Groupwise SIC optimization: random theta0, one grouping pass, then AO.
AoResult sic_optimize(const EffectiveChannel& eff, int T_max, const RVec& rho_tar,
                      std::uint64_t seed, const AoOptions& opts = {},
                      bool regroup_each_round = false);

/// Constraints of the diagonal-path baseline: common variance v on a
/// geometric grid of `points` values from 1 to v_end, one constraint per
/// (user, grid point) requiring phi_k(v 1) >= psi^{-1}(v) + eps.
std::vector<SinrConstraint> diagonal_path_constraints(int K, const TransferFunctionTable& table,
                                                      double v_end, int points, double eps);

/// Diagonal-path baseline, solved with the same FP/SCA machinery over the
/// enlarged constraint set (no iteration-count constraint).
AoResult diagonal_path_optimize(const EffectiveChannel& eff, const TransferFunctionTable& table,
                                double v_end, std::uint64_t seed, int points = 64,
                                double eps = 1e-6, const AoOptions& opts = {});

}  // namespace ris
