#pragma once

#include <string>
#include <vector>

#include "risopt/channel.hpp"
#include "risopt/coding.hpp"
#include "risopt/grouping.hpp"
#include "risopt/transceiver.hpp"

namespace ris {

inline constexpr double kRhoCap = 1e14;

/// LMMSE-ESE transfer function: rho_k = tau_k / (1 - v_k tau_k) with
/// tau_k = (1/J) sum_j w^H G^H [sum_k' v_k' (G W)(G W)^H + sigma2 I]^{-1} G w.
/// Computed per subcarrier (M x M inverses). rho is capped at 1e14 when
/// 1 - v_k tau_k <= 1e-14 (numerically perfect detectability).
RVec phi(const ComposedChannel& ch, const PrecoderSet& precoders, const RVec& v);

/// Generalized single-user transfer with arbitrary interference-variance
/// weights in the covariance and own-variance in the denominator.
double phi_weighted(const ComposedChannel& ch, const PrecoderSet& precoders, int k,
                    const RVec& weights, double own_v);

/// Groupwise-SIC transfer: interference only from the not-yet-decoded groups,
/// at unit variance; phi'_k = tau'_k / (1 - tau'_k).
double phi_prime(const ComposedChannel& ch, const PrecoderSet& precoders,
                 const Grouping& grouping, int k);

struct SeTrace {
  RMat v;    // T x K
  RMat rho;  // T x K
};

struct SeOptions {
  bool sic_cancellation = false;  // freeze users at v=0 once v <= v_tar
  RVec v_tar;                     // required when sic_cancellation
};

SeTrace se_run(const ComposedChannel& ch, const PrecoderSet& precoders,
               const TransferFunctionTable& table, int T_max, const SeOptions& opts = {});

/// Ordered list of points in the variance cube from (1,...,1) toward v_tar.
struct PathSpec {
  std::vector<RVec> points;
  void validate(const RVec& v_tar) const;
};

struct PathCheck {
  bool feasible = true;
  int first_violation_point = -1;
  int first_violation_user = -1;
};

/// True iff phi_k(v) > psi^{-1}(v_k) + eps at every path point for all k, and
/// the endpoint satisfies v <= v_tar componentwise.
PathCheck path_feasible(const PathSpec& path, const TransferFunctionTable& table,
                        const ComposedChannel& ch, const PrecoderSet& precoders,
                        const RVec& v_tar, double eps = 1e-9);

void save_trace_csv(const SeTrace& trace, const std::string& path);

}  // namespace ris
