#pragma once

#include <optional>
#include <vector>

#include "risopt/common.hpp"
#include "risopt/qcqp.hpp"

namespace ris {

/// One capacity-style constraint:
///   lhs^T x + lhs0 <= sum_b log2 det( base_b + sum_v x[var_idx[v]] * coef[v][b] )
/// with Hermitian blocks whose total stays positive definite at every interior
/// iterate.
struct LogDetTerm {
  RVec lhs;
  double lhs0 = 0.0;
  std::vector<int> var_idx;
  std::vector<CMat> base;                  // one per block
  std::vector<std::vector<CMat>> coef;     // coef[v][b]

  int blocks() const { return static_cast<int>(base.size()); }
};

struct LogDetProblem {
  int dim = 0;
  Quadratic objective;                      // PSD quadratic (possibly pure linear)
  std::vector<LogDetTerm> logdets;
  std::vector<std::pair<RVec, double>> lin_ge;  // a^T x >= b
  std::vector<Quadratic> quad_le;               // convex f(x) <= 0
  std::optional<RVec> start;
};

struct LogDetResult {
  RVec x;
  double objective = 0.0;
  double kkt_residual = 0.0;
};

/// Barrier Newton with analytic gradient/Hessian of logdet
/// (gradient entries tr{M^-1 dM}). All log-det constraints of the returned
/// point are satisfied with slack >= -tol.
LogDetResult solve_logdet_program(const LogDetProblem& problem, double tol);

/// sum_b log2 det(M_b(x)) - lhs(x) for a term; throws SingularMatrixError when
/// a block is not PD.
double logdet_slack(const LogDetTerm& term, const RVec& x);

/// Analytic gradient of logdet_slack (entries tr{M^-1 dM}/ln2 minus lhs).
RVec logdet_slack_gradient(const LogDetTerm& term, const RVec& x, int dim);

}  // namespace ris
