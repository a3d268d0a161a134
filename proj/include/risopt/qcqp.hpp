#pragma once

#include <optional>
#include <vector>

#include "risopt/common.hpp"

namespace ris {

/// f(x) = 0.5 x^T P x + q^T x + c.
struct Quadratic {
  RMat P;
  RVec q;
  double c = 0.0;

  double eval(const RVec& x) const { return 0.5 * x.dot(P * x) + q.dot(x) + c; }
  RVec grad(const RVec& x) const { return P * x + q; }
};

enum class Sense { LE, GE };

/// Convex QCQP: minimize a convex quadratic subject to convex quadratic
/// constraints. Constraints are stored canonically as f_i(x) <= 0 with PSD
/// quadratic part. Complex decision variables are expanded to interleaved
/// real/imaginary pairs by the caller (see linalg.hpp).
struct QcqpProblem {
  int dim = 0;
  Quadratic objective;               // P PSD
  std::vector<Quadratic> cons;       // f_i(x) <= 0, P_i PSD
  std::optional<RVec> start;         // optional strictly feasible initial point

  /// sense LE: 0.5 x^T P x + q^T x + c <= 0 (P PSD).
  /// sense GE: -0.5 x^T P x + q^T x + c >= 0 (P PSD), i.e. a concave function
  /// bounded below; stored negated.
  void add_constraint(const RMat& P, const RVec& q, double c, Sense sense) {
    if (sense == Sense::LE)
      cons.push_back({P, q, c});
    else
      cons.push_back({P, -q, -c});
  }
};

struct QcqpResult {
  RVec x;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int outer_iters = 0;
  std::vector<double> objective_trace;  // objective after each centering stage
};

/// Log-barrier interior-point solve. Returns a point with KKT stationarity,
/// primal feasibility and complementary-slackness residuals <= tol.
/// Throws InfeasibleError if phase-I certifies no strictly feasible point,
/// MaxIterationsError past the iteration caps (200 outer x 50 inner).
QcqpResult solve_qcqp(const QcqpProblem& problem, double tol);

/// One piece of a max-min objective: concave quadratic
/// p(x) = 0.5 x^T P x + q^T x + c with P negative semidefinite.
struct ConcaveQuadratic {
  RMat P;
  RVec q;
  double c = 0.0;
  double eval(const RVec& x) const { return 0.5 * x.dot(P * x) + q.dot(x) + c; }
};

struct MaxMinResult {
  RVec x;
  double value = 0.0;  // attained min over pieces
};

/// Maximizes min_k p_k(x) via an epigraph variable and solve_qcqp.
MaxMinResult solve_maxmin_concave_quadratics(const std::vector<ConcaveQuadratic>& pieces,
                                             const RVec& start, double tol);

}  // namespace ris
