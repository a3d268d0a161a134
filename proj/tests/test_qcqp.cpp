#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "risopt/linalg.hpp"
#include "risopt/qcqp.hpp"

using namespace ris;

namespace {

QcqpProblem scalar_problem() {
  // min x^2 s.t. x >= 2
  QcqpProblem p;
  p.dim = 1;
  p.objective.P = RMat::Constant(1, 1, 2.0);
  p.objective.q = RVec::Zero(1);
  p.add_constraint(RMat::Zero(1, 1), RVec::Constant(1, 1.0), -2.0, Sense::GE);
  return p;
}

}  // namespace

TEST_CASE("active single constraint: min x^2 s.t. x >= 2") {
  QcqpResult r = solve_qcqp(scalar_problem(), 1e-9);
  CHECK(r.x[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(r.objective == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(r.kkt_residual <= 1e-9);
}

TEST_CASE("complex scalar FP-style constraint") {
  // min |w|^2 s.t. 2 Re{conj(y) g w} - |y|^2 b >= c, y=g=b=c=1  ->  w = 1.
  QcqpProblem p;
  p.dim = 2;
  p.objective.P = 2.0 * RMat::Identity(2, 2);
  p.objective.q = RVec::Zero(2);
  RVec q(2);
  q << 2.0, 0.0;  // 2 Re{w}
  p.add_constraint(RMat::Zero(2, 2), q, -1.0 - 1.0, Sense::GE);
  QcqpResult r = solve_qcqp(p, 1e-9);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(r.x[1]) < 1e-6);
  CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-6));

  // 1-D grid-search oracle along the real axis (imaginary part only adds power).
  double best = 1e9, best_x = 0;
  for (double x = 0.0; x <= 3.0; x += 1e-4) {
    if (2.0 * x - 1.0 >= 1.0 && x * x < best) {
      best = x * x;
      best_x = x;
    }
  }
  CHECK(r.objective == doctest::Approx(best).epsilon(1e-3));
  CHECK(r.x[0] == doctest::Approx(best_x).epsilon(1e-3));
}

TEST_CASE("halfspace projection oracle") {
  // min ||w||^2 s.t. Re{a^H w} >= 1, a = (1,1)/sqrt(2) -> w = a, objective 1.
  CVec a(2);
  a << cplx(1.0, 0.0) / std::sqrt(2.0), cplx(1.0, 0.0) / std::sqrt(2.0);
  QcqpProblem p;
  p.dim = 4;
  p.objective.P = 2.0 * RMat::Identity(4, 4);
  p.objective.q = RVec::Zero(4);
  p.add_constraint(RMat::Zero(4, 4), re_expand_linear(a), -1.0, Sense::GE);
  QcqpResult r = solve_qcqp(p, 1e-10);
  const CVec w = re_collapse(r.x);
  const CVec w_proj = a / a.squaredNorm();
  CHECK((w - w_proj).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("infeasible problem certified by phase-I") {
  QcqpProblem p;
  p.dim = 1;
  p.objective.P = RMat::Constant(1, 1, 2.0);
  p.objective.q = RVec::Zero(1);
  p.add_constraint(RMat::Zero(1, 1), RVec::Constant(1, 1.0), -1.0, Sense::GE);   // x >= 1
  p.add_constraint(RMat::Zero(1, 1), RVec::Constant(1, 1.0), 1.0, Sense::LE);    // x <= -1
  CHECK_THROWS_AS(solve_qcqp(p, 1e-8), InfeasibleError);
}

TEST_CASE("PSD validation rejects indefinite constraint") {
  QcqpProblem p;
  p.dim = 1;
  p.objective.P = RMat::Constant(1, 1, 2.0);
  p.objective.q = RVec::Zero(1);
  p.add_constraint(RMat::Constant(1, 1, -2.0), RVec::Zero(1), 1.0, Sense::LE);
  CHECK_THROWS(solve_qcqp(p, 1e-8));
}

TEST_CASE("objective trace is non-increasing across outer iterations") {
  Rng rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 4;
    RMat A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = rng.gaussian();
    QcqpProblem p;
    p.dim = n;
    p.objective.P = A * A.transpose() + 0.1 * RMat::Identity(n, n);
    p.objective.q = RVec::NullaryExpr(n, [&](Eigen::Index) { return rng.gaussian(); });
    // ball constraint ||x||^2 <= 4 and a halfspace
    p.add_constraint(2.0 * RMat::Identity(n, n), RVec::Zero(n), -4.0, Sense::LE);
    RVec a = RVec::NullaryExpr(n, [&](Eigen::Index) { return rng.gaussian(); });
    p.add_constraint(RMat::Zero(n, n), a, 0.5, Sense::LE);
    QcqpResult r = solve_qcqp(p, 1e-9);
    for (size_t i = 1; i < r.objective_trace.size(); ++i)
      CHECK(r.objective_trace[i] <= r.objective_trace[i - 1] + 1e-9);
    CHECK(r.kkt_residual <= 1e-9);
  }
}

TEST_CASE("local-optimality probe") {
  // Perturbing each coordinate by +-1e-4 and repairing feasibility never
  // improves the objective by more than 1e-6.
  Rng rng(7);
  const int n = 6;
  RMat A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = rng.gaussian();
  QcqpProblem p;
  p.dim = n;
  p.objective.P = A * A.transpose() + RMat::Identity(n, n);
  p.objective.q = RVec::NullaryExpr(n, [&](Eigen::Index) { return rng.gaussian(); });
  p.add_constraint(2.0 * RMat::Identity(n, n), RVec::Zero(n), -1.0, Sense::LE);
  RVec a = RVec::NullaryExpr(n, [&](Eigen::Index) { return rng.gaussian(); });
  p.add_constraint(RMat::Zero(n, n), a, 0.3, Sense::LE);
  QcqpResult r = solve_qcqp(p, 1e-10);

  auto feasible = [&](const RVec& x) {
    for (const auto& c : p.cons)
      if (c.eval(x) > 0.0) return false;
    return true;
  };
  for (int i = 0; i < n; ++i) {
    for (double s : {-1e-4, 1e-4}) {
      RVec x = r.x;
      x[i] += s;
      double lo = 0.0, hi = 1.0;  // blend back toward the feasible solution
      if (!feasible(x)) {
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (feasible(r.x + mid * (x - r.x)))
            lo = mid;
          else
            hi = mid;
        }
        x = r.x + lo * (x - r.x);
      }
      CHECK(p.objective.eval(x) >= r.objective - 1e-6);
    }
  }
}

TEST_CASE("maxmin: single concave piece") {
  // -(x-1)^2 -> maximizer x = 1
  ConcaveQuadratic piece{RMat::Constant(1, 1, -2.0), RVec::Constant(1, 2.0), -1.0};
  MaxMinResult r = solve_maxmin_concave_quadratics({piece}, RVec::Zero(1), 1e-9);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(r.value == doctest::Approx(0.0).epsilon(1e-5));
}

TEST_CASE("maxmin: symmetric pieces meet in the middle") {
  // -(x-1)^2 and -(x+1)^2 -> x = 0, value -1; verified by 1-D grid oracle.
  ConcaveQuadratic p1{RMat::Constant(1, 1, -2.0), RVec::Constant(1, 2.0), -1.0};
  ConcaveQuadratic p2{RMat::Constant(1, 1, -2.0), RVec::Constant(1, -2.0), -1.0};
  MaxMinResult r = solve_maxmin_concave_quadratics({p1, p2}, RVec::Constant(1, 0.7), 1e-9);
  double best = -1e18, best_x = 0;
  for (double x = -2.0; x <= 2.0; x += 1e-4) {
    const double v = std::min(-(x - 1) * (x - 1), -(x + 1) * (x + 1));
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  CHECK(std::abs(best_x) < 1e-3);
  CHECK(r.x[0] == doctest::Approx(best_x).epsilon(2e-3));
  CHECK(r.value == doctest::Approx(-1.0).epsilon(1e-4));
}

TEST_CASE("maxmin: dominated parallel piece") {
  // -x^2 + 1 dominates -x^2; maximizer x = 0 with value 0.
  ConcaveQuadratic p1{RMat::Constant(1, 1, -2.0), RVec::Zero(1), 1.0};
  ConcaveQuadratic p2{RMat::Constant(1, 1, -2.0), RVec::Zero(1), 0.0};
  MaxMinResult r = solve_maxmin_concave_quadratics({p1, p2}, RVec::Constant(1, 0.5), 1e-9);
  CHECK(std::abs(r.x[0]) < 1e-4);
  CHECK(r.value == doctest::Approx(0.0).epsilon(1e-4));
}
