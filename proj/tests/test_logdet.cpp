#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "risopt/logdet.hpp"

using namespace ris;

namespace {

// min sum(p) s.t. r <= log2(1 + p) in one scalar power variable.
LogDetProblem scalar_rate(double r) {
  LogDetProblem prob;
  prob.dim = 1;
  prob.objective.P = RMat::Zero(1, 1);
  prob.objective.q = RVec::Ones(1);
  LogDetTerm t;
  t.lhs = RVec::Zero(1);
  t.lhs0 = r;
  t.base = {CMat::Identity(1, 1)};
  t.var_idx = {0};
  t.coef = {{CMat::Identity(1, 1)}};
  prob.logdets.push_back(std::move(t));
  RVec a = RVec::Ones(1);
  prob.lin_ge.emplace_back(a, 0.0);
  return prob;
}

}  // namespace

TEST_CASE("single-user rate inversion: r=1 -> w^2 = 1") {
  LogDetResult r = solve_logdet_program(scalar_rate(1.0), 1e-9);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("single-user rate inversion: r=2 -> w^2 = 3") {
  LogDetResult r = solve_logdet_program(scalar_rate(2.0), 1e-9);
  CHECK(r.x[0] == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("two-user scalar MAC with symmetric rates") {
  // min p1+p2 s.t. 0.5 <= log2(1+p1), 0.5 <= log2(1+p2), 1 <= log2(1+p1+p2).
  LogDetProblem prob;
  prob.dim = 2;
  prob.objective.P = RMat::Zero(2, 2);
  prob.objective.q = RVec::Ones(2);
  auto single = [&](int k) {
    LogDetTerm t;
    t.lhs = RVec::Zero(2);
    t.lhs0 = 0.5;
    t.base = {CMat::Identity(1, 1)};
    t.var_idx = {k};
    t.coef = {{CMat::Identity(1, 1)}};
    return t;
  };
  prob.logdets.push_back(single(0));
  prob.logdets.push_back(single(1));
  LogDetTerm sum;
  sum.lhs = RVec::Zero(2);
  sum.lhs0 = 1.0;
  sum.base = {CMat::Identity(1, 1)};
  sum.var_idx = {0, 1};
  sum.coef = {{CMat::Identity(1, 1)}, {CMat::Identity(1, 1)}};
  prob.logdets.push_back(std::move(sum));
  for (int k = 0; k < 2; ++k) {
    RVec a = RVec::Zero(2);
    a[k] = 1.0;
    prob.lin_ge.emplace_back(a, 0.0);
  }
  LogDetResult r = solve_logdet_program(prob, 1e-9);

  // 2-D grid-search oracle over (p1, p2); the optimal total power is unique
  // even though the split along the sum-constraint face is not.
  double best = 1e18;
  for (double p1 = 0.0; p1 <= 1.2; p1 += 1e-3) {
    for (double p2 = 0.0; p2 <= 1.2; p2 += 1e-3) {
      if (std::log2(1 + p1) >= 0.5 && std::log2(1 + p2) >= 0.5 &&
          std::log2(1 + p1 + p2) >= 1.0 && p1 + p2 < best) {
        best = p1 + p2;
      }
    }
  }
  CHECK(r.x[0] + r.x[1] == doctest::Approx(best).epsilon(5e-3));
  CHECK(r.x[0] == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(r.x[1] == doctest::Approx(0.5).epsilon(1e-4));
  // sum constraint active
  CHECK(std::log2(1.0 + r.x[0] + r.x[1]) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("logdet slack gradient matches central finite differences") {
  Rng rng(11);
  const int dim = 4;
  const int M = 3;
  LogDetTerm t;
  t.lhs = RVec::NullaryExpr(dim, [&](Eigen::Index) { return rng.gaussian(); });
  t.lhs0 = 0.3;
  for (int b = 0; b < 2; ++b) t.base.push_back(5.0 * CMat::Identity(M, M));
  for (int v = 0; v < dim; ++v) {
    t.var_idx.push_back(v);
    std::vector<CMat> blocks;
    for (int b = 0; b < 2; ++b) {
      CMat A(M, M);
      for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) A(i, j) = cplx(rng.gaussian(), rng.gaussian());
      blocks.push_back(CMat(0.5 * (A + A.adjoint())));
    }
    t.coef.push_back(std::move(blocks));
  }
  int checked = 0;
  for (int trial = 0; trial < 300 && checked < 100; ++trial) {
    RVec x = RVec::NullaryExpr(dim, [&](Eigen::Index) { return 0.3 * rng.gaussian(); });
    RVec g;
    try {
      g = logdet_slack_gradient(t, x, dim);
    } catch (const SingularMatrixError&) {
      continue;  // not an interior point
    }
    const double h = 1e-6;
    bool ok = true;
    RVec fd(dim);
    try {
      for (int v = 0; v < dim; ++v) {
        RVec xp = x, xm = x;
        xp[v] += h;
        xm[v] -= h;
        fd[v] = (logdet_slack(t, xp) - logdet_slack(t, xm)) / (2 * h);
      }
    } catch (const SingularMatrixError&) {
      ok = false;
    }
    if (!ok) continue;
    ++checked;
    for (int v = 0; v < dim; ++v) {
      const double scale = std::max(1.0, std::abs(g[v]));
      CHECK(std::abs(g[v] - fd[v]) / scale < 1e-6);
    }
  }
  CHECK(checked == 100);
}

TEST_CASE("infeasible rate floors are certified") {
  // 1 <= log2(1 + p) with p <= 0.1 forced via the quadratic constraint.
  LogDetProblem prob = scalar_rate(1.0);
  Quadratic cap;
  cap.P = RMat::Zero(1, 1);
  cap.q = RVec::Ones(1);
  cap.c = -0.1;  // p <= 0.1
  prob.quad_le.push_back(cap);
  CHECK_THROWS_AS(solve_logdet_program(prob, 1e-8), InfeasibleError);
}
