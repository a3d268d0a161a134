#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "risopt/channel.hpp"
#include "risopt/dft.hpp"

using namespace ris;

namespace {

ChannelParams small_params() {
  ChannelParams p;
  p.K = 2;
  p.M = 2;
  p.N = 3;
  p.sigma2 = 1e-13;
  return p;
}

bool equal_channels(const ChannelSet& a, const ChannelSet& b) {
  for (int k = 0; k < a.K; ++k) {
    if ((a.h_ub[k] - b.h_ub[k]).cwiseAbs().maxCoeff() != 0.0) return false;
    for (int n = 0; n < a.N; ++n)
      if ((a.h_ur[k][n] - b.h_ur[k][n]).cwiseAbs().maxCoeff() != 0.0) return false;
  }
  for (int n = 0; n < a.N; ++n)
    if ((a.h_rb[n] - b.h_rb[n]).cwiseAbs().maxCoeff() != 0.0) return false;
  return true;
}

}  // namespace

TEST_CASE("same seed gives bit-identical channels") {
  ChannelSet a = generate_channels(Geometry{}, small_params(), 123);
  ChannelSet b = generate_channels(Geometry{}, small_params(), 123);
  CHECK(equal_channels(a, b));
  ChannelSet c = generate_channels(Geometry{}, small_params(), 124);
  CHECK(!equal_channels(a, c));
}

TEST_CASE("direct-link pathloss moment matches 1e-3 d^-4") {
  ChannelParams p = small_params();
  p.K = 1;
  Geometry g;
  // Pin the user position by a degenerate rectangle so d is known.
  g.user_rect_lo = Eigen::Vector3d(80.0, 20.0, 1.5);
  g.user_rect_hi = g.user_rect_lo;
  const double d = (g.user_rect_lo - g.bs).norm();
  const double expected = 1e-3 * std::pow(d, -4.0);
  double acc = 0.0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    ChannelSet ch = generate_channels(g, p, 1000 + i);
    acc += ch.h_ub[0].squaredNorm() / p.M;
  }
  acc /= draws;
  CHECK(acc == doctest::Approx(expected).epsilon(0.03));
}

TEST_CASE("Rician factor estimate is 10 within 5%") {
  ChannelParams p = small_params();
  p.K = 1;
  p.N = 1;
  Geometry g;
  g.user_rect_lo = Eigen::Vector3d(75.0, 30.0, 1.5);
  g.user_rect_hi = g.user_rect_lo;
  const int draws = 10000;
  const double d = (g.user_rect_lo - g.ris).norm();
  const double pl = 1e-3 * std::pow(d, -2.0);
  const double los2 = pl * 10.0 / 11.0;  // LOS power (tap 0, unit-modulus steering)
  double total2 = 0.0;
  for (int i = 0; i < draws; ++i) {
    ChannelSet ch = generate_channels(g, p, 5000 + i);
    total2 += ch.h_ur[0][0].squaredNorm();
  }
  const double nlos2 = total2 / draws - los2;  // E||h||^2 = ||LOS||^2 + E||NLOS||^2
  CHECK(los2 / nlos2 == doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("flat single-tap channel gives constant response") {
  CMat taps(1, 2);
  taps << cplx(0.3, -0.4), cplx(1.0, 2.0);
  CMat r = freq_response(taps, 8);
  for (int j = 0; j < 8; ++j) {
    CHECK(std::abs(r(j, 0) - taps(0, 0)) < 1e-15);
    CHECK(std::abs(r(j, 1) - taps(0, 1)) < 1e-15);
  }
}

TEST_CASE("two-point DFT of taps (1,1) is (2,0)") {
  CMat taps(2, 1);
  taps << cplx(1, 0), cplx(1, 0);
  CMat r = freq_response(taps, 2);
  CHECK(std::abs(r(0, 0) - cplx(2, 0)) < 1e-15);
  CHECK(std::abs(r(1, 0) - cplx(0, 0)) < 1e-15);
}

TEST_CASE("dense circulant oracle: F H F^H diagonal matches freq_response") {
  Rng rng(99);
  const int J = 8, L = 3;
  CMat taps(L, 1);
  for (int l = 0; l < L; ++l) taps(l, 0) = rng.cgaussian();
  // Explicit circulant matrix.
  CMat H = CMat::Zero(J, J);
  for (int c = 0; c < J; ++c)
    for (int l = 0; l < L; ++l) H((c + l) % J, c) = taps(l, 0);
  const CMat F = dft_matrix(J);
  const CMat G = F * H * F.adjoint();
  const CMat r = freq_response(taps, J);
  for (int j = 0; j < J; ++j) {
    CHECK(std::abs(G(j, j) - r(j, 0)) < 1e-12);
    for (int j2 = 0; j2 < J; ++j2)
      if (j2 != j) CHECK(std::abs(G(j, j2)) < 1e-12);  // block-diagonal structure
  }
}

TEST_CASE("Parseval energy bookkeeping") {
  Rng rng(7);
  const int J = 16, L = 5;
  CMat taps(L, 2);
  for (int l = 0; l < L; ++l)
    for (int m = 0; m < 2; ++m) taps(l, m) = rng.cgaussian();
  CMat r = freq_response(taps, J);
  const double freq_avg = r.squaredNorm() / J;
  const double time_energy = taps.squaredNorm();
  CHECK(std::abs(freq_avg - time_energy) <= 1e-10 * time_energy);
}

TEST_CASE("no RIS: effective channel equals the direct response") {
  ChannelParams p = small_params();
  p.N = 0;
  ChannelSet ch = generate_channels(Geometry{}, p, 5);
  EffectiveChannel eff = assemble_effective(ch, 16);
  CVec theta(0);
  for (int k = 0; k < p.K; ++k)
    for (int j = 0; j < 16; ++j)
      CHECK((eff.g(k, j, theta) - eff.direct[k].row(j).transpose()).norm() == 0.0);
}

TEST_CASE("single-element flat composition g_ub + g_rb g_ur") {
  ChannelSet ch;
  ch.K = 1;
  ch.M = 1;
  ch.N = 1;
  ch.L_ub = 1;
  ch.L_ur = 1;
  ch.L_rb = 1;
  ch.L_cp = 4;
  ch.sigma2 = 1.0;
  const cplx g_ub(0.5, 0.1), g_ur(-0.2, 0.4), g_rb(1.5, -0.3);
  ch.h_ub = {CMat::Constant(1, 1, g_ub)};
  ch.h_ur = {{CVec::Constant(1, g_ur)}};
  ch.h_rb = {CMat::Constant(1, 1, g_rb)};
  EffectiveChannel eff = assemble_effective(ch, 4);
  CVec theta = CVec::Constant(1, cplx(1.0, 0.0));
  for (int j = 0; j < 4; ++j)
    CHECK(std::abs(eff.g(0, j, theta)[0] - (g_ub + g_rb * g_ur)) < 1e-14);
}

TEST_CASE("cascade linearity in theta") {
  ChannelParams p = small_params();
  ChannelSet ch = generate_channels(Geometry{}, p, 17);
  EffectiveChannel eff = assemble_effective(ch, 8);
  Rng rng(31);
  CVec t1(p.N), t2(p.N);
  for (int n = 0; n < p.N; ++n) {
    t1[n] = std::polar(1.0, rng.uniform(0.0, 2 * kPi));
    t2[n] = std::polar(1.0, rng.uniform(0.0, 2 * kPi));
  }
  for (int k = 0; k < p.K; ++k) {
    for (int j = 0; j < 8; ++j) {
      CVec diff = eff.g(k, j, t1) - eff.g(k, j, t2);
      CVec expected = CVec::Zero(p.M);
      for (int n = 0; n < p.N; ++n)
        expected += (t1[n] - t2[n]) * eff.cascade[k][n].row(j).transpose();
      CHECK((diff - expected).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  // Superposition: g(t1) + g(t2) = g(t1 + t2) + direct.
  for (int k = 0; k < p.K; ++k) {
    CVec sum = eff.g(k, 3, t1) + eff.g(k, 3, t2);
    CVec combined = eff.g(k, 3, CVec(t1 + t2)) + eff.direct[k].row(3).transpose();
    CHECK((sum - combined).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("downsampling takes every (J/J')-th subcarrier") {
  ChannelParams p = small_params();
  ChannelSet ch = generate_channels(Geometry{}, p, 21);
  EffectiveChannel eff = assemble_effective(ch, 16);
  EffectiveChannel sub = downsample(eff, 4);
  CHECK(sub.J == 4);
  for (int k = 0; k < p.K; ++k)
    for (int j = 0; j < 4; ++j)
      CHECK((sub.direct[k].row(j) - eff.direct[k].row(4 * j)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(downsample(eff, 5), NonDivisorError);
}

TEST_CASE("cascade tensor equals product of link responses (convolution law)") {
  // Cascade taps convolve; frequency responses multiply.
  Rng rng(3);
  const int J = 16;
  CVec ur(2);
  ur << rng.cgaussian(), rng.cgaussian();
  CMat rb(3, 2);
  for (int l = 0; l < 3; ++l)
    for (int m = 0; m < 2; ++m) rb(l, m) = rng.cgaussian();
  CMat conv = CMat::Zero(4, 2);
  for (int l1 = 0; l1 < 3; ++l1)
    for (int l2 = 0; l2 < 2; ++l2) conv.row(l1 + l2) += rb.row(l1) * ur[l2];
  CMat lhs = freq_response(conv, J);
  CMat f_rb = freq_response(rb, J);
  CMat f_ur = freq_response(CMat(ur), J);
  for (int j = 0; j < J; ++j)
    for (int m = 0; m < 2; ++m)
      CHECK(std::abs(lhs(j, m) - f_rb(j, m) * f_ur(j, 0)) < 1e-12);
}

TEST_CASE("channel dump round trip") {
  ChannelParams p = small_params();
  ChannelSet ch = generate_channels(Geometry{}, p, 77);
  const std::string path = "/tmp/risopt_chan_test.txt";
  save_channel(ch, path);
  ChannelSet back = load_channel(path);
  CHECK(back.K == ch.K);
  CHECK(back.sigma2 == doctest::Approx(ch.sigma2));
  for (int k = 0; k < ch.K; ++k)
    CHECK((back.h_ub[k] - ch.h_ub[k]).cwiseAbs().maxCoeff() < 1e-15);
  for (int n = 0; n < ch.N; ++n)
    CHECK((back.h_rb[n] - ch.h_rb[n]).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("CP length invariant is enforced") {
  ChannelParams p = small_params();
  p.L_cp = 3;  // max(L_ub, L_ur + L_rb) = max(6, 7) = 7 > 3
  CHECK_THROWS(generate_channels(Geometry{}, p, 1));
}
