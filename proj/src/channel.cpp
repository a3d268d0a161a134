#include "risopt/channel.hpp"

#include <fstream>
#include <iomanip>

namespace ris {

namespace {

double pathloss(double ref, double d, double exponent) {
  return ref * std::pow(d, -exponent);
}

/// ULA on the x-axis, half-wavelength spacing: phase pi * m * (dir . x).
CVec ula_steering(int M, const Eigen::Vector3d& dir) {
  CVec a(M);
  for (int m = 0; m < M; ++m) a[m] = std::polar(1.0, kPi * m * dir.x());
  return a;
}

/// UPA parallel to the x-z plane, half-wavelength spacing.
CVec upa_steering(int N, const Eigen::Vector3d& dir) {
  auto [nx, nz] = ris_panel_dims(N);
  CVec a(N);
  for (int n = 0; n < N; ++n) {
    const int ix = n % nx;
    const int iz = n / nx;
    a[n] = std::polar(1.0, kPi * (ix * dir.x() + iz * dir.z()));
  }
  return a;
}

}  // namespace

std::pair<int, int> ris_panel_dims(int N) {
  int best = 1;
  for (int d = 1; d * d <= N; ++d)
    if (N % d == 0) best = d;
  return {best, N / best};
}

ChannelSet generate_channels(const Geometry& geometry, const ChannelParams& p,
                             std::uint64_t seed) {
  if (p.K <= 0 || p.M <= 0 || p.N < 0 || p.L_ub <= 0 || p.L_ur <= 0 || p.L_rb <= 0)
    throw DimensionError("generate_channels: non-positive dimension");
  if (p.L_cp < std::max(p.L_ub, p.L_ur + p.L_rb))
    throw Error("generate_channels: L_cp too short to eliminate inter-symbol interference");

  Rng rng(seed);
  ChannelSet ch;
  ch.K = p.K;
  ch.M = p.M;
  ch.N = p.N;
  ch.L_ub = p.L_ub;
  ch.L_ur = p.L_ur;
  ch.L_rb = p.L_rb;
  ch.L_cp = p.L_cp;
  ch.sigma2 = p.sigma2;

  ch.user_pos.resize(p.K);
  for (int k = 0; k < p.K; ++k) {
    for (int c = 0; c < 3; ++c)
      ch.user_pos[k][c] =
          rng.uniform(geometry.user_rect_lo[c], geometry.user_rect_hi[c]);
  }

  const double kf = p.rician;
  const double los_frac = kf / (1.0 + kf);
  const double nlos_frac = 1.0 / (1.0 + kf);

  // User -> BS: Rayleigh, pathloss split uniformly across taps.
  ch.h_ub.resize(p.K);
  for (int k = 0; k < p.K; ++k) {
    const double d = (ch.user_pos[k] - geometry.bs).norm();
    if (d <= 0.0) throw InvalidGeometryError("user coincides with BS");
    const double pl = pathloss(p.pl_ref, d, p.exp_ub);
    const double tap_std = std::sqrt(pl / p.L_ub);
    CMat h(p.L_ub, p.M);
    for (int l = 0; l < p.L_ub; ++l)
      for (int m = 0; m < p.M; ++m) h(l, m) = tap_std * rng.cgaussian();
    ch.h_ub[k] = std::move(h);
  }

  // User -> RIS: Rician with LOS in the first tap along the UPA steering.
  ch.h_ur.assign(p.K, std::vector<CVec>(p.N));
  for (int k = 0; k < p.K; ++k) {
    const double d = (geometry.ris - ch.user_pos[k]).norm();
    if (d <= 0.0) throw InvalidGeometryError("user coincides with RIS");
    const double pl = pathloss(p.pl_ref, d, p.exp_ur);
    const Eigen::Vector3d dir = (ch.user_pos[k] - geometry.ris).normalized();
    const CVec steer = upa_steering(p.N, dir);
    const double los_amp = std::sqrt(pl * los_frac);
    const double nlos_std = std::sqrt(pl * nlos_frac / p.L_ur);
    for (int n = 0; n < p.N; ++n) {
      CVec h(p.L_ur);
      for (int l = 0; l < p.L_ur; ++l) h[l] = nlos_std * rng.cgaussian();
      h[0] += los_amp * steer[n];
      ch.h_ur[k][n] = std::move(h);
    }
  }

  // RIS -> BS: Rician; LOS is the BS array response times the RIS departure phase.
  ch.h_rb.resize(p.N);
  {
    const double d = (geometry.bs - geometry.ris).norm();
    if (p.N > 0 && d <= 0.0) throw InvalidGeometryError("RIS coincides with BS");
    const double pl = p.N > 0 ? pathloss(p.pl_ref, d, p.exp_rb) : 0.0;
    const Eigen::Vector3d arr = (geometry.ris - geometry.bs).normalized();
    const Eigen::Vector3d dep = (geometry.bs - geometry.ris).normalized();
    const CVec a_bs = ula_steering(p.M, arr);
    const CVec a_ris = upa_steering(std::max(p.N, 1), dep);
    const double los_amp = std::sqrt(pl * los_frac);
    const double nlos_std = std::sqrt(pl * nlos_frac / p.L_rb);
    for (int n = 0; n < p.N; ++n) {
      CMat h(p.L_rb, p.M);
      for (int l = 0; l < p.L_rb; ++l)
        for (int m = 0; m < p.M; ++m) h(l, m) = nlos_std * rng.cgaussian();
      h.row(0) += (los_amp * a_ris[n]) * a_bs.transpose();
      ch.h_rb[n] = std::move(h);
    }
  }
  return ch;
}

EffectiveChannel assemble_effective(const ChannelSet& ch, int J) {
  if (J < std::max(ch.L_ub, ch.L_ur + ch.L_rb - 1))
    throw DimensionError("assemble_effective: J shorter than impulse responses");
  EffectiveChannel eff;
  eff.K = ch.K;
  eff.M = ch.M;
  eff.N = ch.N;
  eff.J = J;
  eff.L_cp = ch.L_cp;
  eff.sigma2 = ch.sigma2;
  eff.direct.resize(ch.K);
  eff.cascade.assign(ch.K, std::vector<CMat>(ch.N));

  std::vector<CMat> f_rb(ch.N);  // [n]: J x M
  for (int n = 0; n < ch.N; ++n) f_rb[n] = freq_response(ch.h_rb[n], J);

  for (int k = 0; k < ch.K; ++k) {
    eff.direct[k] = freq_response(ch.h_ub[k], J);
    for (int n = 0; n < ch.N; ++n) {
      CMat f_ur = freq_response(CMat(ch.h_ur[k][n]), J);  // J x 1
      eff.cascade[k][n] = f_rb[n].array().colwise() * f_ur.col(0).array();
    }
  }
  return eff;
}

EffectiveChannel downsample(const EffectiveChannel& full, int J_prime) {
  if (J_prime <= 0 || full.J % J_prime != 0)
    throw NonDivisorError("downsample: J_prime must divide J");
  const int step = full.J / J_prime;
  EffectiveChannel out;
  out.K = full.K;
  out.M = full.M;
  out.N = full.N;
  out.J = J_prime;
  out.L_cp = full.L_cp;
  out.sigma2 = full.sigma2;
  out.direct.resize(full.K);
  out.cascade.assign(full.K, std::vector<CMat>(full.N));
  for (int k = 0; k < full.K; ++k) {
    CMat d(J_prime, full.M);
    for (int j = 0; j < J_prime; ++j) d.row(j) = full.direct[k].row(j * step);
    out.direct[k] = std::move(d);
    for (int n = 0; n < full.N; ++n) {
      CMat c(J_prime, full.M);
      for (int j = 0; j < J_prime; ++j) c.row(j) = full.cascade[k][n].row(j * step);
      out.cascade[k][n] = std::move(c);
    }
  }
  return out;
}

ComposedChannel compose(const EffectiveChannel& eff, const CVec& theta) {
  if (theta.size() != eff.N) throw DimensionError("compose: theta size != N");
  ComposedChannel out;
  out.K = eff.K;
  out.M = eff.M;
  out.J = eff.J;
  out.sigma2 = eff.sigma2;
  out.G.resize(eff.K);
  for (int k = 0; k < eff.K; ++k) {
    CMat G = eff.direct[k];
    for (int n = 0; n < eff.N; ++n) G += theta[n] * eff.cascade[k][n];
    out.G[k] = std::move(G);
  }
  return out;
}

namespace {

void write_block(std::ostream& os, const std::string& link, int k, int n, const CMat& taps) {
  for (Eigen::Index l = 0; l < taps.rows(); ++l) {
    os << link << ' ' << k << ' ' << n << ' ' << l;
    for (Eigen::Index m = 0; m < taps.cols(); ++m)
      os << ' ' << taps(l, m).real() << ' ' << taps(l, m).imag();
    os << '\n';
  }
}

}  // namespace

void save_channel(const ChannelSet& ch, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("save_channel: cannot open " + path);
  os << std::setprecision(17);
  os << "# risopt channel dump v1\n";
  os << "dims " << ch.K << ' ' << ch.M << ' ' << ch.N << ' ' << ch.L_ub << ' ' << ch.L_ur
     << ' ' << ch.L_rb << ' ' << ch.L_cp << ' ' << ch.sigma2 << '\n';
  for (int k = 0; k < ch.K; ++k) write_block(os, "ub", k, -1, ch.h_ub[k]);
  for (int k = 0; k < ch.K; ++k)
    for (int n = 0; n < ch.N; ++n) write_block(os, "ur", k, n, CMat(ch.h_ur[k][n]));
  for (int n = 0; n < ch.N; ++n) write_block(os, "rb", -1, n, ch.h_rb[n]);
}

ChannelSet load_channel(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("load_channel: cannot open " + path);
  std::string line;
  std::getline(is, line);  // header comment
  std::string tag;
  ChannelSet ch;
  is >> tag >> ch.K >> ch.M >> ch.N >> ch.L_ub >> ch.L_ur >> ch.L_rb >> ch.L_cp >> ch.sigma2;
  if (tag != "dims") throw Error("load_channel: bad header");
  ch.h_ub.assign(ch.K, CMat::Zero(ch.L_ub, ch.M));
  ch.h_ur.assign(ch.K, std::vector<CVec>(ch.N, CVec::Zero(ch.L_ur)));
  ch.h_rb.assign(ch.N, CMat::Zero(ch.L_rb, ch.M));
  std::string link;
  int k, n, l;
  while (is >> link >> k >> n >> l) {
    if (link == "ub") {
      for (int m = 0; m < ch.M; ++m) {
        double re, im;
        is >> re >> im;
        ch.h_ub[k](l, m) = cplx(re, im);
      }
    } else if (link == "ur") {
      double re, im;
      is >> re >> im;
      ch.h_ur[k][n][l] = cplx(re, im);
    } else if (link == "rb") {
      for (int m = 0; m < ch.M; ++m) {
        double re, im;
        is >> re >> im;
        ch.h_rb[n](l, m) = cplx(re, im);
      }
    } else {
      throw Error("load_channel: unknown link tag " + link);
    }
  }
  return ch;
}

}  // namespace ris
