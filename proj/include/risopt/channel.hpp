#pragma once

#include <string>
#include <vector>

#include "risopt/common.hpp"
#include "risopt/dft.hpp"

namespace ris {

/// Deployment geometry: BS ULA on the x-axis at (0,0,10), RIS UPA parallel to
/// the x-z plane at (50,50,10), users uniform in the rectangle spanned by
/// (60,0,1.5) and (110,50,1.5). All spacings are half wavelength.
struct Geometry {
  Eigen::Vector3d bs{0.0, 0.0, 10.0};
  Eigen::Vector3d ris{50.0, 50.0, 10.0};
  Eigen::Vector3d user_rect_lo{60.0, 0.0, 1.5};
  Eigen::Vector3d user_rect_hi{110.0, 50.0, 1.5};
};

struct ChannelParams {
  int K = 4;
  int M = 4;
  int N = 16;
  int L_ub = 6;
  int L_ur = 2;
  int L_rb = 5;
  int L_cp = 16;
  double rician = 10.0;      // user-RIS and RIS-BS links
  double pl_ref = 1e-3;      // pathloss at 1 m
  double exp_ub = 4.0;
  double exp_ur = 2.0;
  double exp_rb = 2.5;
  double sigma2 = dbm_to_watt(-105.0);
};

/// Time-domain tap responses for the user->BS, user->RIS and RIS->BS links.
struct ChannelSet {
  int K = 0, M = 0, N = 0;
  int L_ub = 0, L_ur = 0, L_rb = 0, L_cp = 0;
  double sigma2 = 0.0;
  std::vector<CMat> h_ub;               // [k]: L_ub x M
  std::vector<std::vector<CVec>> h_ur;  // [k][n]: L_ur
  std::vector<CMat> h_rb;               // [n]: L_rb x M
  std::vector<Eigen::Vector3d> user_pos;
};

/// Per-subcarrier frequency-domain channel. The composed channel is affine in
/// theta: G_k(theta)(j) = direct[k].row(j) + sum_n theta_n * cascade[k][n].row(j).
/// Cross-subcarrier entries are zero by construction (block-diagonal G).
struct EffectiveChannel {
  int K = 0, M = 0, N = 0, J = 0;
  int L_cp = 0;
  double sigma2 = 0.0;
  std::vector<CMat> direct;                // [k]: J x M
  std::vector<std::vector<CMat>> cascade;  // [k][n]: J x M

  /// G_k(theta) at subcarrier j.
  CVec g(int k, int j, const CVec& theta) const {
    CVec out = direct[k].row(j).transpose();
    for (int n = 0; n < N; ++n) out += theta[n] * cascade[k][n].row(j).transpose();
    return out;
  }
};

/// G_k(theta) materialized for a fixed theta.
struct ComposedChannel {
  int K = 0, M = 0, J = 0;
  double sigma2 = 0.0;
  std::vector<CMat> G;  // [k]: J x M
};

ChannelSet generate_channels(const Geometry& geometry, const ChannelParams& params,
                             std::uint64_t seed);

/// Builds the per-subcarrier responses and the RIS cascade tensor at J
/// subcarriers (uses freq_response; circular convolution of the two RIS link
/// responses becomes a per-subcarrier product).
EffectiveChannel assemble_effective(const ChannelSet& channels, int J);

/// Keeps every (J/J_prime)-th subcarrier. Throws NonDivisorError.
EffectiveChannel downsample(const EffectiveChannel& full, int J_prime);

ComposedChannel compose(const EffectiveChannel& eff, const CVec& theta);

/// RIS panel layout: largest divisor of N that is <= sqrt(N), times N over it.
std::pair<int, int> ris_panel_dims(int N);

/// Plain-text channel dump, one record per (link, k, n, tap) with complex
/// entries; used to replay fixed channels across optimizers.
void save_channel(const ChannelSet& ch, const std::string& path);
ChannelSet load_channel(const std::string& path);

}  // namespace ris
