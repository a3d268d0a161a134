#include "risopt/coding.hpp"

#include <fstream>
#include <iomanip>

namespace ris {

CodeSpec load_code(const std::string& alist_path, int Q) {
  CodeSpec spec{std::make_shared<LdpcCode>(load_alist(alist_path)), Constellation(Q)};
  if (spec.code->n() % Q != 0) throw DimensionError("load_code: n not divisible by Q");
  return spec;
}

CVec encode_modulate(const CodeSpec& spec, const Interleaver& pi,
                     const std::vector<std::uint8_t>& message) {
  const auto codeword = spec.code->encode(message);
  const auto interleaved = pi.interleave(codeword);
  const int Q = spec.constellation.bits_per_symbol();
  const int n_sym = spec.symbols_per_codeword();
  CVec x(n_sym);
  for (int j = 0; j < n_sym; ++j) x[j] = spec.constellation.map(&interleaved[j * Q]);
  return x;
}

DecOutput app_decode(const CodeSpec& spec, const Interleaver& pi, const CVec& x_ext,
                     double noise_variance, int bp_iters) {
  if (noise_variance <= 0.0) throw Error("app_decode: noise variance must be positive");
  const int Q = spec.constellation.bits_per_symbol();
  const int n_sym = spec.symbols_per_codeword();
  if (x_ext.size() != n_sym) throw DimensionError("app_decode: symbol count mismatch");

  std::vector<double> llr_interleaved(spec.code->n());
  for (int j = 0; j < n_sym; ++j)
    spec.constellation.llr(x_ext[j], noise_variance, &llr_interleaved[j * Q]);

  const auto llr_cw = pi.deinterleave(llr_interleaved);
  auto post_cw = spec.code->decode_app(llr_cw, bp_iters);
  const auto post_interleaved = pi.interleave(post_cw);

  DecOutput out;
  out.xbar.resize(n_sym);
  double vsum = 0.0;
  for (int j = 0; j < n_sym; ++j) {
    double var_j;
    spec.constellation.posterior_moments(&post_interleaved[j * Q], &out.xbar[j], &var_j);
    vsum += var_j;
  }
  out.vbar = vsum / n_sym;
  out.hard_info.resize(spec.code->info_length());
  const auto& info = spec.code->info_cols();
  for (size_t i = 0; i < info.size(); ++i) out.hard_info[i] = post_cw[info[i]] < 0.0 ? 1 : 0;
  out.posterior_llr = std::move(post_cw);
  return out;
}

std::vector<double> isotonic_non_increasing(const std::vector<double>& y) {
  // PAV on the negated sequence (non-decreasing fit of -y).
  const int n = static_cast<int>(y.size());
  std::vector<double> level(n);
  std::vector<int> weight(n);
  int blocks = 0;
  for (int i = 0; i < n; ++i) {
    level[blocks] = -y[i];
    weight[blocks] = 1;
    ++blocks;
    while (blocks > 1 && level[blocks - 2] > level[blocks - 1]) {
      const double merged = (level[blocks - 2] * weight[blocks - 2] +
                             level[blocks - 1] * weight[blocks - 1]) /
                            (weight[blocks - 2] + weight[blocks - 1]);
      weight[blocks - 2] += weight[blocks - 1];
      level[blocks - 2] = merged;
      --blocks;
    }
  }
  std::vector<double> out;
  out.reserve(n);
  for (int b = 0; b < blocks; ++b)
    for (int i = 0; i < weight[b]; ++i) out.push_back(-level[b]);
  return out;
}

TransferFunctionTable estimate_transfer(const CodeSpec& spec,
                                        const std::vector<double>& rho_grid_db,
                                        int frames_per_point, int bp_iters, std::uint64_t seed) {
  if (frames_per_point < 100)
    throw Error("estimate_transfer: frames_per_point must be >= 100");
  for (size_t i = 1; i < rho_grid_db.size(); ++i)
    if (rho_grid_db[i] <= rho_grid_db[i - 1])
      throw Error("estimate_transfer: grid must be strictly increasing");

  TransferFunctionTable table;
  table.rho_db = rho_grid_db;
  table.v.resize(rho_grid_db.size());
  table.pe.resize(rho_grid_db.size());
  const int k_info = spec.code->info_length();
  table.bits_per_point = static_cast<long>(k_info) * frames_per_point;

  Rng rng(seed);
  long any_errors = 0;
  for (size_t gi = 0; gi < rho_grid_db.size(); ++gi) {
    const double rho = db_to_lin(rho_grid_db[gi]);
    const double noise_var = 1.0 / rho;
    double v_acc = 0.0;
    long err = 0;
    for (int f = 0; f < frames_per_point; ++f) {
      std::vector<std::uint8_t> msg(k_info);
      for (auto& b : msg) b = rng.bit() ? 1 : 0;
      Interleaver pi(spec.code->n(), rng.raw());
      CVec x = encode_modulate(spec, pi, msg);
      CVec obs(x.size());
      const double s = std::sqrt(noise_var);
      for (Eigen::Index j = 0; j < x.size(); ++j) obs[j] = x[j] + s * rng.cgaussian();
      DecOutput dec = app_decode(spec, pi, obs, noise_var, bp_iters);
      // Extrinsic subtraction (the DEC-to-ESE update), clipped to [1e-8, 1].
      const double denom = 1.0 / std::max(dec.vbar, 1e-300) - rho;
      double v_out = denom > 0.0 ? 1.0 / denom : 1.0;
      v_out = std::clamp(v_out, TransferFunctionTable::kVFloor, 1.0);
      v_acc += v_out;
      for (int i = 0; i < k_info; ++i) err += dec.hard_info[i] != msg[i];
    }
    table.v[gi] = v_acc / frames_per_point;
    table.pe[gi] = static_cast<double>(err) / table.bits_per_point;
    any_errors += err;
  }
  if (any_errors == 0)
    throw InsufficientSamplesError("estimate_transfer: no error events anywhere on the grid");
  table.v = isotonic_non_increasing(table.v);
  table.pe = isotonic_non_increasing(table.pe);
  return table;
}

double TransferFunctionTable::psi(double rho_linear) const {
  const double r = lin_to_db(std::max(rho_linear, 1e-300));
  if (r <= rho_db.front()) return 1.0;
  if (r >= rho_db.back()) {
    if (v.back() > 2.0 * kVFloor)
      throw OutOfRangeError("psi: rho above table range and table not resolved; extend grid");
    return v.back();
  }
  const auto it = std::upper_bound(rho_db.begin(), rho_db.end(), r);
  const size_t i = it - rho_db.begin();
  const double t = (r - rho_db[i - 1]) / (rho_db[i] - rho_db[i - 1]);
  return v[i - 1] + t * (v[i] - v[i - 1]);
}

double TransferFunctionTable::psi_inv(double v_target) const {
  if (v_target >= v.front()) return db_to_lin(rho_db.front());
  if (v_target < v.back())
    throw OutOfRangeError("psi_inv: v below table range; extend grid");
  size_t i = 0;
  while (v[i] > v_target) ++i;  // first index with v <= target
  double r;
  if (i == 0 || v[i - 1] == v[i]) {
    r = rho_db[i];
  } else {
    const double t = (v[i - 1] - v_target) / (v[i - 1] - v[i]);
    r = rho_db[i - 1] + t * (rho_db[i] - rho_db[i - 1]);
  }
  // Round trip: guarantee psi(rho) <= v_target on the interpolant.
  double rho = db_to_lin(r);
  for (int guard = 0; guard < 64 && psi(rho) > v_target; ++guard) rho *= db_to_lin(0.01);
  return rho;
}

double TransferFunctionTable::xi_of_v(double v_in) const {
  // v descends along the grid; pe descends along the grid.
  if (v_in >= v.front()) return pe.front();
  if (v_in <= v.back()) return pe.back();
  size_t i = 0;
  while (v[i] > v_in) ++i;
  if (v[i - 1] == v[i]) return pe[i];
  const double t = (v[i - 1] - v_in) / (v[i - 1] - v[i]);
  const double lo = std::max(pe[i], 1e-300);
  const double hi = std::max(pe[i - 1], 1e-300);
  return std::exp(std::log(hi) + t * (std::log(lo) - std::log(hi)));
}

double TransferFunctionTable::xi_inv(double pe_target) const {
  const double resolvable = 3.0 / static_cast<double>(std::max<long>(bits_per_point, 1));
  for (size_t i = 0; i < pe.size(); ++i) {
    const double ceiling = pe[i] > 0.0 ? pe[i] : resolvable;
    if (ceiling <= pe_target) {
      if (i == 0) return v[0];
      if (pe[i] <= 0.0 || pe[i - 1] <= 0.0) return v[i];
      // log-linear interpolation in pe between grid points i-1 and i
      const double t =
          (std::log(pe[i - 1]) - std::log(pe_target)) / (std::log(pe[i - 1]) - std::log(pe[i]));
      return v[i - 1] + t * (v[i] - v[i - 1]);
    }
  }
  throw OutOfRangeError("xi_inv: target BER below the smallest observed BER");
}

SinrTarget target_to_sinr(const TransferFunctionTable& table, double p_tar) {
  SinrTarget t;
  t.v_tar = table.xi_inv(p_tar);
  t.rho_tar = table.psi_inv(t.v_tar);
  return t;
}

void TransferFunctionTable::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw Error("table save: cannot open " + path);
  os << std::setprecision(17);
  os << "# risopt transfer table v1: rho_db v pe\n";
  os << "bits_per_point " << bits_per_point << '\n';
  for (size_t i = 0; i < rho_db.size(); ++i)
    os << rho_db[i] << ' ' << v[i] << ' ' << pe[i] << '\n';
}

TransferFunctionTable TransferFunctionTable::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("table load: cannot open " + path);
  std::string line;
  std::getline(is, line);
  TransferFunctionTable t;
  std::string tag;
  is >> tag >> t.bits_per_point;
  if (tag != "bits_per_point") throw Error("table load: bad header");
  double r, v, p;
  while (is >> r >> v >> p) {
    t.rho_db.push_back(r);
    t.v.push_back(v);
    t.pe.push_back(p);
  }
  if (t.rho_db.empty()) throw Error("table load: empty table");
  return t;
}

}  // namespace ris
