#include "risopt/harness.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace ris {

ChannelParams ScenarioConfig::channel_params() const {
  ChannelParams p;
  p.K = K;
  p.M = M;
  p.N = N;
  p.L_ub = L_ub;
  p.L_ur = L_ur;
  p.L_rb = L_rb;
  p.L_cp = L_cp;
  p.rician = rician;
  p.sigma2 = sigma2();
  return p;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

void ScenarioConfig::apply(const std::string& key, const std::string& value) {
  auto as_int = [&] { return std::stoi(value); };
  auto as_dbl = [&] { return std::stod(value); };
  auto as_u64 = [&] { return static_cast<std::uint64_t>(std::stoull(value)); };
  if (key == "schema_version") {
    if (as_int() != 1) throw Error("scenario: unsupported schema_version " + value);
  } else if (key == "K") K = as_int();
  else if (key == "M") M = as_int();
  else if (key == "N") N = as_int();
  else if (key == "J") J = as_int();
  else if (key == "J_prime") J_prime = as_int();
  else if (key == "T_max") T_max = as_int();
  else if (key == "sigma2_dbm") sigma2_dbm = as_dbl();
  else if (key == "Q") Q = as_int();
  else if (key == "code_alist") code_alist = value;
  else if (key == "p_tar") p_tar = as_dbl();
  else if (key == "L_ub") L_ub = as_int();
  else if (key == "L_ur") L_ur = as_int();
  else if (key == "L_rb") L_rb = as_int();
  else if (key == "L_cp") L_cp = as_int();
  else if (key == "rician") rician = as_dbl();
  else if (key == "rho_db_min") rho_db_min = as_dbl();
  else if (key == "rho_db_max") rho_db_max = as_dbl();
  else if (key == "rho_db_step") rho_db_step = as_dbl();
  else if (key == "table_frames") table_frames = as_int();
  else if (key == "bp_iters") bp_iters = as_int();
  else if (key == "table_seed") table_seed = as_u64();
  else if (key == "table_cache") table_cache = value;
  else if (key == "realizations") realizations = as_int();
  else if (key == "frames") frames = as_int();
  else if (key == "seed0") seed0 = as_u64();
  else if (key == "optimizer") optimizer = value;
  else if (key == "diag_points") diag_points = as_int();
  else if (key == "diag_eps") diag_eps = as_dbl();
  else if (key == "jobs") jobs = as_int();
  else if (key == "out_dir") out_dir = value;
  else throw Error("scenario: unknown key '" + key + "'");
}

ScenarioConfig ScenarioConfig::from_text(const std::string& text) {
  ScenarioConfig cfg;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("scenario: expected key = value, got '" + line + "'");
    cfg.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  if (cfg.J % cfg.J_prime != 0) throw NonDivisorError("scenario: J_prime must divide J");
  if (cfg.sigma2() <= 0.0) throw Error("scenario: sigma2 must be positive");
  if (cfg.p_tar <= 0.0 || cfg.p_tar >= 0.5) throw Error("scenario: p_tar must be in (0, 0.5)");
  if (cfg.T_max < 1) throw Error("scenario: T_max must be >= 1");
  return cfg;
}

ScenarioConfig ScenarioConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("scenario: cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return from_text(ss.str());
}

std::string ScenarioConfig::canonical_text() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "schema_version = 1\n";
  os << "K = " << K << "\nM = " << M << "\nN = " << N << "\nJ = " << J
     << "\nJ_prime = " << J_prime << "\nT_max = " << T_max << "\nsigma2_dbm = " << sigma2_dbm
     << "\nQ = " << Q << "\ncode_alist = " << code_alist << "\np_tar = " << p_tar
     << "\nL_ub = " << L_ub << "\nL_ur = " << L_ur << "\nL_rb = " << L_rb
     << "\nL_cp = " << L_cp << "\nrician = " << rician << "\nrho_db_min = " << rho_db_min
     << "\nrho_db_max = " << rho_db_max << "\nrho_db_step = " << rho_db_step
     << "\ntable_frames = " << table_frames << "\nbp_iters = " << bp_iters
     << "\ntable_seed = " << table_seed << "\nrealizations = " << realizations
     << "\nframes = " << frames << "\nseed0 = " << seed0 << "\noptimizer = " << optimizer
     << "\ndiag_points = " << diag_points << "\ndiag_eps = " << diag_eps << "\n";
  return os.str();
}

std::uint64_t ScenarioConfig::hash() const {
  const std::string text = canonical_text();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void ScenarioConfig::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw Error("scenario save: cannot open " + path);
  os << canonical_text();
}

CodeSpec get_code(const ScenarioConfig& cfg) { return load_code(cfg.code_alist, cfg.Q); }

TransferFunctionTable get_table(const ScenarioConfig& cfg, const CodeSpec& spec) {
  if (!cfg.table_cache.empty() && std::filesystem::exists(cfg.table_cache))
    return TransferFunctionTable::load(cfg.table_cache);
  std::vector<double> grid;
  for (double r = cfg.rho_db_min; r <= cfg.rho_db_max + 1e-9; r += cfg.rho_db_step)
    grid.push_back(r);
  TransferFunctionTable t =
      estimate_transfer(spec, grid, cfg.table_frames, cfg.bp_iters, cfg.table_seed);
  if (!cfg.table_cache.empty()) t.save(cfg.table_cache);
  return t;
}

OptimizeOutcome optimize_scenario(const ScenarioConfig& cfg, const EffectiveChannel& eff_sub,
                                  const TransferFunctionTable& table, std::uint64_t seed) {
  const SinrTarget target = target_to_sinr(table, cfg.p_tar);
  const RVec rho_tar = RVec::Constant(cfg.K, target.rho_tar);
  OptimizeOutcome out;
  if (cfg.optimizer == "sic") {
    AoResult r = sic_optimize(eff_sub, cfg.T_max, rho_tar, seed);
    out = {r.precoders, r.theta, r.grouping, r.power_trace};
  } else if (cfg.optimizer == "noris" || cfg.optimizer == "random") {
    // Single-group P_1.1 precoding with T_max = 1 and the stated theta.
    CVec theta = CVec::Zero(cfg.N);
    if (cfg.optimizer == "random") {
      Rng rng(seed);
      for (int n = 0; n < cfg.N; ++n) theta[n] = std::polar(1.0, rng.uniform(0.0, 2.0 * kPi));
    }
    const Grouping g = Grouping::single_group(cfg.K);
    PrecoderSet W = fp_precode(eff_sub, theta, sic_constraints(g, rho_tar), std::nullopt);
    out = {std::move(W), std::move(theta), g, {}};
    out.power_trace.push_back(out.precoders.total_power());
  } else if (cfg.optimizer == "diag") {
    const double v_end = target.v_tar;
    AoResult r = diagonal_path_optimize(eff_sub, table, v_end, seed, cfg.diag_points,
                                        cfg.diag_eps);
    out = {r.precoders, r.theta, r.grouping, r.power_trace};
  } else if (cfg.optimizer == "info") {
    CodeSpec spec = get_code(cfg);
    RateSpec rates;
    rates.Q = cfg.Q;
    rates.R.assign(cfg.K, spec.rate());
    rates.J_full = cfg.J;
    rates.L_cp = cfg.L_cp;
    rates.J_sub = cfg.J_prime;
    InfoResult r = optimize_info(eff_sub, rates, seed);
    out = {r.precoders, r.theta, Grouping::single_group(cfg.K), r.power_trace};
  } else {
    throw Error("optimize_scenario: unknown optimizer '" + cfg.optimizer + "'");
  }
  return out;
}

RunRecord run_one(const ScenarioConfig& cfg, const CodeSpec& spec,
                  const TransferFunctionTable& table, std::uint64_t seed) {
  RunRecord rec;
  rec.seed = seed;
  rec.optimizer = cfg.optimizer;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const ChannelSet ch = generate_channels(Geometry{}, cfg.channel_params(), seed);
    const EffectiveChannel eff = assemble_effective(ch, cfg.J);
    const EffectiveChannel eff_sub = downsample(eff, cfg.J_prime);

    OptimizeOutcome opt = optimize_scenario(cfg, eff_sub, table, seed ^ 0x9e3779b97f4a7c15ull);
    const PrecoderSet W_full = opt.precoders.expand(cfg.J);
    const ComposedChannel full = compose(eff, opt.theta);

    rec.total_power = W_full.total_power();
    rec.avg_power_dbm = watt_to_dbm(W_full.avg_symbol_power());

    MonteCarloResult mc = simulate_frames(full, W_full, spec, cfg.T_max, cfg.bp_iters,
                                          cfg.frames, seed ^ 0xc2b2ae3d27d4eb4full);
    rec.ber = mc.ber;

    SeTrace se = se_run(full, W_full, table, cfg.T_max);
    rec.se_ber.resize(cfg.K);
    for (int k = 0; k < cfg.K; ++k) rec.se_ber[k] = table.xi_of_v(se.v(cfg.T_max - 1, k));
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  rec.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

std::vector<RunRecord> run_experiment(const ScenarioConfig& cfg, const CodeSpec& spec,
                                      const TransferFunctionTable& table) {
  std::vector<RunRecord> rows(cfg.realizations);
  std::atomic<int> next{0};
  const int jobs = std::max(1, cfg.jobs);
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= cfg.realizations) return;
      rows[i] = run_one(cfg, spec, table, cfg.seed0 + static_cast<std::uint64_t>(i));
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return rows;
}

void write_csv(const std::vector<RunRecord>& rows, int K, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("write_csv: cannot open " + path);
  os << std::setprecision(12);
  os << "seed,optimizer,status,avg_power_dbm,total_power_w";
  for (int k = 0; k < K; ++k) os << ",ber" << k + 1;
  for (int k = 0; k < K; ++k) os << ",se_ber" << k + 1;
  os << ",runtime_s,error\n";
  for (const auto& r : rows) {
    os << r.seed << ',' << r.optimizer << ',' << (r.ok ? "ok" : "failed") << ','
       << r.avg_power_dbm << ',' << r.total_power;
    for (int k = 0; k < K; ++k) os << ',' << (k < static_cast<int>(r.ber.size()) ? r.ber[k] : -1.0);
    for (int k = 0; k < K; ++k)
      os << ',' << (k < static_cast<int>(r.se_ber.size()) ? r.se_ber[k] : -1.0);
    os << ',' << r.runtime_s << ',' << r.error << '\n';
  }
}

void write_manifest(const ScenarioConfig& cfg, const std::vector<std::string>& outputs,
                    const std::string& path) {
  nlohmann::json j;
  j["schema_version"] = cfg.schema_version;
  j["config"] = cfg.canonical_text();
  j["config_hash"] = cfg.hash();
  j["seeds"] = {cfg.seed0, cfg.seed0 + static_cast<std::uint64_t>(cfg.realizations) - 1};
  j["outputs"] = outputs;
  std::string rev = "unknown";
  if (std::ifstream head(".git/HEAD"); head) {
    std::string line;
    std::getline(head, line);
    if (line.rfind("ref: ", 0) == 0) {
      if (std::ifstream ref(".git/" + line.substr(5)); ref) std::getline(ref, rev);
    } else {
      rev = line;
    }
  }
  j["git_revision"] = rev;
  std::ofstream os(path);
  if (!os) throw Error("write_manifest: cannot open " + path);
  os << j.dump(2) << '\n';
}

double mean_power_dbm(const std::vector<RunRecord>& rows) {
  double acc = 0.0;
  int n = 0;
  for (const auto& r : rows)
    if (r.ok) {
      acc += dbm_to_watt(r.avg_power_dbm);
      ++n;
    }
  if (n == 0) throw Error("mean_power_dbm: no successful rows");
  return watt_to_dbm(acc / n);
}

}  // namespace ris
