#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "risopt/channel.hpp"
#include "risopt/coding.hpp"
#include "risopt/info_optimizer.hpp"
#include "risopt/sic_optimizer.hpp"
#include "risopt/state_evolution.hpp"

namespace ris {

/// Scenario files are `key = value` lines with a versioned schema
/// (`schema_version = 1`); unknown keys are rejected.
struct ScenarioConfig {
  int schema_version = 1;
  // system
  int K = 4, M = 4, N = 16, J = 256, J_prime = 8, T_max = 2;
  double sigma2_dbm = -105.0;
  int Q = 2;
  std::string code_alist = "data/ldpc_1024_r05.alist";
  double p_tar = 1e-2;
  // channel
  int L_ub = 6, L_ur = 2, L_rb = 5, L_cp = 16;
  double rician = 10.0;
  // transfer table
  double rho_db_min = -6.0, rho_db_max = 12.0, rho_db_step = 0.5;
  int table_frames = 200;
  int bp_iters = 30;
  std::uint64_t table_seed = 7777;
  std::string table_cache;
  // experiment
  int realizations = 50;
  int frames = 100;
  std::uint64_t seed0 = 1;
  std::string optimizer = "sic";  // sic | diag | noris | random | info
  int diag_points = 64;
  double diag_eps = 1e-6;
  int jobs = 1;
  std::string out_dir = ".";

  double sigma2() const { return dbm_to_watt(sigma2_dbm); }
  ChannelParams channel_params() const;
  std::string canonical_text() const;
  std::uint64_t hash() const;  // FNV-1a of the canonical text

  static ScenarioConfig from_file(const std::string& path);
  static ScenarioConfig from_text(const std::string& text);
  void apply(const std::string& key, const std::string& value);
  void save(const std::string& path) const;
};

TransferFunctionTable get_table(const ScenarioConfig& cfg, const CodeSpec& spec);

CodeSpec get_code(const ScenarioConfig& cfg);

struct RunRecord {
  std::uint64_t seed = 0;
  std::string optimizer;
  bool ok = false;
  std::string error;
  double total_power = 0.0;     // on the full-J grid, watts
  double avg_power_dbm = 0.0;   // 10 log10( (1/(J K)) sum |W|^2 * 1000 )
  std::vector<double> ber;      // per user at T_max
  std::vector<double> se_ber;   // SE-predicted
  double runtime_s = 0.0;
};

struct OptimizeOutcome {
  PrecoderSet precoders;  // on the J' grid
  CVec theta;
  Grouping grouping;
  std::vector<double> power_trace;
};

/// Dispatches to the selected optimizer. Baselines `noris` and `random`
/// follow the stated definitions: single-group FP precoding with
/// G_k(theta) = G_k^ub (theta = 0) or a random unit-modulus theta.
OptimizeOutcome optimize_scenario(const ScenarioConfig& cfg, const EffectiveChannel& eff_sub,
                                  const TransferFunctionTable& table, std::uint64_t seed);

RunRecord run_one(const ScenarioConfig& cfg, const CodeSpec& spec,
                  const TransferFunctionTable& table, std::uint64_t seed);

/// Realization-level worker pool; rows are ordered by seed so aggregation is
/// independent of scheduling.
std::vector<RunRecord> run_experiment(const ScenarioConfig& cfg, const CodeSpec& spec,
                                      const TransferFunctionTable& table);

void write_csv(const std::vector<RunRecord>& rows, int K, const std::string& path);
void write_manifest(const ScenarioConfig& cfg, const std::vector<std::string>& outputs,
                    const std::string& path);

double mean_power_dbm(const std::vector<RunRecord>& rows);

}  // namespace ris
