// Command-line front end: scenario-driven simulation, optimization, state
// evolution traces, sweeps, and transfer-table management.
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "risopt/harness.hpp"

using namespace ris;

namespace {

struct CommonArgs {
  std::string scenario;
  std::vector<std::string> overrides;
};

ScenarioConfig make_config(const CommonArgs& args) {
  ScenarioConfig cfg = args.scenario.empty() ? ScenarioConfig{}
                                             : ScenarioConfig::from_file(args.scenario);
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error("--set expects key=value, got " + kv);
    cfg.apply(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("-s,--scenario", args.scenario, "scenario file (key = value lines)");
  sub->add_option("--set", args.overrides, "override a scenario key (key=value)")
      ->take_all();
}

std::string out_path(const ScenarioConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RIS-aided MIMO-OFDM simulator and optimizer"};
  app.require_subcommand(1);

  CommonArgs a_table, a_opt, a_sim, a_trace, a_sweep;

  auto* c_table = app.add_subcommand("transfer-table", "estimate the DEC transfer table");
  add_common(c_table, a_table);
  std::string table_out = "transfer_table.txt";
  c_table->add_option("-o,--out", table_out, "output table path");

  auto* c_opt = app.add_subcommand("optimize", "run the selected optimizer on one realization");
  add_common(c_opt, a_opt);
  std::uint64_t opt_seed = 1;
  c_opt->add_option("--seed", opt_seed, "channel realization seed");

  auto* c_sim = app.add_subcommand("simulate", "optimize + Monte Carlo BER over realizations");
  add_common(c_sim, a_sim);

  auto* c_trace = app.add_subcommand("se-trace", "state-evolution trace for one realization");
  add_common(c_trace, a_trace);
  std::uint64_t trace_seed = 1;
  c_trace->add_option("--seed", trace_seed, "channel realization seed");

  auto* c_sweep = app.add_subcommand("sweep", "sweep a scenario key over values");
  add_common(c_sweep, a_sweep);
  std::string sweep_key = "T_max";
  std::vector<std::string> sweep_values;
  c_sweep->add_option("--key", sweep_key, "scenario key to sweep");
  c_sweep->add_option("--values", sweep_values, "values for the swept key")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_table->parsed()) {
      ScenarioConfig cfg = make_config(a_table);
      CodeSpec spec = get_code(cfg);
      cfg.table_cache.clear();
      TransferFunctionTable t = get_table(cfg, spec);
      t.save(table_out);
      const SinrTarget tar = target_to_sinr(t, cfg.p_tar);
      std::cout << "wrote " << table_out << "\n";
      std::cout << "P_tar " << cfg.p_tar << " -> v_tar " << tar.v_tar << ", rho_tar "
                << lin_to_db(tar.rho_tar) << " dB\n";
    } else if (c_opt->parsed()) {
      ScenarioConfig cfg = make_config(a_opt);
      CodeSpec spec = get_code(cfg);
      TransferFunctionTable table = get_table(cfg, spec);
      const ChannelSet ch = generate_channels(Geometry{}, cfg.channel_params(), opt_seed);
      const EffectiveChannel eff = assemble_effective(ch, cfg.J);
      const EffectiveChannel eff_sub = downsample(eff, cfg.J_prime);
      OptimizeOutcome out = optimize_scenario(cfg, eff_sub, table, opt_seed);
      const PrecoderSet W_full = out.precoders.expand(cfg.J);
      std::cout << "optimizer " << cfg.optimizer << " seed " << opt_seed << "\n";
      std::cout << "avg power " << watt_to_dbm(W_full.avg_symbol_power()) << " dBm\n";
      const std::string csv = out_path(cfg, "ao_trace.csv");
      std::ofstream os(csv);
      os << "round,power_w\n";
      for (size_t i = 0; i < out.power_trace.size(); ++i)
        os << i << ',' << out.power_trace[i] << '\n';
      std::cout << "wrote " << csv << "\n";
    } else if (c_sim->parsed()) {
      ScenarioConfig cfg = make_config(a_sim);
      CodeSpec spec = get_code(cfg);
      TransferFunctionTable table = get_table(cfg, spec);
      auto rows = run_experiment(cfg, spec, table);
      const std::string csv = out_path(cfg, "experiment.csv");
      write_csv(rows, cfg.K, csv);
      const std::string manifest = out_path(cfg, "manifest.json");
      write_manifest(cfg, {csv}, manifest);
      int ok = 0;
      for (const auto& r : rows) ok += r.ok;
      std::cout << ok << "/" << rows.size() << " realizations succeeded\n";
      if (ok > 0) std::cout << "mean power " << mean_power_dbm(rows) << " dBm\n";
      std::cout << "wrote " << csv << " and " << manifest << "\n";
    } else if (c_trace->parsed()) {
      ScenarioConfig cfg = make_config(a_trace);
      CodeSpec spec = get_code(cfg);
      TransferFunctionTable table = get_table(cfg, spec);
      const ChannelSet ch = generate_channels(Geometry{}, cfg.channel_params(), trace_seed);
      const EffectiveChannel eff = assemble_effective(ch, cfg.J);
      const EffectiveChannel eff_sub = downsample(eff, cfg.J_prime);
      OptimizeOutcome out = optimize_scenario(cfg, eff_sub, table, trace_seed);
      SeTrace trace = se_run(compose(eff, out.theta), out.precoders.expand(cfg.J), table,
                             cfg.T_max);
      const std::string csv = out_path(cfg, "se_trace.csv");
      save_trace_csv(trace, csv);
      std::cout << "wrote " << csv << "\n";
    } else if (c_sweep->parsed()) {
      std::vector<std::vector<RunRecord>> all;
      std::ofstream os;
      ScenarioConfig base = make_config(a_sweep);
      const std::string csv = out_path(base, "sweep.csv");
      os.open(csv);
      os << sweep_key << ",mean_power_dbm,ok,total\n";
      for (const auto& val : sweep_values) {
        ScenarioConfig cfg = make_config(a_sweep);
        cfg.apply(sweep_key, val);
        CodeSpec spec = get_code(cfg);
        TransferFunctionTable table = get_table(cfg, spec);
        auto rows = run_experiment(cfg, spec, table);
        int ok = 0;
        for (const auto& r : rows) ok += r.ok;
        os << val << ',' << (ok ? mean_power_dbm(rows) : 0.0) << ',' << ok << ','
           << rows.size() << '\n';
        std::cout << sweep_key << " = " << val << ": mean power "
                  << (ok ? mean_power_dbm(rows) : 0.0) << " dBm (" << ok << "/" << rows.size()
                  << ")\n";
      }
      std::cout << "wrote " << csv << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
