// isac_sim: command-line front end for the ISAC beam-tracking link simulator.

#include "isac/config.hpp"
#include "isac/link_sim.hpp"
#include "isac/report.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scheme;
  std::optional<int> trials;
  std::string out_dir = "out";
};

isac::SimConfig resolve(const Common& c) {
  isac::SimConfig cfg = c.config_path.empty() ? isac::SimConfig{} : isac::load_config(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  if (c.scheme) cfg.scheme = isac::scheme_from_string(*c.scheme);
  if (c.trials) cfg.trials = *c.trials;
  cfg.validate();
  return cfg;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw isac::ConfigError("cannot write '" + p.string() + "'");
  return os;
}

void add_common(CLI::App* app, Common& c, bool with_scheme) {
  app->add_option("--config", c.config_path, "JSON configuration file");
  app->add_option("--seed", c.seed, "master seed");
  if (with_scheme) app->add_option("--scheme", c.scheme, "isac or codebook");
  app->add_option("--trials", c.trials, "Monte Carlo trials");
  app->add_option("--out", c.out_dir, "output directory");
}

int cmd_run(const Common& c) {
  const isac::SimConfig cfg = resolve(c);
  const auto results = isac::run_trials(cfg, cfg.scheme, cfg.trials);
  const fs::path dir = c.out_dir;
  fs::create_directories(dir);
  const std::string tag = isac::to_string(cfg.scheme);
  for (const auto& r : results) {
    auto os = open_out(dir / (tag + "_trial" + std::to_string(r.trial) + ".csv"));
    isac::write_slot_csv(os, r);
  }
  const auto summary = isac::summary_json(cfg, cfg.scheme, results);
  auto js = open_out(dir / (tag + "_summary.json"));
  js << summary.dump(2) << '\n';
  std::cout << tag << ": trials " << results.size() << ", angle_rmse_rad " << summary["angle_rmse_rad"].dump()
            << ", ber " << summary["ber"].dump() << ", throughput_mbps " << summary["throughput_mbps"].dump() << '\n';
  return 0;
}

int cmd_sweep(const Common& c) {
  const isac::SimConfig cfg = resolve(c);
  const auto rows = isac::sweep_snr(cfg, cfg.snr_sweep_db, cfg.trials);
  fs::create_directories(c.out_dir);
  auto os = open_out(fs::path(c.out_dir) / "sweep.csv");
  isac::write_sweep_csv(os, rows);
  isac::write_sweep_csv(std::cout, rows);
  return 0;
}

int cmd_ledger(const Common& c) {
  const isac::SimConfig cfg = resolve(c);
  std::cout << isac::ledger_report(cfg);
  return 0;
}

int cmd_cdf(const Common& c, const std::vector<std::string>& inputs, const std::string& field) {
  if (inputs.empty()) throw isac::ConfigError("cdf: no input CSV files");
  const auto f = isac::error_field_from_string(field);
  std::vector<isac::TrialResult> results;
  for (const auto& in : inputs) {
    std::ifstream is(in);
    if (!is) throw isac::ConfigError("cannot open run output '" + in + "'");
    isac::TrialResult r;
    r.records = isac::read_slot_csv(is, in);
    results.push_back(std::move(r));
  }
  const auto cdf = isac::rmse_cdf(results, f);
  fs::create_directories(c.out_dir);
  auto os = open_out(fs::path(c.out_dir) / ("cdf_" + field + ".csv"));
  isac::write_cdf_csv(os, cdf);
  isac::write_cdf_csv(std::cout, cdf);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ISAC beam tracking link simulator"};
  app.require_subcommand(1);

  Common run_opts, sweep_opts, ledger_opts, cdf_opts;
  auto* run = app.add_subcommand("run", "simulate trials, write per-slot CSV and a summary JSON");
  add_common(run, run_opts, true);
  auto* sweep = app.add_subcommand("sweep", "BER and throughput of both schemes over the SNR list");
  add_common(sweep, sweep_opts, false);
  auto* ledger = app.add_subcommand("ledger", "print the RE ledgers and the overhead reduction");
  ledger->add_option("--config", ledger_opts.config_path, "JSON configuration file");
  auto* cdf = app.add_subcommand("cdf", "empirical CDF of per-slot errors from run CSVs");
  std::vector<std::string> cdf_inputs;
  std::string cdf_field = "angle";
  cdf->add_option("inputs", cdf_inputs, "per-slot CSV files")->required();
  cdf->add_option("--field", cdf_field, "angle, beam or distance");
  cdf->add_option("--out", cdf_opts.out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_opts);
    if (*sweep) return cmd_sweep(sweep_opts);
    if (*ledger) return cmd_ledger(ledger_opts);
    if (*cdf) return cmd_cdf(cdf_opts, cdf_inputs, cdf_field);
  } catch (const isac::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
