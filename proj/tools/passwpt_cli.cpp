// passwpt: solve one drop, run a sweep, or turn a report into figure CSVs.
//
// Log level comes from PASSWPT_LOG (quiet | info); info prints progress on
// stderr.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "passwpt/config_io.hpp"
#include "passwpt/harness.hpp"

namespace {

using nlohmann::json;
using namespace passwpt;

bool verbose() {
  const char* v = std::getenv("PASSWPT_LOG");
  return v && std::string(v) == "info";
}

json metrics_json(const MetricsReport& m) {
  return json{{"sinr", m.sinr},           {"rates_bps_hz", m.rates}, {"sum_rate_bps_hz", m.sum_rate},
              {"harvested_w", m.harvested}, {"pce", m.pce},          {"tx_power_w", m.tx_power},
              {"tx_power_dbm", m.tx_power > 0.0 ? watt_to_dbm(m.tx_power) : -1e300}};
}

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int solve_cmd(const std::string& config_path, std::optional<std::uint64_t> seed, std::uint64_t drop,
              const std::string& scheme_name, const std::string& out) {
  ScenarioConfig cfg = config_path.empty() ? multi_user_defaults() : load_config(config_path);
  if (seed) cfg.rng_seed = *seed;
  const UserLayout layout = sample_user_drop(cfg, derive_seed(cfg.rng_seed, drop));
  const Scheme scheme = parse_scheme(scheme_name);
  const ExperimentRow row = run_scheme(scheme, cfg, layout);
  json j{{"scheme", to_string(scheme)},
         {"seed", cfg.rng_seed},
         {"drop", drop},
         {"feasible", row.feasible},
         {"status", row.status},
         {"iterations", row.iterations},
         {"rate_iterations", row.rate_iterations},
         {"converged", row.converged},
         {"pce_design", metrics_json(row.pce_design)},
         {"rate_design", metrics_json(row.rate_design)}};
  const std::string text = j.dump(2);
  if (out.empty()) {
    std::cout << text << '\n';
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + out);
    f << text << '\n';
  }
  return row.feasible ? 0 : 3;
}

int sweep_cmd(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<int> drops,
              const std::vector<std::string>& schemes, const std::string& out, std::optional<int> threads) {
  ExperimentSpec spec = config_path.empty() ? ExperimentSpec{} : load_experiment(config_path);
  if (seed) spec.base.rng_seed = *seed;
  if (drops) spec.drops = *drops;
  if (!schemes.empty()) {
    spec.schemes.clear();
    for (const auto& s : schemes) spec.schemes.push_back(parse_scheme(s));
  }
  if (!out.empty()) spec.out_dir = out;
  if (threads) spec.threads = *threads;
  if (verbose()) {
    std::cerr << "sweep " << to_string(spec.axis) << " over " << spec.values.size() << " values, " << spec.drops
              << " drops\n";
  }
  const ExperimentReport rep = run_experiment(spec);
  std::cout << "scheme,value,feasible,drops,pce_median,sum_rate_median\n";
  for (const auto& a : rep.aggregates) {
    std::cout << to_string(a.scheme) << ',' << axis_to_file(spec.axis, a.value) << ',' << a.feasible << ','
              << a.drops << ',' << a.pce_median << ',' << a.rate_median << '\n';
  }
  return 0;
}

int figure_cmd(const std::string& report_path, const std::vector<std::string>& figures, const std::string& out) {
  const ExperimentReport rep = report_from_json(read_all(report_path));
  for (const auto& name : figures) {
    const Figure f = parse_figure(name);
    if (out.empty()) {
      emit_figure_data(rep, f, std::cout);
      continue;
    }
    std::filesystem::create_directories(out);
    const auto path = std::filesystem::path(out) / (name + ".csv");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    emit_figure_data(rep, f, os);
    if (verbose()) std::cerr << "wrote " << path.string() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pinching-antenna wireless power transfer designs and sweeps"};
  app.require_subcommand(1);

  std::string config, out, scheme = "pass-wpt", report;
  std::optional<std::uint64_t> seed;
  std::optional<int> drops, threads;
  std::uint64_t drop = 0;
  std::vector<std::string> schemes, figures;

  auto* solve = app.add_subcommand("solve", "Solve one drop and print its metrics as JSON");
  solve->add_option("--config", config, "Scenario file (.toml or .json)");
  solve->add_option("--seed", seed, "Base seed");
  solve->add_option("--drop", drop, "Drop index under the base seed");
  solve->add_option("--scheme", scheme, "pass-wpt | ep-pass | mimo");
  solve->add_option("--out", out, "Write the JSON here instead of stdout");

  auto* sweep = app.add_subcommand("sweep", "Run an experiment file");
  sweep->add_option("--config", config, "Experiment file (.toml or .json)");
  sweep->add_option("--seed", seed, "Base seed");
  sweep->add_option("--drops", drops, "Number of drops");
  sweep->add_option("--scheme", schemes, "Schemes to run (repeatable)");
  sweep->add_option("--out", out, "Output directory");
  sweep->add_option("--threads", threads, "Worker threads");

  auto* figure = app.add_subcommand("figure", "Emit figure CSV series from a report.json");
  figure->add_option("report", report, "report.json from a sweep")->required();
  figure->add_option("--figure", figures,
                     "convergence | power_vs_sinr | txpower_trace | pce_vs_grid | rate_vs_L | rate_vs_pmax")
      ->required();
  figure->add_option("--out", out, "Output directory (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*solve) return solve_cmd(config, seed, drop, scheme, out);
    if (*sweep) return sweep_cmd(config, seed, drops, schemes, out, threads);
    if (*figure) return figure_cmd(report, figures, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
