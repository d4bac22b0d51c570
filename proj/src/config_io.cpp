#include "passwpt/config_io.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "toml.hpp"

namespace passwpt {
namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

json parse_by_extension(const std::string& path) {
  const std::string text = read_file(path);
  if (ends_with(path, ".toml")) return toml_text_to_json(text);
  if (ends_with(path, ".json")) {
    try {
      return json::parse(text);
    } catch (const json::exception& e) {
      config_error(path + ": " + e.what());
    }
  }
  config_error(path + ": expected a .toml or .json file");
}

std::vector<double> number_list(const json& v) {
  if (v.is_number()) return {v.get<double>()};
  return v.get<std::vector<double>>();
}

}  // namespace

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watt_to_dbm(double watt) { return 10.0 * std::log10(watt) + 30.0; }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

double axis_from_file(SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::PMax: return dbm_to_watt(value);
    case SweepAxis::GammaMin: return db_to_linear(value);
    default: return value;
  }
}

double axis_to_file(SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::PMax: return watt_to_dbm(value);
    case SweepAxis::GammaMin: return linear_to_db(value);
    default: return value;
  }
}

json toml_text_to_json(const std::string& text) {
  toml::table tbl;
  try {
    tbl = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "TOML: " << e.description() << " at line " << e.source().begin.line;
    config_error(os.str());
  }
  std::ostringstream os;
  os << toml::json_formatter{tbl};
  return json::parse(os.str());
}

ScenarioConfig config_from_json(const json& j) {
  if (!j.is_object()) config_error("scenario must be a table");
  const json& s = j.contains("scenario") ? j.at("scenario") : j;
  ScenarioConfig c = multi_user_defaults();
  if (s.contains("preset")) {
    const auto p = s.at("preset").get<std::string>();
    if (p == "two_user") {
      c = two_user_defaults();
    } else if (p != "multi_user") {
      config_error("unknown preset '" + p + "'");
    }
  }
  bool zeta_set = false;
  bool y_set = false;
  const std::map<std::string, std::function<void(const json&)>> keys{
      {"preset", [](const json&) {}},
      {"carrier_frequency", [&](const json& v) { c.carrier_frequency = v.get<double>(); }},
      {"n_eff", [&](const json& v) { c.n_eff = v.get<double>(); }},
      {"noise_power_dbm", [&](const json& v) { c.noise_power = dbm_to_watt(v.get<double>()); }},
      {"waveguide_height", [&](const json& v) { c.waveguide_height = v.get<double>(); }},
      {"waveguide_y", [&](const json& v) { c.waveguide_y = number_list(v); y_set = true; }},
      {"x_max", [&](const json& v) { c.x_max = v.get<double>(); }},
      {"grid_step", [&](const json& v) { c.grid_step = v.get<double>(); }},
      {"candidates", [&](const json& v) { c.candidates = number_list(v); }},
      {"region_x", [&](const json& v) { c.region_x = v.get<double>(); }},
      {"region_y", [&](const json& v) { c.region_y = v.get<double>(); }},
      {"num_waveguides", [&](const json& v) { c.num_waveguides = v.get<int>(); }},
      {"pas_per_waveguide", [&](const json& v) { c.pas_per_waveguide = v.get<int>(); }},
      {"num_idrs", [&](const json& v) { c.num_idrs = v.get<int>(); }},
      {"num_ehrs", [&](const json& v) { c.num_ehrs = v.get<int>(); }},
      {"p_max_dbm", [&](const json& v) { c.p_max = dbm_to_watt(v.get<double>()); }},
      {"p_min_dbm", [&](const json& v) { c.p_min = dbm_to_watt(v.get<double>()); }},
      {"p_circuit_dbm", [&](const json& v) { c.p_circuit = dbm_to_watt(v.get<double>()); }},
      {"phi", [&](const json& v) { c.phi = v.get<double>(); }},
      {"zeta", [&](const json& v) { c.zeta = number_list(v); zeta_set = true; }},
      {"gamma_min_db", [&](const json& v) { c.gamma_min = db_to_linear(v.get<double>()); }},
      {"r_min", [&](const json& v) { c.r_min = v.get<double>(); }},
      {"rho_min", [&](const json& v) { c.rho_min = v.get<double>(); }},
      {"solver_tol", [&](const json& v) { c.solver_tol = v.get<double>(); }},
      {"max_outer_iters", [&](const json& v) { c.max_outer_iters = v.get<int>(); }},
      {"mc_drops", [&](const json& v) { c.mc_drops = v.get<int>(); }},
      {"rng_seed", [&](const json& v) { c.rng_seed = v.get<std::uint64_t>(); }},
      {"scaling_factor", [&](const json& v) { c.scaling_factor = v.get<double>(); }},
      {"mimo_enforce_eh", [&](const json& v) { c.mimo_enforce_eh = v.get<bool>(); }},
  };
  for (const auto& [key, value] : s.items()) {
    if (key == "experiment" && &s == &j) continue;
    const auto it = keys.find(key);
    if (it == keys.end()) config_error("unknown scenario key '" + key + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      config_error("scenario key '" + key + "': " + e.what());
    }
  }
  if (!zeta_set || c.zeta.size() == 1) {
    const double z = c.zeta.empty() ? 0.5 : c.zeta.front();
    c.zeta.assign(static_cast<std::size_t>(std::max(c.num_ehrs, 0)), z);
  }
  if (!y_set && static_cast<int>(c.waveguide_y.size()) != c.num_waveguides) {
    c.waveguide_y.clear();
    for (int n = 0; n < c.num_waveguides; ++n) c.waveguide_y.push_back(10.0 * n);
  }
  c.validate();
  return c;
}

json config_to_json(const ScenarioConfig& c) {
  json j;
  j["carrier_frequency"] = c.carrier_frequency;
  j["n_eff"] = c.n_eff;
  j["noise_power_dbm"] = watt_to_dbm(c.noise_power);
  j["waveguide_height"] = c.waveguide_height;
  j["waveguide_y"] = c.waveguide_y;
  j["x_max"] = c.x_max;
  j["grid_step"] = c.grid_step;
  j["candidates"] = c.candidates;
  j["region_x"] = c.region_x;
  j["region_y"] = c.region_y;
  j["num_waveguides"] = c.num_waveguides;
  j["pas_per_waveguide"] = c.pas_per_waveguide;
  j["num_idrs"] = c.num_idrs;
  j["num_ehrs"] = c.num_ehrs;
  j["p_max_dbm"] = watt_to_dbm(c.p_max);
  j["p_min_dbm"] = c.p_min > 0.0 ? watt_to_dbm(c.p_min) : -1e300;
  j["p_circuit_dbm"] = c.p_circuit > 0.0 ? watt_to_dbm(c.p_circuit) : -1e300;
  j["phi"] = c.phi;
  j["zeta"] = c.zeta;
  j["gamma_min_db"] = linear_to_db(c.gamma_min);
  j["r_min"] = c.r_min;
  j["rho_min"] = c.rho_min;
  j["solver_tol"] = c.solver_tol;
  j["max_outer_iters"] = c.max_outer_iters;
  j["mc_drops"] = c.mc_drops;
  j["rng_seed"] = c.rng_seed;
  j["scaling_factor"] = c.scaling_factor;
  j["mimo_enforce_eh"] = c.mimo_enforce_eh;
  return j;
}

ExperimentSpec experiment_from_json(const json& j) {
  ExperimentSpec spec;
  spec.base = config_from_json(j.contains("scenario") ? j.at("scenario") : json::object());
  spec.drops = spec.base.mc_drops;
  if (j.contains("experiment")) {
    const json& e = j.at("experiment");
    std::vector<double> file_values;
    bool values_set = false;
    for (const auto& [key, v] : e.items()) {
      try {
        if (key == "axis") {
          spec.axis = parse_axis(v.get<std::string>());
        } else if (key == "values") {
          file_values = number_list(v);
          values_set = true;
        } else if (key == "schemes") {
          spec.schemes.clear();
          for (const auto& s : v) spec.schemes.push_back(parse_scheme(s.get<std::string>()));
        } else if (key == "drops") {
          spec.drops = v.get<int>();
        } else if (key == "out") {
          spec.out_dir = v.get<std::string>();
        } else if (key == "threads") {
          spec.threads = v.get<int>();
        } else if (key == "warm_start") {
          spec.warm_start = v.get<bool>();
        } else {
          config_error("unknown experiment key '" + key + "'");
        }
      } catch (const json::exception& ex) {
        config_error("experiment key '" + key + "': " + ex.what());
      }
    }
    if (values_set) {
      spec.values.clear();
      for (double v : file_values) spec.values.push_back(axis_from_file(spec.axis, v));
    } else if (spec.axis == SweepAxis::Iterations) {
      spec.values = {static_cast<double>(spec.base.max_outer_iters)};
    } else {
      config_error("experiment.values is required for axis " + std::string(to_string(spec.axis)));
    }
  }
  spec.validate();
  return spec;
}

json experiment_to_json(const ExperimentSpec& spec) {
  json j;
  j["scenario"] = config_to_json(spec.base);
  json e;
  e["axis"] = to_string(spec.axis);
  std::vector<double> values;
  for (double v : spec.values) values.push_back(axis_to_file(spec.axis, v));
  e["values"] = values;
  json schemes = json::array();
  for (Scheme s : spec.schemes) schemes.push_back(to_string(s));
  e["schemes"] = schemes;
  e["drops"] = spec.drops;
  e["out"] = spec.out_dir;
  e["threads"] = spec.threads;
  e["warm_start"] = spec.warm_start;
  j["experiment"] = e;
  return j;
}

ScenarioConfig load_config(const std::string& path) { return config_from_json(parse_by_extension(path)); }

ExperimentSpec load_experiment(const std::string& path) {
  return experiment_from_json(parse_by_extension(path));
}

}  // namespace passwpt
