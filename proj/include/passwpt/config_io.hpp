#pragma once

// Configuration files. Powers are written in dBm and the SINR floor in dB;
// this is the only place those units are converted.
//
// Scenario keys (all optional, in a [scenario] table or at top level):
//   preset = "multi_user" | "two_user"
//   carrier_frequency (Hz), n_eff, noise_power_dbm, waveguide_height,
//   waveguide_y, x_max, grid_step, candidates, region_x, region_y,
//   num_waveguides, pas_per_waveguide, num_idrs, num_ehrs, p_max_dbm,
//   p_min_dbm, p_circuit_dbm, phi, zeta (scalar or list), gamma_min_db, r_min,
//   rho_min, solver_tol, max_outer_iters, mc_drops, rng_seed, scaling_factor,
//   mimo_enforce_eh
// Experiment keys ([experiment]):
//   axis, values (dBm for p_max, dB for gamma_min), schemes, drops, out,
//   threads, warm_start
// When num_ehrs or num_waveguides is set without zeta or waveguide_y, zeta
// repeats its first entry and waveguides are spaced 10 m apart.

#include <string>

#include "json.hpp"

#include "passwpt/harness.hpp"
#include "passwpt/scenario.hpp"

namespace passwpt {

double dbm_to_watt(double dbm);
double watt_to_dbm(double watt);
double db_to_linear(double db);
double linear_to_db(double linear);

// Axis values between file units and SI.
double axis_from_file(SweepAxis axis, double value);
double axis_to_file(SweepAxis axis, double value);

// Unknown keys and invalid values throw ConfigError.
ScenarioConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ScenarioConfig& config);
ExperimentSpec experiment_from_json(const nlohmann::json& j);
nlohmann::json experiment_to_json(const ExperimentSpec& spec);

nlohmann::json toml_text_to_json(const std::string& text);

// By extension: .toml or .json. Throws IoError when unreadable.
ScenarioConfig load_config(const std::string& path);
ExperimentSpec load_experiment(const std::string& path);

}  // namespace passwpt
