#pragma once

// Geometry, physical constants, user drops and the discrete PA position grid.
//
// All quantities are SI (metres, hertz, watts). dBm/dB conversion happens at
// the configuration boundary in config_io, never here.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "passwpt/types.hpp"

namespace passwpt {

struct ScenarioConfig {
  // Physical constants.
  double carrier_frequency = 28e9;  // Hz
  double n_eff = 1.4;
  double noise_power = 1e-11;  // W, -80 dBm

  // Waveguide geometry. Waveguides run parallel to the x-axis.
  double waveguide_height = 5.0;                     // m (d_z^0)
  std::vector<double> waveguide_y{0.0, 10.0, 20.0, 30.0};  // m, one per waveguide
  double x_max = 32.0;                               // m
  double grid_step = 0.0;  // m (minimum PA spacing); 0 means half a wavelength
  // Explicit candidate x-coordinates. When non-empty they replace the
  // uniform b*grid_step grid.
  std::vector<double> candidates{8.0, 16.0, 24.0, 32.0};

  // User drop rectangle.
  double region_x = 10.0;
  double region_y = 10.0;

  int num_waveguides = 4;      // N
  int pas_per_waveguide = 4;   // L
  int num_idrs = 4;            // K
  int num_ehrs = 4;            // Q

  // Power model.
  double p_max = 100.0;      // W, 50 dBm
  double p_min = 1e-10;      // W, per-EHR harvested floor
  double p_circuit = 1e-3;   // W, per-EHR circuit power
  double phi = 2.5;          // reciprocal of amplifier drain efficiency
  std::vector<double> zeta{0.5, 0.5, 0.5, 0.5};  // RF-to-DC efficiency per EHR

  // Service requirements.
  double gamma_min = 100.0;  // linear SINR floor (20 dB)
  double r_min = 0.0;        // bits/s/Hz per IDR
  double rho_min = 0.0;      // PCE floor for the rate stage

  // Solver and Monte-Carlo controls.
  double solver_tol = 1e-4;
  int max_outer_iters = 60;
  int mc_drops = 100;
  std::uint64_t rng_seed = 20251014;
  // Growth factor of the bracket expansion used by the lambda_0 search.
  double scaling_factor = 1.25;
  // Whether the MIMO baseline enforces the per-EHR harvested floor.
  bool mimo_enforce_eh = true;

  double wavelength() const { return kSpeedOfLight / carrier_frequency; }
  double guided_wavelength() const { return wavelength() / n_eff; }
  double kappa() const { return 2.0 * kPi / wavelength(); }
  double eta() const { return kSpeedOfLight / (4.0 * kPi * carrier_frequency); }
  double min_spacing() const { return grid_step > 0.0 ? grid_step : 0.5 * wavelength(); }
  // SINR each IDR must reach: the larger of gamma_min and 2^r_min - 1.
  double sinr_requirement() const;
  int total_pas() const { return num_waveguides * pas_per_waveguide; }

  // Throws Error(ConfigError) listing every violated invariant.
  void validate() const;
};

// Default {N,L,K,Q} = {4,4,4,4} multi-user scenario.
ScenarioConfig multi_user_defaults();
// Default {N,L,K,Q} = {1,4,1,1} two-user scenario.
ScenarioConfig two_user_defaults();

struct UserLayout {
  std::vector<Point3> idr_positions;
  std::vector<Point3> ehr_positions;
};

struct PositionGrid {
  std::vector<double> candidates;  // strictly increasing
  int count() const { return static_cast<int>(candidates.size()); }
};

// x-coordinates of the PAs, one row per waveguide.
struct Placement {
  std::vector<std::vector<double>> x;

  int waveguides() const { return static_cast<int>(x.size()); }
  int pas() const { return x.empty() ? 0 : static_cast<int>(x.front().size()); }
  bool operator==(const Placement&) const = default;
  auto operator<=>(const Placement&) const = default;
};

// Uniform grid {b*step : b = 0..j-1}, j = floor(x_max/step)+1. Throws
// NonPositiveStep when step <= 0.
PositionGrid uniform_grid(double x_max, double step);

// Candidate grid for a scenario: the explicit candidate list when present,
// otherwise the uniform grid with step min_spacing().
PositionGrid build_position_grid(const ScenarioConfig& config);

// Uniform i.i.d. drop of K IDRs and Q EHRs on the ground plane.
UserLayout sample_user_drop(const ScenarioConfig& config, std::uint64_t seed);

// Independent per-index seed derived from a base seed (splitmix64 mixing), so
// drop streams do not depend on execution order.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

enum class ViolationKind { Dimension, Ordering, Spacing, OffGrid, OutOfRange };

struct PlacementViolation {
  ViolationKind kind;
  int waveguide = -1;
  int index = -1;
  std::string message;
};

struct PlacementValidation {
  std::vector<PlacementViolation> violations;
  bool ok() const { return violations.empty(); }
  bool has(ViolationKind kind) const;
};

PlacementValidation validate_placement(const Placement& placement, const ScenarioConfig& config);
PlacementValidation validate_placement(const Placement& placement, const ScenarioConfig& config,
                                       const PositionGrid& grid);

// Evenly spread L of the candidates on every waveguide.
Placement initial_placement(const ScenarioConfig& config, const PositionGrid& grid);

const char* to_string(ViolationKind kind);

// Every increasing L-subset of the grid with adjacent gaps >= min_spacing(),
// in lexicographic order. Stops collecting once max_rows is exceeded.
std::vector<std::vector<double>> enumerate_rows(const ScenarioConfig& config, const PositionGrid& grid,
                                                std::size_t max_rows);

// Size of the full placement set (rows^N), saturating at SIZE_MAX.
std::size_t placement_count(std::size_t rows, int waveguides);

// The i-th placement of the lexicographic product of rows over waveguides.
Placement placement_at(const std::vector<std::vector<double>>& rows, int waveguides, std::size_t index);

using PlacementScore = std::function<std::optional<double>(const Placement&)>;

struct PlacementSearchResult {
  Placement best;
  double score = 0.0;
  bool found = false;
  bool exhaustive = false;
  std::size_t evaluated = 0;
};

// Argmax of score over the placement set (nullopt marks an infeasible
// placement). Exhaustive in lexicographic order, first maximum kept, when the
// set has at most exhaustive_limit members; otherwise best-improvement
// coordinate search over single-PA moves starting at `start`.
PlacementSearchResult search_placements(const ScenarioConfig& config, const PositionGrid& grid,
                                        const Placement& start, const PlacementScore& score,
                                        std::size_t exhaustive_limit = 4096);

}  // namespace passwpt
