#pragma once

// Monte-Carlo experiments over one sweep axis: per-drop rows for every
// (scheme, value, drop), aggregates, and the CSV series behind each figure.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "passwpt/metrics.hpp"
#include "passwpt/multi_user.hpp"
#include "passwpt/scenario.hpp"

namespace passwpt {

enum class SweepAxis { Iterations, GammaMin, GridDensity, PasPerWaveguide, PMax };
enum class Scheme { PassWpt, EqualPower, Mimo };
enum class Figure { Convergence, PowerVsSinr, TxPowerTrace, PceVsGrid, RateVsL, RateVsPmax };

const char* to_string(SweepAxis axis);
const char* to_string(Scheme scheme);
const char* to_string(Figure figure);
SweepAxis parse_axis(const std::string& name);
Scheme parse_scheme(const std::string& name);
Figure parse_figure(const std::string& name);

// Axis values are SI / linear: p_max in W, gamma_min linear, grid density
// as a candidate count, L and iterations as integers.
struct ExperimentSpec {
  ScenarioConfig base = multi_user_defaults();
  SweepAxis axis = SweepAxis::Iterations;
  std::vector<double> values{60.0};
  std::vector<Scheme> schemes{Scheme::PassWpt, Scheme::EqualPower, Scheme::Mimo};
  int drops = 1;
  std::string out_dir;  // empty: nothing written
  int threads = 1;
  // Carry each drop's solution to the next sweep value and keep the better
  // of the warm and cold solves.
  bool warm_start = true;

  // Throws ConfigError.
  void validate() const;
};

// Scenario for one sweep value.
ScenarioConfig apply_axis(const ScenarioConfig& base, SweepAxis axis, double value);

// x_max * b / count for b = 1..count; nested whenever one count divides the next.
std::vector<double> density_candidates(double x_max, int count);

struct ExperimentRow {
  Scheme scheme = Scheme::PassWpt;
  double value = 0.0;
  int drop = 0;
  bool feasible = true;
  std::string status = "ok";
  int iterations = 0;          // PCE design (the only design for MIMO)
  int rate_iterations = 0;     // rate design
  bool converged = false;
  MetricsReport pce_design;    // metrics at the PCE-maximizing design
  MetricsReport rate_design;   // metrics at the rate-maximizing design
  double pce = 0.0;            // pce_design.pce; 0 when infeasible
  double sum_rate = 0.0;       // rate_design.sum_rate; 0 when infeasible
  double consumed_power = 0.0; // phi P + Q P_C at the PCE design
  std::vector<double> trace;        // objective per round of the PCE design (power for MIMO)
  std::vector<double> power_trace;  // transmit power per round
  std::vector<double> rate_trace;   // objective per round of the rate design
};

struct Aggregate {
  Scheme scheme = Scheme::PassWpt;
  double value = 0.0;
  int feasible = 0;
  int drops = 0;
  double pce_mean = 0.0, pce_median = 0.0, pce_p10 = 0.0, pce_p90 = 0.0;
  double rate_mean = 0.0, rate_median = 0.0, rate_p10 = 0.0, rate_p90 = 0.0;
  double power_mean = 0.0, power_p10 = 0.0, power_p90 = 0.0;
};

// Per-iteration statistics of one trace series at one sweep value.
struct TraceAggregate {
  Scheme scheme = Scheme::PassWpt;
  double value = 0.0;
  std::string series;  // "objective" or "tx_power"
  int iteration = 0;
  double mean = 0.0, p10 = 0.0, p90 = 0.0;
};

struct Provenance {
  std::string config_hash;  // FNV-1a of the canonical spec JSON
  std::uint64_t seed = 0;
  std::string code_version;
};

struct ExperimentReport {
  ExperimentSpec spec;
  std::vector<ExperimentRow> rows;  // ordered by (drop, value, scheme)
  std::vector<Aggregate> aggregates;
  std::vector<TraceAggregate> trace_aggregates;
  Provenance provenance;
};

// A scheme's solutions at the previous sweep value of one drop.
struct DropState {
  ScenarioConfig config;
  std::optional<MultiUserResult> pce;
  std::optional<MultiUserResult> rate;
};

// One drop of one scheme at one scenario. warm carries the previous sweep
// value's solutions in and this value's out (PASS-WPT only).
ExperimentRow run_scheme(Scheme scheme, const ScenarioConfig& config, const UserLayout& layout,
                         DropState* warm = nullptr);

// Deterministic for a given spec: drops use derive_seed(base.rng_seed, drop)
// and rows are emitted in drop order regardless of thread timing. Failed
// drops are recorded as infeasible rows. Writes results.csv incrementally,
// traces.csv and report.json when out_dir is set.
ExperimentReport run_experiment(const ExperimentSpec& spec);

// PCE and rate statistics count infeasible drops as 0; power statistics use
// feasible drops only.
std::vector<Aggregate> aggregate_rows(const std::vector<ExperimentRow>& rows, const ExperimentSpec& spec);
// Traces shorter than the longest one are padded with their final value.
std::vector<TraceAggregate> aggregate_traces(const std::vector<ExperimentRow>& rows, const ExperimentSpec& spec);

// Linear-interpolation percentile, p in [0, 100].
double percentile(std::vector<double> values, double p);
double median(std::vector<double> values);

void write_rows_csv_header(std::ostream& os);
void write_row_csv(std::ostream& os, const ExperimentRow& row);
void write_traces_csv(std::ostream& os, const std::vector<ExperimentRow>& rows);

std::string report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const std::string& text);

// Throws MissingAxis when the report's axis does not match the figure.
// Trace figures (iterations axis, first sweep value):
//   iteration,scheme,objective|tx_power,p10,p90
// Axis figures: <axis>,scheme,<metric>_mean,<metric>_p10,<metric>_p90 where
// the axis column is gamma_min_db, grid_density, L or p_max_dbm and the
// metric is consumed_power (W), pce or sum_rate.
void emit_figure_data(const ExperimentReport& report, Figure figure, std::ostream& os);

std::string fnv1a_hex(const std::string& text);

}  // namespace passwpt
