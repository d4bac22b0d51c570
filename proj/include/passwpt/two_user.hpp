#pragma once

// One IDR and one EHR (K = Q = 1). Upper level: Dinkelbach over the PCE with
// the beamformer restricted to the span of the two effective channels and a
// one-dimensional search over the mixing weight lambda_0; PA positions by
// enumeration. Lower level: WMMSE refinement of alpha for the IDR rate inside
// the alpha set left feasible by the upper level.

#include <optional>
#include <vector>

#include "passwpt/channel.hpp"
#include "passwpt/convex.hpp"
#include "passwpt/metrics.hpp"
#include "passwpt/radiation.hpp"
#include "passwpt/report.hpp"
#include "passwpt/scenario.hpp"

namespace passwpt {

struct DirectionPair {
  double f_id = 0.0;
  double f_eh = 0.0;
  double c = 0.0;       // ||c_1||^2
  double d = 0.0;       // ||d_1||^2
  double delta0 = 0.0;  // |c_1^H d_1|
};

// f_ID0 = (C + l delta)^2 / q, f_EH0 = (delta + l D)^2 / q,
// q = C + 2 l delta + l^2 D. Throws DegenerateChannel if C or D vanishes.
DirectionPair direction_functions(const VectorXcd& c1, const VectorXcd& d1, double lambda0);
DirectionPair direction_functions(double c, double d, double delta0, double lambda0);

// Unit-norm beam (c_1 + l d~_1)/||.||, d~_1 = d_1 e^{j arg(d_1^H c_1)} so that
// c_1^H d~_1 = delta0 >= 0.
VectorXcd mixed_direction(const VectorXcd& c1, const VectorXcd& d1, double lambda0);

// P^max when the SNR floor gamma sigma^2 / f_ID0 fits in the budget. Throws
// InfeasibleLambda otherwise.
double p0_star(double lambda0, const VectorXcd& c1, const VectorXcd& d1, const ScenarioConfig& config);

// zeta_1 |d_1^H w_1|^2 / (phi ||w_1||^2 + P_C).
double dinkelbach_beta_update(const VectorXcd& w1, const VectorXcd& d1, const ScenarioConfig& config);

// e / (|e|^2 + sigma^2).
cplx wmmse_filter(cplx e, double noise);

// {0} followed by points-1 log-spaced values up to lambda_hi, where lambda_hi
// is grown by config.scaling_factor until f_EH0 >= 0.999 D.
std::vector<double> lambda_grid(const VectorXcd& c1, const VectorXcd& d1, const ScenarioConfig& config,
                                int points);

struct TwoUserOptions {
  int lambda_points = 201;
  bool refine_lambda = true;  // golden-section pass next to the best grid point
  bool update_alpha = true;   // MM alpha step inside the AO loop
  std::optional<Placement> start_placement;
  std::optional<VectorXd> start_alpha;
  std::size_t exhaustive_limit = 4096;
};

struct TwoUserState {
  double beta0 = 0.0;
  double lambda0 = 0.0;
  double p0 = 0.0;
  VectorXcd w1;
  Placement placement;
  RadiationState alpha;
  std::vector<double> trace;
};

struct TwoUserPceResult {
  TwoUserState state;
  ChannelSet channels;
  AlphaFeasibleRegion region;
  MetricsReport metrics;
  SolveReport report;
};

// Throws Infeasible when no placement and lambda_0 meet the SNR and harvest
// floors within P^max.
TwoUserPceResult solve_two_user_pce(const ScenarioConfig& config, const UserLayout& layout,
                                    const TwoUserOptions& options = {});

struct TwoUserRateResult {
  RadiationState alpha;
  MetricsReport metrics;
  SolveReport report;
  KktCertificate kkt;   // last alpha subproblem
  double eta = 0.0;     // multiplier of the harvest floor
  double theta = 0.0;   // fixed phase of the harvest term
  double gamma_floor = 0.0;  // Gamma used in the harvest floor
};

// Alternates the WMMSE receive filter with the phase-fixed alpha QCQP.
TwoUserRateResult solve_two_user_sum_rate(const VectorXcd& w1, const ChannelSet& channels,
                                          const AlphaFeasibleRegion& region, const RadiationState& alpha0,
                                          const ScenarioConfig& config);
TwoUserRateResult solve_two_user_sum_rate(const TwoUserPceResult& upper, const ScenarioConfig& config);

}  // namespace passwpt
