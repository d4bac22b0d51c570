#pragma once

// Multi-user PCE and sum-rate maximization by alternating surrogate ascent.
// PCE uses a quadratic transform of the ratio; sum rate uses a Lagrangian
// dual transform of each log(1 + SINR). Each round refreshes the auxiliary
// variables, then updates W, then X over the grid, then alpha.

#include <map>
#include <optional>
#include <vector>

#include "passwpt/channel.hpp"
#include "passwpt/convex.hpp"
#include "passwpt/metrics.hpp"
#include "passwpt/radiation.hpp"
#include "passwpt/report.hpp"
#include "passwpt/scenario.hpp"

namespace passwpt {

enum class Objective { Pce, SumRate };

struct PceAux {
  VectorXcd u_e;  // unit-ball vector, length Q*K, index q*K + k
  cplx rho{0.0, 0.0};
};

struct SrAux {
  VectorXd gamma;
  VectorXcd nu;
};

struct SurrogateValue {
  double value = 0.0;
  bool tight_at_reference = false;
};

// v_qk = sqrt(zeta_q) d_q^H w_k.
VectorXcd stacked_harvest(const EffectiveChannels& eff, const ScenarioConfig& config);

PceAux pce_aux_update(const EffectiveChannels& eff, const BeamformingMatrix& w, const ScenarioConfig& config);

// 2 Re{conj(rho) u^H v} - |rho|^2 (phi ||W||^2 + Q P_C).
double pce_surrogate(const EffectiveChannels& eff, const BeamformingMatrix& w, const PceAux& aux,
                     const ScenarioConfig& config);

SrAux sr_aux_update(const EffectiveChannels& eff, double noise);

// sum_k Phi_k / ln 2. tight_at_reference compares against the true sum rate.
SurrogateValue sr_surrogate(const EffectiveChannels& eff, const SrAux& aux, double noise);

// Which service constraints a block step keeps.
struct StepConstraints {
  bool sinr = true;
  bool harvest = true;
  double pce_floor = 0.0;  // only the rate objective uses it
};

struct WStepResult {
  BeamformingMatrix w;
  double mu = 0.0;           // power-budget multiplier
  bool closed_form = false;  // the unconstrained stationary point was used
  bool degenerate = false;   // rho == 0
  bool solved = true;
  KktCertificate kkt;
};

// Stationary point W_k = b_k / (|rho|^2 phi + mu) with mu from the budget.
WStepResult pce_w_closed_form(const PceAux& aux, const EffectiveChannels& eff, const ScenarioConfig& config);

// Maximizes the PCE surrogate over W. Uses the stationary point when it meets
// the service floors, otherwise the cone program with the floors restricted
// around w_ref. force_numeric skips the stationary-point shortcut.
WStepResult pce_w_step(const PceAux& aux, const ChannelSet& channels, const RadiationState& alpha,
                       const BeamformingMatrix& w_ref, const ScenarioConfig& config,
                       const StepConstraints& cons, bool force_numeric = false);

struct AlphaStepResult {
  VectorXd alpha;
  bool solved = true;
  bool noop = false;
  KktCertificate kkt;
  std::vector<double> ball_multipliers;  // lambda_n
  double objective = 0.0;               // value of the step's own objective
  // Closed-form check for the rate step.
  bool closed_form_applicable = false;
  VectorXd closed_form_alpha;
  double closed_form_objective = 0.0;
  bool ridge_used = false;
};

AlphaStepResult pce_alpha_step(const PceAux& aux, const ChannelSet& channels, const BeamformingMatrix& w,
                               const VectorXd& alpha_ref, const ScenarioConfig& config,
                               const StepConstraints& cons);

// Rate-surrogate maximizer under the budget alone: W = (A + mu I)^{-1} B with
// A = sum_k |nu_k|^2 c_k c_k^H and b_k = sqrt(1 + gamma_k) nu_k c_k.
WStepResult sr_w_closed_form(const SrAux& aux, const EffectiveChannels& eff, const ScenarioConfig& config);

// Maximizes the rate surrogate over W; the closed form is used when it meets
// the service floors, otherwise the restricted cone program.
WStepResult sr_w_step(const SrAux& aux, const ChannelSet& channels, const RadiationState& alpha,
                      const BeamformingMatrix& w_ref, const ScenarioConfig& config, const StepConstraints& cons,
                      bool force_numeric = false);

AlphaStepResult sr_alpha_step(const SrAux& aux, const ChannelSet& channels, const BeamformingMatrix& w,
                              const VectorXd& alpha_ref, const ScenarioConfig& config,
                              const StepConstraints& cons);

// B_SR and b of the rate surrogate in alpha: Phi = const - a^T B a + 2 b^T a.
void sr_alpha_quadratic(const SrAux& aux, const ChannelSet& channels, const BeamformingMatrix& w,
                        MatrixXd& b_mat, VectorXd& b_vec);

// Channel sets per placement, built on first use.
class ChannelCache {
 public:
  ChannelCache(const UserLayout& layout, const ScenarioConfig& config) : layout_(layout), config_(config) {}
  const ChannelSet& get(const Placement& p);

 private:
  UserLayout layout_;
  ScenarioConfig config_;
  std::map<Placement, ChannelSet> cache_;
};

// Placement maximizing the true objective at fixed (W, alpha) among those
// meeting the service floors; current placement wins ties.
Placement pce_x_select(ChannelCache& cache, const BeamformingMatrix& w, const RadiationState& alpha,
                       const Placement& current, const ScenarioConfig& config, const StepConstraints& cons,
                       Objective objective = Objective::Pce, std::size_t exhaustive_limit = 4096);

// Minimum-power beamformer meeting every SINR floor, scaled up to P^max.
// Throws Infeasible when the floors cannot be met within the budget.
BeamformingMatrix initial_beamformer(const ChannelSet& channels, const RadiationState& alpha,
                                     const ScenarioConfig& config);

struct MultiUserOptions {
  Objective objective = Objective::Pce;
  StepConstraints constraints;
  bool update_w = true;
  bool update_x = true;
  bool update_alpha = true;
  std::optional<Placement> start_placement;
  std::optional<VectorXd> start_alpha;
  std::optional<BeamformingMatrix> start_w;
  std::size_t exhaustive_limit = 4096;
  // Aux/step repetitions per block inside one round, stopped early once the
  // relative gain drops below inner_tol.
  int inner_iters = 1;
  double inner_tol = 1e-6;
  // Momentum along the last step inside each block and across rounds, kept
  // only when it strictly improves the objective and meets the floors.
  bool extrapolate = true;
  // Unit-norm alpha_n with row n of W compensated, then W back to P^max.
  bool rebalance = true;
};

struct MultiUserResult {
  BeamformingMatrix w;
  Placement placement;
  RadiationState alpha;
  ChannelSet channels;
  MetricsReport metrics;
  SolveReport report;
};

MultiUserResult solve_multi_user(const ScenarioConfig& config, const UserLayout& layout,
                                 const MultiUserOptions& options = {});

// Moves every alpha_n onto the unit sphere and scales row n of W by the old
// norm (effective channels unchanged), then scales W up to P^max. Neither
// SINR nor harvested power can drop.
void rebalance(RadiationState& alpha, BeamformingMatrix& w, const ScenarioConfig& config);

// True objective value at a point.
double objective_value(Objective objective, const EffectiveChannels& eff, const BeamformingMatrix& w,
                       const ScenarioConfig& config);

// All active service floors hold (relative slack 1e-7).
bool meets_service(const EffectiveChannels& eff, const BeamformingMatrix& w, const ScenarioConfig& config,
                   const StepConstraints& cons);

}  // namespace passwpt
