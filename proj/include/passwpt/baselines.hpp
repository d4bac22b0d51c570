#pragma once

// Reference schemes: a conventional MIMO array with the same number of RF
// chains, and PASS with equal power radiation.

#include <string>
#include <vector>

#include "passwpt/channel.hpp"
#include "passwpt/metrics.hpp"
#include "passwpt/multi_user.hpp"
#include "passwpt/scenario.hpp"

namespace passwpt {

struct BaselineResult {
  std::string scheme;
  MetricsReport metrics;
  double tx_power = 0.0;       // W
  std::vector<double> trace;   // per-iteration objective (W for MIMO)
  int iterations = 0;
  bool converged = false;
  bool feasible = true;
  std::string status = "ok";
  BeamformingMatrix w;
};

// N-element half-wavelength ULA along x at the first feed point, height d_z^0.
// Channel rows use the same spherical model; alpha = 1 and G = I.
ChannelSet mimo_channel_set(const ScenarioConfig& config, const UserLayout& layout);

// Minimum transmit power subject to SINR_k >= gamma and, when
// config.mimo_enforce_eh, P_q >= P^min. The harvest floors are handled by
// successive tangents; each tangent round is one iteration. Infeasibility is
// reported in the result, not thrown.
BaselineResult mimo_swipt(const ScenarioConfig& config, const UserLayout& layout);

// alpha_{n,l} = sqrt(1/L) at the initial placement; only W is optimized for
// the chosen objective.
BaselineResult equal_power_pass(const ScenarioConfig& config, const UserLayout& layout,
                                Objective objective = Objective::SumRate);

}  // namespace passwpt
