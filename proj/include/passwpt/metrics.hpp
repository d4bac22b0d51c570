#pragma once

// Link-level performance functionals. Everything is in SI watts.

#include <vector>

#include "passwpt/channel.hpp"
#include "passwpt/types.hpp"

namespace passwpt {

struct ScenarioConfig;

struct MetricsReport {
  std::vector<double> sinr;
  std::vector<double> rates;      // bits/s/Hz
  double sum_rate = 0.0;
  std::vector<double> harvested;  // W
  double pce = 0.0;
  double tx_power = 0.0;          // W
};

// |s_kk|^2 / (sum_{j != k} |s_kj|^2 + sigma^2).
double sinr(int k, const EffectiveChannels& eff, double noise);

double achievable_rate(double sinr_value);
double achievable_rate(int k, const EffectiveChannels& eff, double noise);
double sum_rate(const EffectiveChannels& eff, double noise);

// zeta_q * sum_k |d_q^H w_k|^2.
double harvested_power(int q, const EffectiveChannels& eff, double zeta_q);

// Consumed power phi * sum_k ||w_k||^2 + Q * P_C.
double consumed_power(const BeamformingMatrix& w, const ScenarioConfig& config);

// sum_q P_q / consumed power.
double pce(const EffectiveChannels& eff, const BeamformingMatrix& w, const ScenarioConfig& config);

MetricsReport evaluate_metrics(const EffectiveChannels& eff, const BeamformingMatrix& w,
                               const ScenarioConfig& config);

MetricsReport evaluate_metrics(const ChannelSet& ch, const RadiationState& alpha,
                               const BeamformingMatrix& w, const ScenarioConfig& config);

}  // namespace passwpt
