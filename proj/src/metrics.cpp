#include "passwpt/metrics.hpp"

#include <cmath>

#include "passwpt/scenario.hpp"

namespace passwpt {

double sinr(int k, const EffectiveChannels& eff, double noise) {
  const double signal = std::norm(eff.s(k, k));
  double interference = 0.0;
  for (Eigen::Index j = 0; j < eff.s.cols(); ++j) {
    if (j != k) interference += std::norm(eff.s(k, j));
  }
  return signal / (interference + noise);
}

double achievable_rate(double sinr_value) { return std::log2(1.0 + sinr_value); }

double achievable_rate(int k, const EffectiveChannels& eff, double noise) {
  return achievable_rate(sinr(k, eff, noise));
}

double sum_rate(const EffectiveChannels& eff, double noise) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < eff.s.rows(); ++k) total += achievable_rate(static_cast<int>(k), eff, noise);
  return total;
}

double harvested_power(int q, const EffectiveChannels& eff, double zeta_q) {
  return zeta_q * eff.e.row(q).squaredNorm();
}

double consumed_power(const BeamformingMatrix& w, const ScenarioConfig& config) {
  return config.phi * w.power() + static_cast<double>(config.num_ehrs) * config.p_circuit;
}

double pce(const EffectiveChannels& eff, const BeamformingMatrix& w, const ScenarioConfig& config) {
  double harvested = 0.0;
  for (Eigen::Index q = 0; q < eff.e.rows(); ++q) {
    harvested += harvested_power(static_cast<int>(q), eff, config.zeta[static_cast<std::size_t>(q)]);
  }
  return harvested / consumed_power(w, config);
}

MetricsReport evaluate_metrics(const EffectiveChannels& eff, const BeamformingMatrix& w,
                               const ScenarioConfig& config) {
  MetricsReport m;
  for (Eigen::Index k = 0; k < eff.s.rows(); ++k) {
    m.sinr.push_back(sinr(static_cast<int>(k), eff, config.noise_power));
    m.rates.push_back(achievable_rate(m.sinr.back()));
    m.sum_rate += m.rates.back();
  }
  for (Eigen::Index q = 0; q < eff.e.rows(); ++q) {
    m.harvested.push_back(
        harvested_power(static_cast<int>(q), eff, config.zeta[static_cast<std::size_t>(q)]));
  }
  m.pce = pce(eff, w, config);
  m.tx_power = w.power();
  return m;
}

MetricsReport evaluate_metrics(const ChannelSet& ch, const RadiationState& alpha,
                               const BeamformingMatrix& w, const ScenarioConfig& config) {
  return evaluate_metrics(effective_channels(ch, alpha, w), w, config);
}

}  // namespace passwpt
