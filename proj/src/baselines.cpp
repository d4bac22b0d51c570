#include "passwpt/baselines.hpp"

#include <cmath>

#include "passwpt/convex.hpp"
#include "passwpt/qos.hpp"

namespace passwpt {
namespace {

MetricsReport infeasible_metrics(const ScenarioConfig& config) {
  MetricsReport m;
  m.sinr.assign(static_cast<std::size_t>(config.num_idrs), 0.0);
  m.rates.assign(static_cast<std::size_t>(config.num_idrs), 0.0);
  m.harvested.assign(static_cast<std::size_t>(config.num_ehrs), 0.0);
  return m;
}

// Power minimization with SINR cones and, optionally, harvest tangents at x_ref.
std::optional<VectorXd> min_power_step(const EffectiveChannels& eff, const VectorXd& x_ref,
                                       const ScenarioConfig& config, bool harvest) {
  const int antennas = static_cast<int>(eff.c.front().size());
  const int users = static_cast<int>(eff.c.size());
  const int dim = 2 * antennas * users;
  QcqpProblem prob(dim);
  prob.set_objective(MatrixXd::Identity(dim, dim), VectorXd::Zero(dim));
  prob.add_ball(0, dim, std::sqrt(config.p_max), "power");
  const double gamma = config.sinr_requirement();
  for (int k = 0; k < users; ++k) {
    std::vector<VectorXcd> rows;
    for (int j = 0; j < users; ++j) rows.push_back(beam_row(eff.c[static_cast<std::size_t>(k)], j, antennas, users));
    add_sinr_cone(prob, rows[static_cast<std::size_t>(k)], interference_rows(rows, k), gamma, config.noise_power,
                  form_phase(rows[static_cast<std::size_t>(k)], x_ref), "sinr" + std::to_string(k));
  }
  if (harvest && config.p_min > 0.0) {
    for (std::size_t q = 0; q < eff.d.size(); ++q) {
      std::vector<VectorXcd> rows;
      for (int k = 0; k < users; ++k) rows.push_back(beam_row(eff.d[q], k, antennas, users));
      add_energy_tangent(prob, rows, x_ref, config.p_min / config.zeta[q], "eh" + std::to_string(q));
    }
  }
  SolveOptions so;
  so.tol = 1e-9;
  try {
    return solve_qcqp(prob, so).x;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Infeasible) throw;
  }
  return std::nullopt;
}

bool harvest_met(const EffectiveChannels& eff, const ScenarioConfig& config) {
  for (std::size_t q = 0; q < eff.d.size(); ++q) {
    if (harvested_power(static_cast<int>(q), eff, config.zeta[q]) < config.p_min * (1.0 - 1e-7)) return false;
  }
  return true;
}

}  // namespace

ChannelSet mimo_channel_set(const ScenarioConfig& config, const UserLayout& layout) {
  const int n = config.num_waveguides;
  std::vector<Point3> antennas;
  const double y0 = config.waveguide_y.empty() ? 0.0 : config.waveguide_y.front();
  for (int i = 0; i < n; ++i) antennas.push_back({0.5 * config.wavelength() * i, y0, config.waveguide_height});
  ChannelSet ch;
  ch.waveguides = n;
  ch.pas = 1;
  for (const auto& u : layout.idr_positions) ch.h_idr.push_back(spherical_channel(antennas, u, config));
  for (const auto& u : layout.ehr_positions) ch.h_ehr.push_back(spherical_channel(antennas, u, config));
  ch.g_phase = VectorXcd::Ones(n);
  return ch;
}

BaselineResult mimo_swipt(const ScenarioConfig& config, const UserLayout& layout) {
  config.validate();
  BaselineResult out;
  out.scheme = "mimo";
  const ChannelSet ch = mimo_channel_set(config, layout);
  const int n = ch.waveguides;
  const int users = static_cast<int>(ch.h_idr.size());
  const RadiationState ones(VectorXd::Ones(n), n, 1);
  const EffectiveChannels eff = effective_channels(ch, ones);

  const auto fail = [&](const char* why) {
    out.feasible = false;
    out.status = why;
    out.metrics = infeasible_metrics(config);
    return out;
  };

  std::optional<VectorXd> x = min_power_step(eff, VectorXd::Zero(2 * n * users), config, false);
  if (!x) return fail("infeasible");
  out.iterations = 1;
  BeamformingMatrix w = unpack_beamformer(*x, n, users);
  out.trace.push_back(w.power());

  if (config.mimo_enforce_eh) {
    for (int it = 0; it < config.max_outer_iters; ++it) {
      const std::optional<VectorXd> next = min_power_step(eff, *x, config, true);
      if (!next) return fail("infeasible harvest floor");
      ++out.iterations;
      x = next;
      w = unpack_beamformer(*x, n, users);
      const double prev = out.trace.back();
      out.trace.push_back(w.power());
      if (std::abs(out.trace.back() - prev) <= config.solver_tol * std::max(prev, 1e-300)) {
        out.converged = true;
        break;
      }
    }
    if (!harvest_met(effective_channels(ch, ones, w), config)) return fail("infeasible harvest floor");
  } else {
    out.converged = true;
  }
  out.w = w;
  out.tx_power = w.power();
  out.metrics = evaluate_metrics(ch, ones, w, config);
  return out;
}

BaselineResult equal_power_pass(const ScenarioConfig& config, const UserLayout& layout, Objective objective) {
  BaselineResult out;
  out.scheme = "ep-pass";
  MultiUserOptions opts;
  opts.objective = objective;
  opts.update_x = false;
  opts.update_alpha = false;
  opts.rebalance = false;
  try {
    const MultiUserResult r = solve_multi_user(config, layout, opts);
    out.metrics = r.metrics;
    out.w = r.w;
    out.tx_power = r.w.power();
    out.trace = r.report.objective;
    out.iterations = r.report.iterations;
    out.converged = r.report.converged;
    out.feasible = r.report.feasible;
    out.status = r.report.status;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Infeasible) throw;
    out.feasible = false;
    out.status = "infeasible";
    out.metrics = infeasible_metrics(config);
  }
  return out;
}

}  // namespace passwpt
