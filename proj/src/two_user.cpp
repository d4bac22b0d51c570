#include "passwpt/two_user.hpp"

#include <chrono>
#include <cmath>
#include <map>

#include "passwpt/qos.hpp"

namespace passwpt {

DirectionPair direction_functions(double c, double d, double delta0, double lambda0) {
  if (!(c > 0.0) || !(d > 0.0)) throw Error(ErrorCode::DegenerateChannel, "zero effective channel");
  DirectionPair p;
  p.c = c;
  p.d = d;
  p.delta0 = delta0;
  const double q = c + 2.0 * lambda0 * delta0 + lambda0 * lambda0 * d;
  p.f_id = (c + lambda0 * delta0) * (c + lambda0 * delta0) / q;
  p.f_eh = (delta0 + lambda0 * d) * (delta0 + lambda0 * d) / q;
  return p;
}

DirectionPair direction_functions(const VectorXcd& c1, const VectorXcd& d1, double lambda0) {
  return direction_functions(c1.squaredNorm(), d1.squaredNorm(), std::abs(c1.dot(d1)), lambda0);
}

VectorXcd mixed_direction(const VectorXcd& c1, const VectorXcd& d1, double lambda0) {
  const cplx cd = c1.dot(d1);
  const cplx rot = std::abs(cd) > 0.0 ? std::conj(cd) / std::abs(cd) : cplx(1.0, 0.0);
  const VectorXcd v = c1 + lambda0 * rot * d1;
  const double nrm = v.norm();
  if (!(nrm > 0.0)) throw Error(ErrorCode::DegenerateChannel, "mixed direction vanishes");
  return v / nrm;
}

double p0_star(double lambda0, const VectorXcd& c1, const VectorXcd& d1, const ScenarioConfig& config) {
  const DirectionPair p = direction_functions(c1, d1, lambda0);
  const double floor = config.sinr_requirement() * config.noise_power / p.f_id;
  if (floor > config.p_max * (1.0 + 1e-12)) {
    throw Error(ErrorCode::InfeasibleLambda, "SNR floor exceeds the power budget");
  }
  return config.p_max;
}

double dinkelbach_beta_update(const VectorXcd& w1, const VectorXcd& d1, const ScenarioConfig& config) {
  return config.zeta.front() * std::norm(d1.dot(w1)) / (config.phi * w1.squaredNorm() + config.p_circuit);
}

cplx wmmse_filter(cplx e, double noise) { return e / (std::norm(e) + noise); }

std::vector<double> lambda_grid(const VectorXcd& c1, const VectorXcd& d1, const ScenarioConfig& config,
                                int points) {
  const double c = c1.squaredNorm();
  const double d = d1.squaredNorm();
  const double delta = std::abs(c1.dot(d1));
  double hi = std::sqrt(c / d);
  for (int i = 0; i < 4000 && direction_functions(c, d, delta, hi).f_eh < 0.999 * d; ++i) {
    hi *= config.scaling_factor;
  }
  std::vector<double> grid{0.0};
  for (int k = 0; k + 1 < points; ++k) {
    const double e = points > 2 ? -6.0 + 6.0 * k / (points - 2) : 0.0;
    grid.push_back(hi * std::pow(10.0, e));
  }
  return grid;
}

namespace {

struct LambdaChoice {
  double lambda0 = 0.0;
  double value = 0.0;
};

// Feasible lambda_0 maximizing zeta P f_EH0 - beta (phi P + P_C) at p0 = P^max.
std::optional<LambdaChoice> best_lambda(const VectorXcd& c1, const VectorXcd& d1, double beta,
                                        const ScenarioConfig& config, const TwoUserOptions& opt) {
  const double c = c1.squaredNorm();
  const double d = d1.squaredNorm();
  if (!(c > 0.0) || !(d > 0.0)) return std::nullopt;
  const double delta = std::abs(c1.dot(d1));
  const double p = config.p_max;
  const double snr_floor = config.sinr_requirement() * config.noise_power;
  const double zeta = config.zeta.front();
  auto value = [&](double l) -> std::optional<double> {
    const DirectionPair dp = direction_functions(c, d, delta, l);
    if (p * dp.f_id < snr_floor * (1.0 - 1e-12)) return std::nullopt;
    if (zeta * p * dp.f_eh < config.p_min * (1.0 - 1e-12)) return std::nullopt;
    return zeta * p * dp.f_eh - beta * (config.phi * p + config.p_circuit);
  };
  const auto grid = lambda_grid(c1, d1, config, opt.lambda_points);
  std::optional<LambdaChoice> best;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto v = value(grid[i]);
    if (v && (!best || *v > best->value)) {
      best = LambdaChoice{grid[i], *v};
      best_i = i;
    }
  }
  if (best && opt.refine_lambda) {
    double a = grid[best_i > 0 ? best_i - 1 : 0];
    double b = grid[std::min(best_i + 1, grid.size() - 1)];
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    auto f = [&](double l) { return value(l).value_or(-1e300); };
    double x1 = b - g * (b - a);
    double x2 = a + g * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int it = 0; it < 80; ++it) {
      if (f1 < f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + g * (b - a);
        f2 = f(x2);
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - g * (b - a);
        f1 = f(x1);
      }
    }
    const double l = f1 > f2 ? x1 : x2;
    const auto v = value(l);
    if (v && *v > best->value) *best = LambdaChoice{l, *v};
  }
  return best;
}

BeamformingMatrix as_matrix(const VectorXcd& w1) {
  BeamformingMatrix w;
  w.w = w1;
  return w;
}

// MM step on the harvested amplitude: maximize Re{e^{-j theta_E} phi_E^T alpha}
// under the phase-fixed SNR floor, the balls and the orthant.
std::optional<VectorXd> pce_alpha_mm(const VectorXcd& phi_i, const VectorXcd& phi_e, const VectorXd& alpha,
                                     int N, int L, const ScenarioConfig& config, double& kkt) {
  QcqpProblem prob(N * L);
  const double theta_e = form_phase(phi_e, alpha);
  prob.set_linear_objective(-(phi_e * std::polar(1.0, -theta_e)).real());
  add_phase_fixed(prob, fix_phase(phi_i, std::sqrt(config.sinr_requirement() * config.noise_power), alpha),
                  false);
  for (int n = 0; n < N; ++n) prob.add_ball(n * L, L, 1.0, "ball_" + std::to_string(n));
  prob.add_nonnegative(0, N * L);
  try {
    SolveOptions so;
    so.start = alpha;
    const QcqpResult r = solve_qcqp(prob, so);
    kkt = std::max(kkt, r.kkt.max_residual());
    return r.x.cwiseMax(0.0);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Infeasible) return std::nullopt;
    throw;
  }
}

// Clamp roundoff so RadiationState accepts solver output.
VectorXd clean_alpha(VectorXd a, int N, int L) {
  a = a.cwiseMax(0.0);
  for (int n = 0; n < N; ++n) {
    const double nrm = a.segment(n * L, L).norm();
    if (nrm > 1.0) a.segment(n * L, L) /= nrm;
  }
  return a;
}

}  // namespace

TwoUserPceResult solve_two_user_pce(const ScenarioConfig& config, const UserLayout& layout,
                                    const TwoUserOptions& options) {
  const auto t_start = std::chrono::steady_clock::now();
  config.validate();
  if (config.num_idrs != 1 || config.num_ehrs != 1) {
    throw Error(ErrorCode::ConfigError, "two-user solver needs K = Q = 1");
  }
  const int N = config.num_waveguides;
  const int L = config.pas_per_waveguide;
  const PositionGrid grid = build_position_grid(config);
  std::map<Placement, ChannelSet> cache;
  auto channels = [&](const Placement& p) -> const ChannelSet& {
    auto it = cache.find(p);
    if (it == cache.end()) it = cache.emplace(p, build_channel_set(p, layout, config)).first;
    return it->second;
  };

  TwoUserState st;
  st.placement = options.start_placement ? *options.start_placement : initial_placement(config, grid);
  st.alpha = options.start_alpha ? RadiationState(*options.start_alpha, N, L)
                                 : RadiationState::equal_power(N, L);
  TwoUserPceResult out;
  SolveReport& rep = out.report;
  const double zeta = config.zeta.front();
  double beta = 0.0;
  double prev_pce = -1.0;
  for (int it = 0; it < config.max_outer_iters; ++it) {
    // Positions and lambda_0 for the current beta.
    std::map<Placement, LambdaChoice> choices;
    const auto search = search_placements(
        config, grid, st.placement,
        [&](const Placement& p) -> std::optional<double> {
          const EffectiveChannels eff = effective_channels(channels(p), st.alpha);
          const auto ch = best_lambda(eff.c[0], eff.d[0], beta, config, options);
          if (!ch) return std::nullopt;
          choices[p] = *ch;
          return ch->value;
        },
        options.exhaustive_limit);
    if (!search.found) {
      if (it == 0) throw Error(ErrorCode::Infeasible, "no placement admits a feasible lambda_0");
      break;
    }
    st.placement = search.best;
    st.lambda0 = choices.at(st.placement).lambda0;
    const ChannelSet& ch = channels(st.placement);
    EffectiveChannels eff = effective_channels(ch, st.alpha);
    st.p0 = config.p_max;
    st.w1 = std::sqrt(st.p0) * mixed_direction(eff.c[0], eff.d[0], st.lambda0);
    double kkt = 0.0;

    if (options.update_alpha) {
      const VectorXcd phi_i = alpha_form(ch.h_idr[0], ch.g_phase, st.w1, L);
      const VectorXcd phi_e = alpha_form(ch.h_ehr[0], ch.g_phase, st.w1, L);
      const auto cand = pce_alpha_mm(phi_i, phi_e, st.alpha.alpha(), N, L, config, kkt);
      if (cand) {
        const RadiationState next(clean_alpha(*cand, N, L), N, L);
        const EffectiveChannels e2 = effective_channels(ch, next, as_matrix(st.w1));
        const EffectiveChannels e1 = effective_channels(ch, st.alpha, as_matrix(st.w1));
        const bool snr_ok = std::norm(e2.s(0, 0)) >=
                            config.sinr_requirement() * config.noise_power * (1.0 - 1e-9);
        if (snr_ok && std::norm(e2.e(0, 0)) > std::norm(e1.e(0, 0))) st.alpha = next;
      }
      eff = effective_channels(ch, st.alpha);
    }

    const double num = zeta * std::norm(eff.d[0].dot(st.w1));
    const double den = config.phi * st.w1.squaredNorm() + config.p_circuit;
    const double resid = num - beta * den;
    rep.beta.push_back(beta);
    rep.lambda0.push_back(st.lambda0);
    rep.p0.push_back(st.p0);
    rep.residual.push_back(std::abs(resid));
    rep.objective.push_back(num / den);
    rep.kkt.push_back(kkt);
    st.trace.push_back(num / den);
    rep.iterations = it + 1;
    st.beta0 = beta;
    // Relative residual: PCE values are far below the absolute tolerance.
    if (std::abs(resid) < config.solver_tol * num) {
      rep.converged = true;
      break;
    }
    beta = num / den;
    if (prev_pce >= 0.0 && std::abs(num / den - prev_pce) < 1e-14 * prev_pce) {
      rep.converged = true;
      st.beta0 = beta;
      break;
    }
    prev_pce = num / den;
  }

  const ChannelSet& ch = channels(st.placement);
  out.channels = ch;
  const VectorXcd phi_i = alpha_form(ch.h_idr[0], ch.g_phase, st.w1, L);
  const VectorXcd phi_e = alpha_form(ch.h_ehr[0], ch.g_phase, st.w1, L);
  out.region = feasible_region_two_user(phi_i, phi_e, config, N, L, false);
  out.metrics = evaluate_metrics(ch, st.alpha, as_matrix(st.w1), config);
  out.state = std::move(st);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return out;
}

TwoUserRateResult solve_two_user_sum_rate(const VectorXcd& w1, const ChannelSet& channels,
                                          const AlphaFeasibleRegion& region, const RadiationState& alpha0,
                                          const ScenarioConfig& config) {
  const auto t_start = std::chrono::steady_clock::now();
  const int N = channels.waveguides;
  const int L = channels.pas;
  if (!region.contains(alpha0.alpha(), 1e-7)) {
    throw Error(ErrorCode::Infeasible, "starting alpha lies outside the feasible region");
  }
  const VectorXcd phi_i = alpha_form(channels.h_idr[0], channels.g_phase, w1, L);
  const VectorXcd phi_e = alpha_form(channels.h_ehr[0], channels.g_phase, w1, L);
  const double noise = config.noise_power;
  const double zeta = config.zeta.front();
  const double den = config.phi * w1.squaredNorm() + config.p_circuit;

  TwoUserRateResult out;
  out.gamma_floor = std::max(region.harvest_floor.empty() ? 0.0 : region.harvest_floor.front(),
                             config.rho_min * den / zeta);
  SolveReport& rep = out.report;
  VectorXd alpha = alpha0.alpha();
  auto rate_of = [&](const VectorXd& a) {
    const cplx e = phi_i.transpose() * a.cast<cplx>();
    return std::log2(1.0 + std::norm(e) / noise);
  };
  double rate = rate_of(alpha);
  rep.objective.push_back(rate);
  const double snr_floor = std::sqrt(config.sinr_requirement() * noise);
  for (int it = 0; it < config.max_outer_iters; ++it) {
    const cplx e = phi_i.transpose() * alpha.cast<cplx>();
    const cplx u = wmmse_filter(e, noise);
    QcqpProblem prob(N * L);
    // |u|^2 |phi_I^T a|^2 - 2 Re{conj(u) phi_I^T a}
    prob.set_objective(std::norm(u) * real_gram(phi_i), -2.0 * (std::conj(u) * phi_i).real());
    add_phase_fixed(prob, fix_phase(phi_i, snr_floor, alpha), false);
    const std::size_t eh_index = prob.linear().size();
    PhaseFixedConstraint eh = fix_phase(phi_e, std::sqrt(out.gamma_floor), alpha);
    const bool use_eh = out.gamma_floor > 0.0;
    if (use_eh) add_phase_fixed(prob, eh, true);
    for (int n = 0; n < N; ++n) prob.add_ball(n * L, L, 1.0, "ball_" + std::to_string(n));
    prob.add_nonnegative(0, N * L);
    QcqpResult r;
    try {
      SolveOptions so;
      so.start = alpha;
      r = solve_qcqp(prob, so);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::Infeasible) throw;
      rep.status = "alpha subproblem infeasible";
      break;
    }
    const VectorXd next = clean_alpha(r.x, N, L);
    const double next_rate = rate_of(next);
    rep.kkt.push_back(r.kkt.max_residual());
    if (!(next_rate >= rate) || !region.contains(next, 1e-7)) {
      rep.objective.push_back(rate);
      rep.residual.push_back(0.0);
      rep.converged = true;
      rep.iterations = it + 1;
      break;
    }
    out.kkt = r.kkt;
    out.theta = eh.theta;
    out.eta = use_eh ? r.kkt.multipliers.linear[eh_index] : 0.0;
    // At high SNR the filter step advances by about sigma^2/|e| per round;
    // push further along the step while the rate keeps rising.
    VectorXd best = next;
    double best_rate = next_rate;
    for (double t = 2.0; t < 1e9; t *= 2.0) {
      const VectorXd cand = alpha + t * (next - alpha);
      if (!region.contains(cand, 0.0)) break;
      const double cand_rate = rate_of(cand);
      if (!(cand_rate > best_rate)) break;
      best = cand;
      best_rate = cand_rate;
    }
    const double change = std::abs(best_rate - rate) / std::max(rate, 1e-300);
    alpha = best;
    rate = best_rate;
    rep.objective.push_back(rate);
    rep.residual.push_back(change);
    rep.iterations = it + 1;
    if (change < config.solver_tol) {
      rep.converged = true;
      break;
    }
  }
  out.alpha = RadiationState(alpha, N, L);
  BeamformingMatrix w;
  w.w = w1;
  out.metrics = evaluate_metrics(channels, out.alpha, w, config);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return out;
}

TwoUserRateResult solve_two_user_sum_rate(const TwoUserPceResult& upper, const ScenarioConfig& config) {
  return solve_two_user_sum_rate(upper.state.w1, upper.channels, upper.region, upper.state.alpha, config);
}

}  // namespace passwpt
