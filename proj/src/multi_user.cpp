#include "passwpt/multi_user.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "passwpt/qos.hpp"

namespace passwpt {
namespace {

constexpr double kServiceSlack = 1e-7;
constexpr double kInactiveSlack = 1e-6;

struct BeamRows {
  std::vector<std::vector<VectorXcd>> s;  // s[k][j]
  std::vector<std::vector<VectorXcd>> e;  // e[q][k], scaled by sqrt(zeta_q) when asked
};

BeamRows beam_rows(const EffectiveChannels& eff, int antennas, int users) {
  BeamRows r;
  for (const auto& c : eff.c) {
    std::vector<VectorXcd> row;
    for (int j = 0; j < users; ++j) row.push_back(beam_row(c, j, antennas, users));
    r.s.push_back(std::move(row));
  }
  for (const auto& d : eff.d) {
    std::vector<VectorXcd> row;
    for (int k = 0; k < users; ++k) row.push_back(beam_row(d, k, antennas, users));
    r.e.push_back(std::move(row));
  }
  return r;
}

BeamRows alpha_rows(const ChannelSet& ch, const BeamformingMatrix& w) {
  BeamRows r;
  const int users = w.users();
  for (const auto& h : ch.h_idr) {
    std::vector<VectorXcd> row;
    for (int j = 0; j < users; ++j) row.push_back(alpha_form(h, ch.g_phase, w.w.col(j), ch.pas));
    r.s.push_back(std::move(row));
  }
  for (const auto& h : ch.h_ehr) {
    std::vector<VectorXcd> row;
    for (int k = 0; k < users; ++k) row.push_back(alpha_form(h, ch.g_phase, w.w.col(k), ch.pas));
    r.e.push_back(std::move(row));
  }
  return r;
}

// SINR cones and harvest tangents around x_ref.
void add_service(QcqpProblem& prob, const BeamRows& rows, const VectorXd& x_ref, const ScenarioConfig& config,
                 const StepConstraints& cons) {
  if (cons.sinr) {
    const double gamma = config.sinr_requirement();
    for (std::size_t k = 0; k < rows.s.size(); ++k) {
      const int kk = static_cast<int>(k);
      const double theta = form_phase(rows.s[k][k], x_ref);
      add_sinr_cone(prob, rows.s[k][k], interference_rows(rows.s[k], kk), gamma, config.noise_power, theta,
                    "sinr" + std::to_string(k));
    }
  }
  if (cons.harvest && config.p_min > 0.0) {
    for (std::size_t q = 0; q < rows.e.size(); ++q) {
      add_energy_tangent(prob, rows.e[q], x_ref, config.p_min / config.zeta[q], "eh" + std::to_string(q));
    }
  }
}

// sqrt(zeta_q)-weighted harvest rows flattened over (q, k).
std::vector<VectorXcd> weighted_harvest(const BeamRows& rows, const ScenarioConfig& config) {
  std::vector<VectorXcd> out;
  for (std::size_t q = 0; q < rows.e.size(); ++q) {
    for (const auto& r : rows.e[q]) out.push_back(std::sqrt(config.zeta[q]) * r);
  }
  return out;
}

// rho (phi x^T x + Q P_C) <= sum_i 2 Re{conj(z_i) r_i}^T x - |z_i|^2 with z_i at x_ref.
void add_pce_floor_w(QcqpProblem& prob, const BeamRows& rows, const VectorXd& x_ref,
                     const ScenarioConfig& config, double floor) {
  const int n = prob.dimension();
  VectorXd g = VectorXd::Zero(n);
  double offset = 0.0;
  const VectorXcd xr = x_ref.cast<cplx>();
  for (const auto& r : weighted_harvest(rows, config)) {
    const cplx z = r.transpose() * xr;
    g += 2.0 * (std::conj(z) * r).real();
    offset += std::norm(z);
  }
  const double q_pc = static_cast<double>(rows.e.size()) * config.p_circuit;
  prob.add_quadratic(floor * config.phi * MatrixXd::Identity(n, n), -g, -offset - floor * q_pc, "pce_floor");
}

// Tangent of sum_q zeta_q sum_k |e_qk(alpha)|^2 >= floor * den with den fixed.
void add_pce_floor_alpha(QcqpProblem& prob, const BeamRows& rows, const VectorXd& x_ref,
                         const ScenarioConfig& config, double floor, double den) {
  add_energy_tangent(prob, weighted_harvest(rows, config), x_ref, floor * den, "pce_floor");
}

void add_alpha_set(QcqpProblem& prob, int waveguides, int pas) {
  for (int n = 0; n < waveguides; ++n) prob.add_ball(n * pas, pas, 1.0, "ball" + std::to_string(n));
  prob.add_nonnegative(0, waveguides * pas);
}

double consumed(const BeamformingMatrix& w, const ScenarioConfig& config, int ehrs) {
  return config.phi * w.power() + ehrs * config.p_circuit;
}

// Solve; fall back to a restart without the caller's start, then report failure.
std::optional<QcqpResult> try_solve(const QcqpProblem& prob, const VectorXd& start, double tol) {
  SolveOptions so;
  so.tol = tol;
  so.start = start;
  try {
    return solve_qcqp(prob, so);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Infeasible) throw;
  }
  return std::nullopt;
}

VectorXd clamp_alpha(VectorXd a, int waveguides, int pas) {
  for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = std::max(a[i], 0.0);
  for (int n = 0; n < waveguides; ++n) {
    const double nrm = a.segment(n * pas, pas).norm();
    if (nrm > 1.0) a.segment(n * pas, pas) /= nrm;
  }
  return a;
}

// Fixed point of the block MM map for max alpha^T M alpha over the balls and
// the orthant: alpha_n <- [M alpha]_n^+ / ||[M alpha]_n^+||. Each pass is an
// ascent step, so the harvested power at fixed W only grows.
VectorXd harvest_fixed_point(const ChannelSet& ch, const BeamformingMatrix& w, const VectorXd& alpha_ref,
                             const ScenarioConfig& config) {
  const int nw = ch.waveguides;
  const int pas = ch.pas;
  MatrixXd m = MatrixXd::Zero(nw * pas, nw * pas);
  for (std::size_t q = 0; q < ch.h_ehr.size(); ++q) {
    for (int k = 0; k < w.users(); ++k)
      m += config.zeta[q] * gram_real(alpha_form(ch.h_ehr[q], ch.g_phase, w.w.col(k), pas));
  }
  VectorXd a = alpha_ref;
  for (int it = 0; it < 2000; ++it) {
    const VectorXd g = m * a;
    VectorXd next = VectorXd::Zero(a.size());
    for (int n = 0; n < nw; ++n) {
      const VectorXd gp = g.segment(n * pas, pas).cwiseMax(0.0);
      const double nrm = gp.norm();
      next.segment(n * pas, pas) = nrm > 0.0 ? VectorXd(gp / nrm) : VectorXd(a.segment(n * pas, pas));
    }
    const double change = (next - a).norm();
    a = next;
    if (change < 1e-13) break;
  }
  return a;
}

std::vector<double> ball_multipliers(const QcqpResult& r, int waveguides) {
  std::vector<double> out;
  for (int n = 0; n < waveguides && n < static_cast<int>(r.kkt.multipliers.quadratic.size()); ++n) {
    out.push_back(r.kkt.multipliers.quadratic[static_cast<std::size_t>(n)]);
  }
  return out;
}

}  // namespace

void rebalance(RadiationState& alpha, BeamformingMatrix& w, const ScenarioConfig& config) {
  const int nw = alpha.waveguides();
  const int pas = alpha.pas();
  VectorXd a = alpha.alpha();
  for (int n = 0; n < nw; ++n) {
    const double nrm = a.segment(n * pas, pas).norm();
    if (!(nrm > 0.0)) continue;
    a.segment(n * pas, pas) /= nrm;
    w.w.row(n) *= nrm;
  }
  alpha = RadiationState(a, nw, pas);
  const double pw = w.power();
  if (pw > 0.0) w.w *= std::sqrt(config.p_max / pw);
}

VectorXcd stacked_harvest(const EffectiveChannels& eff, const ScenarioConfig& config) {
  const auto q_count = static_cast<Eigen::Index>(eff.e.rows());
  const auto k_count = static_cast<Eigen::Index>(eff.e.cols());
  VectorXcd v(q_count * k_count);
  for (Eigen::Index q = 0; q < q_count; ++q) {
    const double sz = std::sqrt(config.zeta[static_cast<std::size_t>(q)]);
    for (Eigen::Index k = 0; k < k_count; ++k) v[q * k_count + k] = sz * eff.e(q, k);
  }
  return v;
}

PceAux pce_aux_update(const EffectiveChannels& eff, const BeamformingMatrix& w, const ScenarioConfig& config) {
  const VectorXcd v = stacked_harvest(eff, config);
  PceAux aux;
  const double nv = v.norm();
  if (!(nv > std::numeric_limits<double>::min())) {
    aux.u_e = VectorXcd::Zero(v.size());
    return aux;
  }
  aux.u_e = v / nv;
  aux.rho = nv / consumed(w, config, static_cast<int>(eff.d.size()));
  return aux;
}

double pce_surrogate(const EffectiveChannels& eff, const BeamformingMatrix& w, const PceAux& aux,
                     const ScenarioConfig& config) {
  const VectorXcd v = stacked_harvest(eff, config);
  const cplx uv = aux.u_e.dot(v);
  const double den = consumed(w, config, static_cast<int>(eff.d.size()));
  return 2.0 * (std::conj(aux.rho) * uv).real() - std::norm(aux.rho) * den;
}

SrAux sr_aux_update(const EffectiveChannels& eff, double noise) {
  const auto k_count = eff.s.rows();
  SrAux aux;
  aux.gamma.resize(k_count);
  aux.nu.resize(k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const double total = eff.s.row(k).squaredNorm() + noise;
    const double g = sinr(static_cast<int>(k), eff, noise);
    aux.gamma[k] = g;
    aux.nu[k] = std::sqrt(1.0 + g) * eff.s(k, k) / total;
  }
  return aux;
}

SurrogateValue sr_surrogate(const EffectiveChannels& eff, const SrAux& aux, double noise) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < eff.s.rows(); ++k) {
    const double g = aux.gamma[k];
    const double d = eff.s.row(k).squaredNorm() + noise;
    total += std::log1p(g) - g + 2.0 * (std::sqrt(1.0 + g) * std::conj(aux.nu[k]) * eff.s(k, k)).real() -
             std::norm(aux.nu[k]) * d;
  }
  SurrogateValue out;
  out.value = total / std::log(2.0);
  const double truth = sum_rate(eff, noise);
  out.tight_at_reference = std::abs(out.value - truth) <= 1e-9 * std::max(1.0, std::abs(truth));
  return out;
}

WStepResult pce_w_closed_form(const PceAux& aux, const EffectiveChannels& eff, const ScenarioConfig& config) {
  const int antennas = eff.c.empty() ? 0 : static_cast<int>(eff.c.front().size());
  const int users = eff.d.empty() ? 0 : static_cast<int>(aux.u_e.size() / static_cast<Eigen::Index>(eff.d.size()));
  WStepResult out;
  out.closed_form = true;
  out.w.w = MatrixXcd::Zero(antennas, users);
  if (std::abs(aux.rho) == 0.0) {
    out.degenerate = true;
    return out;
  }
  MatrixXcd b = MatrixXcd::Zero(antennas, users);
  for (std::size_t q = 0; q < eff.d.size(); ++q) {
    const double sz = std::sqrt(config.zeta[q]);
    for (int k = 0; k < users; ++k) {
      b.col(k) += aux.rho * sz * aux.u_e[static_cast<Eigen::Index>(q) * users + k] * eff.d[q];
    }
  }
  const double base = std::norm(aux.rho) * config.phi;
  const double bn = b.norm();
  double mu = 0.0;
  if (bn * bn > config.p_max * base * base) mu = bn / std::sqrt(config.p_max) - base;
  out.mu = mu;
  out.w.w = b / (base + mu);
  return out;
}

WStepResult pce_w_step(const PceAux& aux, const ChannelSet& channels, const RadiationState& alpha,
                       const BeamformingMatrix& w_ref, const ScenarioConfig& config,
                       const StepConstraints& cons, bool force_numeric) {
  const EffectiveChannels eff0 = effective_channels(channels, alpha);
  if (!force_numeric) {
    WStepResult cf = pce_w_closed_form(aux, eff0, config);
    if (cf.degenerate) return cf;
    const bool constrained = cons.sinr || (cons.harvest && config.p_min > 0.0);
    if (!constrained || meets_service(effective_channels(channels, alpha, cf.w), cf.w, config, cons)) return cf;
  }
  const int antennas = w_ref.antennas();
  const int users = w_ref.users();
  const int dim = 2 * antennas * users;
  const BeamRows rows = beam_rows(eff0, antennas, users);

  QcqpProblem prob(dim);
  VectorXd lin = VectorXd::Zero(dim);
  for (std::size_t q = 0; q < rows.e.size(); ++q) {
    const double sz = std::sqrt(config.zeta[q]);
    for (int k = 0; k < users; ++k) {
      const cplx wgt = std::conj(aux.rho * aux.u_e[static_cast<Eigen::Index>(q) * users + k]) * sz;
      lin += 2.0 * (wgt * rows.e[q][static_cast<std::size_t>(k)]).real();
    }
  }
  prob.set_objective(std::norm(aux.rho) * config.phi * MatrixXd::Identity(dim, dim), -lin);
  prob.add_ball(0, dim, std::sqrt(config.p_max), "power");
  const VectorXd xr = pack_beamformer(w_ref);
  add_service(prob, rows, xr, config, cons);

  WStepResult out;
  const auto r = try_solve(prob, xr, 1e-9);
  if (!r) {
    out.solved = false;
    out.w = w_ref;
    return out;
  }
  out.w = unpack_beamformer(r->x, antennas, users);
  out.kkt = r->kkt;
  out.mu = r->kkt.multipliers.quadratic.empty() ? 0.0 : r->kkt.multipliers.quadratic.front();
  return out;
}

AlphaStepResult pce_alpha_step(const PceAux& aux, const ChannelSet& channels, const BeamformingMatrix& w,
                               const VectorXd& alpha_ref, const ScenarioConfig& config,
                               const StepConstraints& cons) {
  const int nw = channels.waveguides;
  const int pas = channels.pas;
  const int dim = nw * pas;
  const BeamRows rows = alpha_rows(channels, w);
  const int users = w.users();

  AlphaStepResult out;
  if (std::abs(aux.rho) == 0.0) {
    out.alpha = alpha_ref;
    out.noop = true;
    return out;
  }
  VectorXd lin = VectorXd::Zero(dim);
  for (std::size_t q = 0; q < rows.e.size(); ++q) {
    const double sz = std::sqrt(config.zeta[q]);
    for (int k = 0; k < users; ++k) {
      const cplx wgt = std::conj(aux.rho * aux.u_e[static_cast<Eigen::Index>(q) * users + k]) * sz;
      lin += 2.0 * (wgt * rows.e[q][static_cast<std::size_t>(k)]).real();
    }
  }
  QcqpProblem prob(dim);
  prob.set_linear_objective(-lin);
  add_alpha_set(prob, nw, pas);
  add_service(prob, rows, alpha_ref, config, cons);

  const auto r = try_solve(prob, alpha_ref, 1e-9);
  if (!r) {
    out.alpha = alpha_ref;
    out.solved = false;
    return out;
  }
  out.alpha = clamp_alpha(r->x, nw, pas);
  out.kkt = r->kkt;
  out.ball_multipliers = ball_multipliers(*r, nw);
  out.objective = lin.dot(out.alpha);
  return out;
}

WStepResult sr_w_closed_form(const SrAux& aux, const EffectiveChannels& eff, const ScenarioConfig& config) {
  const auto antennas = static_cast<Eigen::Index>(eff.c.front().size());
  const auto users = static_cast<Eigen::Index>(aux.nu.size());
  MatrixXcd a = MatrixXcd::Zero(antennas, antennas);
  MatrixXcd b(antennas, users);
  for (Eigen::Index k = 0; k < users; ++k) {
    const VectorXcd& c = eff.c[static_cast<std::size_t>(k)];
    a += std::norm(aux.nu[k]) * c * c.adjoint();
    b.col(k) = std::sqrt(1.0 + aux.gamma[k]) * aux.nu[k] * c;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(a);
  const VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  const MatrixXcd proj = es.eigenvectors().adjoint() * b;
  const double lam_max = std::max(lam.maxCoeff(), std::numeric_limits<double>::min());
  const double floor_eig = 1e-14 * lam_max;
  // B lies in the range of A; its null-space component is rounding only.
  VectorXd weight(antennas);
  for (Eigen::Index i = 0; i < antennas; ++i) weight[i] = lam[i] > floor_eig ? proj.row(i).squaredNorm() : 0.0;
  const auto power = [&](double mu) {
    double t = 0.0;
    for (Eigen::Index i = 0; i < antennas; ++i) {
      if (weight[i] > 0.0) t += weight[i] / ((lam[i] + mu) * (lam[i] + mu));
    }
    return t;
  };
  double mu = 0.0;
  if (power(0.0) > config.p_max) {
    double lo = 0.0;
    double hi = b.norm() / std::sqrt(config.p_max);
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (power(mid) > config.p_max ? lo : hi) = mid;
    }
    mu = hi;
  }
  VectorXd inv(antennas);
  for (Eigen::Index i = 0; i < antennas; ++i) inv[i] = weight[i] > 0.0 ? 1.0 / (lam[i] + mu) : 0.0;
  WStepResult out;
  out.closed_form = true;
  out.mu = mu;
  out.w.w = es.eigenvectors() * inv.asDiagonal() * proj;
  return out;
}

WStepResult sr_w_step(const SrAux& aux, const ChannelSet& channels, const RadiationState& alpha,
                      const BeamformingMatrix& w_ref, const ScenarioConfig& config, const StepConstraints& cons,
                      bool force_numeric) {
  const int antennas = w_ref.antennas();
  const int users = w_ref.users();
  const int dim = 2 * antennas * users;
  const EffectiveChannels eff0 = effective_channels(channels, alpha);
  if (!force_numeric) {
    WStepResult cf = sr_w_closed_form(aux, eff0, config);
    if (meets_service(effective_channels(channels, alpha, cf.w), cf.w, config, cons)) return cf;
  }
  const BeamRows rows = beam_rows(eff0, antennas, users);

  MatrixXd p = MatrixXd::Zero(dim, dim);
  VectorXd lin = VectorXd::Zero(dim);
  for (int k = 0; k < users; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    for (const auto& row : rows.s[ku]) p += std::norm(aux.nu[k]) * real_gram(row);
    lin += 2.0 * (std::sqrt(1.0 + aux.gamma[k]) * std::conj(aux.nu[k]) * rows.s[ku][ku]).real();
  }
  QcqpProblem prob(dim);
  prob.set_objective(p, -lin);
  prob.add_ball(0, dim, std::sqrt(config.p_max), "power");
  const VectorXd xr = pack_beamformer(w_ref);
  if (cons.pce_floor > 0.0) add_pce_floor_w(prob, rows, xr, config, cons.pce_floor);
  add_service(prob, rows, xr, config, cons);

  WStepResult out;
  const auto r = try_solve(prob, xr, 1e-9);
  if (!r) {
    out.solved = false;
    out.w = w_ref;
    return out;
  }
  out.w = unpack_beamformer(r->x, antennas, users);
  out.kkt = r->kkt;
  out.mu = r->kkt.multipliers.quadratic.empty() ? 0.0 : r->kkt.multipliers.quadratic.front();
  return out;
}

void sr_alpha_quadratic(const SrAux& aux, const ChannelSet& channels, const BeamformingMatrix& w,
                        MatrixXd& b_mat, VectorXd& b_vec) {
  const BeamRows rows = alpha_rows(channels, w);
  const int dim = channels.waveguides * channels.pas;
  b_mat = MatrixXd::Zero(dim, dim);
  b_vec = VectorXd::Zero(dim);
  for (int k = 0; k < w.users(); ++k) {
    const auto ku = static_cast<std::size_t>(k);
    for (const auto& row : rows.s[ku]) b_mat += std::norm(aux.nu[k]) * gram_real(row);
    b_vec += (std::sqrt(1.0 + aux.gamma[k]) * std::conj(aux.nu[k]) * rows.s[ku][ku]).real();
  }
}

AlphaStepResult sr_alpha_step(const SrAux& aux, const ChannelSet& channels, const BeamformingMatrix& w,
                              const VectorXd& alpha_ref, const ScenarioConfig& config,
                              const StepConstraints& cons) {
  const int nw = channels.waveguides;
  const int pas = channels.pas;
  const int dim = nw * pas;
  const BeamRows rows = alpha_rows(channels, w);
  MatrixXd bm;
  VectorXd bv;
  sr_alpha_quadratic(aux, channels, w, bm, bv);
  AlphaStepResult out;
  if (bm.cwiseAbs().maxCoeff() == 0.0 && bv.cwiseAbs().maxCoeff() == 0.0) {
    out.alpha = alpha_ref;
    out.noop = true;
    return out;
  }

  QcqpProblem prob(dim);
  prob.set_objective(bm, -2.0 * bv);
  add_alpha_set(prob, nw, pas);
  const double den = consumed(w, config, static_cast<int>(channels.h_ehr.size()));
  if (cons.pce_floor > 0.0) add_pce_floor_alpha(prob, rows, alpha_ref, config, cons.pce_floor, den);
  add_service(prob, rows, alpha_ref, config, cons);

  const auto r = try_solve(prob, alpha_ref, 1e-9);
  if (!r) {
    out.alpha = alpha_ref;
    out.solved = false;
    return out;
  }
  out.alpha = clamp_alpha(r->x, nw, pas);
  out.kkt = r->kkt;
  out.ball_multipliers = ball_multipliers(*r, nw);
  out.objective = out.alpha.dot(bm * out.alpha) - 2.0 * bv.dot(out.alpha);

  // Closed form on the support when no service floor binds:
  // (B + sum_n lambda_n P_n)_SS alpha_S = b_S.
  const RadiationState st(out.alpha, nw, pas);
  const BeamformingMatrix& wr = w;
  const EffectiveChannels eff = effective_channels(channels, st, wr);
  bool inactive = true;
  if (cons.sinr) {
    const double g = config.sinr_requirement();
    for (int k = 0; k < w.users(); ++k) inactive = inactive && sinr(k, eff, config.noise_power) > g * (1 + kInactiveSlack);
  }
  if (cons.harvest && config.p_min > 0.0) {
    for (std::size_t q = 0; q < channels.h_ehr.size(); ++q) {
      inactive = inactive && harvested_power(static_cast<int>(q), eff, config.zeta[q]) >
                                 config.p_min * (1 + kInactiveSlack);
    }
  }
  if (cons.pce_floor > 0.0) inactive = inactive && pce(eff, w, config) > cons.pce_floor * (1 + kInactiveSlack);
  if (!inactive) return out;

  const double amax = out.alpha.maxCoeff();
  std::vector<int> support;
  for (int i = 0; i < dim; ++i) {
    if (out.alpha[i] > 1e-6 * amax) support.push_back(i);
  }
  if (support.empty()) return out;
  const auto s = static_cast<Eigen::Index>(support.size());
  MatrixXd m(s, s);
  VectorXd rhs(s);
  for (Eigen::Index a = 0; a < s; ++a) {
    const int ia = support[static_cast<std::size_t>(a)];
    rhs[a] = bv[ia];
    for (Eigen::Index b = 0; b < s; ++b) m(a, b) = bm(ia, support[static_cast<std::size_t>(b)]);
    m(a, a) += out.ball_multipliers[static_cast<std::size_t>(ia / pas)];
  }
  Eigen::FullPivLU<MatrixXd> lu(m);
  if (lu.rank() < s) {
    m += 1e-12 * std::max(1.0, m.diagonal().cwiseAbs().maxCoeff()) * MatrixXd::Identity(s, s);
    lu.compute(m);
    out.ridge_used = true;
    if (lu.rank() < s) throw Error(ErrorCode::SingularSystem, "closed-form alpha system is singular");
  }
  const VectorXd sol = lu.solve(rhs);
  out.closed_form_alpha = VectorXd::Zero(dim);
  for (Eigen::Index a = 0; a < s; ++a) out.closed_form_alpha[support[static_cast<std::size_t>(a)]] = sol[a];
  out.closed_form_objective =
      out.closed_form_alpha.dot(bm * out.closed_form_alpha) - 2.0 * bv.dot(out.closed_form_alpha);
  out.closed_form_applicable = true;
  return out;
}

const ChannelSet& ChannelCache::get(const Placement& p) {
  auto it = cache_.find(p);
  if (it == cache_.end()) it = cache_.emplace(p, build_channel_set(p, layout_, config_)).first;
  return it->second;
}

double objective_value(Objective objective, const EffectiveChannels& eff, const BeamformingMatrix& w,
                       const ScenarioConfig& config) {
  return objective == Objective::Pce ? pce(eff, w, config) : sum_rate(eff, config.noise_power);
}

bool meets_service(const EffectiveChannels& eff, const BeamformingMatrix& w, const ScenarioConfig& config,
                   const StepConstraints& cons) {
  if (w.power() > config.p_max * (1.0 + kServiceSlack)) return false;
  if (cons.sinr) {
    const double g = config.sinr_requirement() * (1.0 - kServiceSlack);
    for (int k = 0; k < static_cast<int>(eff.c.size()); ++k) {
      if (sinr(k, eff, config.noise_power) < g) return false;
    }
  }
  if (cons.harvest && config.p_min > 0.0) {
    for (std::size_t q = 0; q < eff.d.size(); ++q) {
      if (harvested_power(static_cast<int>(q), eff, config.zeta[q]) < config.p_min * (1.0 - kServiceSlack)) {
        return false;
      }
    }
  }
  if (cons.pce_floor > 0.0 && pce(eff, w, config) < cons.pce_floor * (1.0 - kServiceSlack)) return false;
  return true;
}

Placement pce_x_select(ChannelCache& cache, const BeamformingMatrix& w, const RadiationState& alpha,
                       const Placement& current, const ScenarioConfig& config, const StepConstraints& cons,
                       Objective objective, std::size_t exhaustive_limit) {
  const PositionGrid grid = build_position_grid(config);
  const PlacementScore score = [&](const Placement& p) -> std::optional<double> {
    const EffectiveChannels eff = effective_channels(cache.get(p), alpha, w);
    if (!meets_service(eff, w, config, cons)) return std::nullopt;
    return objective_value(objective, eff, w, config);
  };
  const auto found = search_placements(config, grid, current, score, exhaustive_limit);
  if (!found.found) return current;
  const auto here = score(current);
  if (here && *here >= found.score) return current;
  return found.best;
}

BeamformingMatrix initial_beamformer(const ChannelSet& channels, const RadiationState& alpha,
                                     const ScenarioConfig& config) {
  const EffectiveChannels eff = effective_channels(channels, alpha);
  const int antennas = channels.waveguides;
  const int users = static_cast<int>(channels.h_idr.size());
  const int dim = 2 * antennas * users;
  const BeamRows rows = beam_rows(eff, antennas, users);
  QcqpProblem prob(dim);
  prob.set_objective(MatrixXd::Identity(dim, dim), VectorXd::Zero(dim));
  prob.add_ball(0, dim, std::sqrt(config.p_max), "power");
  const VectorXd zero = VectorXd::Zero(dim);
  StepConstraints sinr_only;
  sinr_only.harvest = false;
  add_service(prob, rows, zero, config, sinr_only);
  const QcqpResult r = solve_qcqp(prob);
  BeamformingMatrix w = unpack_beamformer(r.x, antennas, users);
  const double pw = w.power();
  if (!(pw > 0.0)) throw Error(ErrorCode::Infeasible, "zero initial beamformer");
  w.w *= std::sqrt(config.p_max / pw);
  return w;
}

MultiUserResult solve_multi_user(const ScenarioConfig& config, const UserLayout& layout,
                                 const MultiUserOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  config.validate();
  const PositionGrid grid = build_position_grid(config);
  const int nw = config.num_waveguides;
  const int pas = config.pas_per_waveguide;
  const StepConstraints& cons = options.constraints;
  const Objective obj_kind = options.objective;

  ChannelCache cache(layout, config);
  Placement x = options.start_placement ? *options.start_placement : initial_placement(config, grid);
  RadiationState alpha = options.start_alpha ? RadiationState(*options.start_alpha, nw, pas)
                                             : RadiationState::equal_power(nw, pas);
  const ChannelSet* ch = &cache.get(x);
  BeamformingMatrix w = options.start_w ? *options.start_w : initial_beamformer(*ch, alpha, config);
  EffectiveChannels eff = effective_channels(*ch, alpha, w);

  MultiUserResult out;
  SolveReport& rep = out.report;
  if (!meets_service(eff, w, config, cons)) {
    rep.feasible = false;
    rep.status = "infeasible start";
  }
  double value = objective_value(obj_kind, eff, w, config);
  rep.objective.push_back(value);
  rep.p0.push_back(w.power());

  const auto accept = [&](const ChannelSet& c, const RadiationState& a, const BeamformingMatrix& cand,
                          EffectiveChannels& cand_eff) {
    cand_eff = effective_channels(c, a, cand);
    const bool ok = !rep.feasible || meets_service(cand_eff, cand, config, cons);
    return ok && objective_value(obj_kind, cand_eff, cand, config) >= value;
  };

  const auto gain = [](double now, double before) {
    return (now - before) / std::max(std::abs(before), std::numeric_limits<double>::min());
  };
  const auto into_budget = [&](BeamformingMatrix cand) {
    const double pw = cand.power();
    if (pw > config.p_max) cand.w *= std::sqrt(config.p_max / pw);
    return cand;
  };
  // Safeguarded extrapolation: keeps the point only if it strictly improves.
  const auto try_point = [&](const RadiationState& a, const BeamformingMatrix& cand) {
    EffectiveChannels ce;
    if (!accept(*ch, a, cand, ce)) return false;
    const double v = objective_value(obj_kind, ce, cand, config);
    if (!(v > value)) return false;
    alpha = a;
    w = cand;
    eff = std::move(ce);
    value = v;
    return true;
  };
  constexpr double kMaxTau = 64.0;
  double tau_round = 1.0;

  for (int it = 1; it <= config.max_outer_iters; ++it) {
    double worst_kkt = 0.0;
    EffectiveChannels cand_eff;
    const PceAux pce_aux0 = pce_aux_update(eff, w, config);
    const SrAux sr_aux0 = sr_aux_update(eff, config.noise_power);
    const double tight = obj_kind == Objective::Pce
                             ? std::abs(pce_surrogate(eff, w, pce_aux0, config) - value)
                             : std::abs(sr_surrogate(eff, sr_aux0, config.noise_power).value - value);
    const BeamformingMatrix w_start = w;
    const RadiationState alpha_start = alpha;
    const Placement x_start = x;

    double tau = 1.0;
    for (int inner = 0; options.update_w && inner < options.inner_iters; ++inner) {
      WStepResult ws;
      if (obj_kind == Objective::Pce) {
        ws = pce_w_step(pce_aux_update(eff, w, config), *ch, alpha, w, config, cons);
      } else {
        ws = sr_w_step(sr_aux_update(eff, config.noise_power), *ch, alpha, w, config, cons);
      }
      worst_kkt = std::max(worst_kkt, ws.kkt.max_residual());
      if (!ws.solved || ws.degenerate || !accept(*ch, alpha, ws.w, cand_eff)) break;
      const double before = value;
      const BeamformingMatrix w_old = w;
      w = ws.w;
      eff = cand_eff;
      value = objective_value(obj_kind, eff, w, config);
      if (options.extrapolate) {
        BeamformingMatrix we;
        we.w = w.w + tau * (w.w - w_old.w);
        tau = try_point(alpha, into_budget(we)) ? std::min(2.0 * tau, kMaxTau) : 1.0;
      }
      if (gain(value, before) < options.inner_tol) break;
    }

    if (options.update_x) {
      const Placement nx = pce_x_select(cache, w, alpha, x, config, cons, obj_kind, options.exhaustive_limit);
      if (nx != x) {
        x = nx;
        ch = &cache.get(x);
        eff = effective_channels(*ch, alpha, w);
        value = objective_value(obj_kind, eff, w, config);
      }
    }

    tau = 1.0;
    for (int inner = 0; options.update_alpha && inner < options.inner_iters; ++inner) {
      AlphaStepResult as;
      if (obj_kind == Objective::Pce) {
        as = pce_alpha_step(pce_aux_update(eff, w, config), *ch, w, alpha.alpha(), config, cons);
      } else {
        as = sr_alpha_step(sr_aux_update(eff, config.noise_power), *ch, w, alpha.alpha(), config, cons);
      }
      worst_kkt = std::max(worst_kkt, as.kkt.max_residual());
      if (!as.solved || as.noop) break;
      const RadiationState cand(as.alpha, nw, pas);
      if (!accept(*ch, cand, w, cand_eff)) break;
      const double before = value;
      const VectorXd a_old = alpha.alpha();
      alpha = cand;
      eff = cand_eff;
      value = objective_value(obj_kind, eff, w, config);
      if (options.rebalance) {
        RadiationState ra = alpha;
        BeamformingMatrix rw = w;
        rebalance(ra, rw, config);
        try_point(ra, rw);
      }
      if (options.extrapolate) {
        const VectorXd ae = clamp_alpha(alpha.alpha() + tau * (alpha.alpha() - a_old), nw, pas);
        tau = try_point(RadiationState(ae, nw, pas), w) ? std::min(2.0 * tau, kMaxTau) : 1.0;
      }
      if (gain(value, before) < options.inner_tol) break;
    }

    if (options.update_alpha && obj_kind == Objective::Pce) {
      // At fixed W the PCE denominator does not move with alpha; jump to the
      // MM fixed point, backing off towards the current alpha if a floor fails.
      const VectorXd a_cur = alpha.alpha();
      const VectorXd a_fix = harvest_fixed_point(*ch, w, a_cur, config);
      for (double t = 1.0; t > 1.0 / 64.0; t *= 0.5) {
        if (try_point(RadiationState(clamp_alpha(a_cur + t * (a_fix - a_cur), nw, pas), nw, pas), w)) break;
      }
    }

    if (options.extrapolate && x == x_start) {
      // Line search on tau along the round's displacement: expand while the
      // extrapolated point (possibly after one restoring W step) strictly
      // improves, otherwise backtrack towards tau = 1.
      const BeamformingMatrix w_base = w;
      const VectorXd a_base = alpha.alpha();
      const MatrixXcd dw = w.w - w_start.w;
      const VectorXd da = alpha.alpha() - alpha_start.alpha();
      const auto attempt = [&](double t) {
        BeamformingMatrix we;
        we.w = w_base.w + t * dw;
        const RadiationState as(clamp_alpha(a_base + t * da, nw, pas), nw, pas);
        const BeamformingMatrix wb = into_budget(we);
        if (try_point(as, wb)) return true;
        if (!options.update_w) return false;
        const EffectiveChannels ee = effective_channels(*ch, as, wb);
        const WStepResult ws = obj_kind == Objective::Pce
                                   ? pce_w_step(pce_aux_update(ee, wb, config), *ch, as, wb, config, cons)
                                   : sr_w_step(sr_aux_update(ee, config.noise_power), *ch, as, wb, config, cons);
        return ws.solved && !ws.degenerate && try_point(as, ws.w);
      };
      double t = tau_round;
      bool moved = attempt(t);
      if (moved) {
        while (t < kMaxTau && attempt(2.0 * t)) t *= 2.0;
      } else {
        while (!moved && t > 1.0) {
          t *= 0.5;
          moved = attempt(t);
        }
      }
      tau_round = moved ? t : 1.0;
    }

    // Round-start surrogate at the round-end point: a lower bound on value.
    const double surrogate = obj_kind == Objective::Pce
                                 ? pce_surrogate(eff, w, pce_aux0, config)
                                 : sr_surrogate(eff, sr_aux0, config.noise_power).value;
    const double prev = rep.objective.back();
    const double change = std::abs(gain(value, prev));
    rep.objective.push_back(value);
    rep.p0.push_back(w.power());
    rep.surrogate.push_back(surrogate);
    rep.tightness.push_back(tight);
    rep.residual.push_back(change);
    rep.kkt.push_back(worst_kkt);
    rep.iterations = it;
    if (change < config.solver_tol) {
      rep.converged = true;
      break;
    }
  }
  if (!rep.converged && rep.status == "ok") rep.status = "max iterations";

  out.w = w;
  out.placement = x;
  out.alpha = alpha;
  out.channels = *ch;
  out.metrics = evaluate_metrics(eff, w, config);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace passwpt
