#include "passwpt/radiation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "passwpt/channel.hpp"
#include "passwpt/scenario.hpp"

namespace passwpt {

RadiationState::RadiationState(VectorXd alpha, int waveguides, int pas)
    : alpha_(std::move(alpha)), waveguides_(waveguides), pas_(pas) {
  if (waveguides_ < 1 || pas_ < 1 || alpha_.size() != waveguides_ * pas_) {
    throw Error(ErrorCode::DimensionMismatch, "alpha length must equal N*L");
  }
  for (Eigen::Index i = 0; i < alpha_.size(); ++i) {
    if (!std::isfinite(alpha_[i])) throw Error(ErrorCode::InfeasibleAlpha, "non-finite alpha entry");
    if (alpha_[i] < 0.0) {
      // Roundoff from the interior-point iterates.
      if (alpha_[i] < -1e-12) throw Error(ErrorCode::InfeasibleAlpha, "negative alpha entry");
      alpha_[i] = 0.0;
    }
  }
  for (int n = 0; n < waveguides_; ++n) {
    if (alpha_.segment(n * pas_, pas_).squaredNorm() > 1.0 + 1e-9) {
      throw Error(ErrorCode::InfeasibleAlpha,
                  "waveguide " + std::to_string(n) + " radiates more than it is fed");
    }
  }
}

RadiationState RadiationState::equal_power(int waveguides, int pas) {
  return RadiationState(VectorXd::Constant(waveguides * pas, std::sqrt(1.0 / pas)), waveguides, pas);
}

MatrixXd RadiationState::lambda() const {
  MatrixXd out = MatrixXd::Zero(waveguides_ * pas_, waveguides_);
  for (int n = 0; n < waveguides_; ++n) out.block(n * pas_, n, pas_, 1) = alpha_.segment(n * pas_, pas_);
  return out;
}

RadiationState assemble_lambda(const VectorXd& alpha, int waveguides, int pas) {
  return RadiationState(alpha, waveguides, pas);
}

VectorXd coupled_mode_alpha(const std::vector<int>& activation, const std::vector<double>& coupling,
                            double d_y_max) {
  if (activation.size() != coupling.size()) {
    throw Error(ErrorCode::DimensionMismatch, "activation and coupling lengths differ");
  }
  VectorXd alpha(static_cast<Eigen::Index>(activation.size()));
  double remaining = 1.0;  // prod_{i<l} sqrt(1 - a_i sin^2(eps_i d))
  for (std::size_t l = 0; l < activation.size(); ++l) {
    const double a = activation[l] ? 1.0 : 0.0;
    const double s = std::sin(coupling[l] * d_y_max);
    alpha[static_cast<Eigen::Index>(l)] = a * std::abs(s) * remaining;
    remaining *= std::sqrt(std::max(0.0, 1.0 - a * s * s));
  }
  return alpha;
}

MatrixXd gram_real(const VectorXcd& row) {
  const VectorXd re = row.real();
  const VectorXd im = row.imag();
  return re * re.transpose() + im * im.transpose();
}

namespace {

double lower_margin(const QuadraticLowerBound& c, const VectorXd& alpha) {
  const double v = alpha.dot(c.m * alpha);
  if (c.threshold <= 0.0) return v >= 0.0 ? 1.0 : -1.0;
  return v / c.threshold - 1.0;
}

}  // namespace

double AlphaFeasibleRegion::min_margin(const VectorXd& alpha) const {
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& c : lower) margin = std::min(margin, lower_margin(c, alpha));
  const double r2 = ball_radius * ball_radius;
  for (int n = 0; n < waveguides; ++n) {
    margin = std::min(margin, 1.0 - alpha.segment(n * pas, pas).squaredNorm() / r2);
  }
  if (nonnegative) margin = std::min(margin, alpha.minCoeff());
  return margin;
}

bool AlphaFeasibleRegion::contains(const VectorXd& alpha, double rel_tol) const {
  if (alpha.size() != waveguides * pas) return false;
  return min_margin(alpha) >= -rel_tol;
}

AlphaFeasibleRegion feasible_region_two_user(const VectorXcd& phi_i, const VectorXcd& phi_e,
                                            const ScenarioConfig& config, int waveguides, int pas,
                                            bool check_nonempty) {
  if (phi_i.size() != waveguides * pas || phi_e.size() != waveguides * pas) {
    throw Error(ErrorCode::DimensionMismatch, "coefficient vectors must have N*L entries");
  }
  AlphaFeasibleRegion r;
  r.waveguides = waveguides;
  r.pas = pas;
  r.gamma = config.sinr_requirement();
  r.noise = config.noise_power;
  r.sinr_rows = {{phi_i}};
  r.harvest_rows = {{phi_e}};
  r.harvest_floor = {config.p_min / config.zeta.front()};
  r.lower.push_back({gram_real(phi_i), r.gamma * r.noise, "snr"});
  r.lower.push_back({gram_real(phi_e), r.harvest_floor.front(), "harvest"});
  if (check_nonempty) find_region_member(r);
  return r;
}

AlphaFeasibleRegion feasible_region_multi(const ChannelSet& channels, const BeamformingMatrix& w,
                                          const ScenarioConfig& config, bool check_nonempty) {
  const int N = channels.waveguides;
  const int L = channels.pas;
  const int K = static_cast<int>(channels.h_idr.size());
  const int Q = static_cast<int>(channels.h_ehr.size());
  if (w.antennas() != N || w.users() != K) {
    throw Error(ErrorCode::DimensionMismatch, "beamformer must be N x K");
  }
  AlphaFeasibleRegion r;
  r.waveguides = N;
  r.pas = L;
  r.gamma = config.sinr_requirement();
  r.noise = config.noise_power;
  r.sinr_rows.resize(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    MatrixXd m = MatrixXd::Zero(N * L, N * L);
    for (int j = 0; j < K; ++j) {
      VectorXcd row = alpha_form(channels.h_idr[k], channels.g_phase, w.w.col(j), L);
      m += (j == k ? 1.0 : -r.gamma) * gram_real(row);
      r.sinr_rows[static_cast<std::size_t>(k)].push_back(std::move(row));
    }
    r.lower.push_back({std::move(m), r.gamma * r.noise, "sinr_" + std::to_string(k)});
  }
  r.harvest_rows.resize(static_cast<std::size_t>(Q));
  for (int q = 0; q < Q; ++q) {
    MatrixXd m = MatrixXd::Zero(N * L, N * L);
    for (int k = 0; k < K; ++k) {
      VectorXcd row = alpha_form(channels.h_ehr[q], channels.g_phase, w.w.col(k), L);
      m += gram_real(row);
      r.harvest_rows[static_cast<std::size_t>(q)].push_back(std::move(row));
    }
    const double floor = config.p_min / config.zeta[static_cast<std::size_t>(q)];
    r.harvest_floor.push_back(floor);
    r.lower.push_back({std::move(m), floor, "harvest_" + std::to_string(q)});
  }
  if (check_nonempty) find_region_member(r);
  return r;
}

namespace {

// Clip to the orthant and scale every waveguide block onto the unit sphere.
VectorXd normalize_blocks(VectorXd a, int N, int L) {
  a = a.cwiseMax(0.0);
  for (int n = 0; n < N; ++n) {
    const double nrm = a.segment(n * L, L).norm();
    if (nrm > 1e-300) {
      a.segment(n * L, L) /= nrm;
    } else {
      a.segment(n * L, L).setConstant(std::sqrt(1.0 / L));
    }
  }
  return a;
}

}  // namespace

VectorXd find_region_member(const AlphaFeasibleRegion& region) {
  const int N = region.waveguides;
  const int L = region.pas;
  std::vector<VectorXd> scan;
  scan.push_back(VectorXd::Constant(N * L, std::sqrt(1.0 / L)));
  for (const auto& c : region.lower) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(c.m);
    const VectorXd v = es.eigenvectors().col(N * L - 1);
    scan.push_back(normalize_blocks(v, N, L));
    scan.push_back(normalize_blocks(-v, N, L));
    scan.push_back(normalize_blocks(v.cwiseAbs(), N, L));
  }
  for (std::size_t k = 0; k < region.sinr_rows.size(); ++k) {
    const auto& rows = region.sinr_rows[k];
    if (!rows.empty()) scan.push_back(normalize_blocks(rows[std::min(k, rows.size() - 1)].cwiseAbs(), N, L));
  }
  std::mt19937_64 rng(0x5eed5eedULL);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int s = 0; s < 256; ++s) {
    VectorXd a(N * L);
    for (int i = 0; i < N * L; ++i) a[i] = u(rng);
    scan.push_back(normalize_blocks(a, N, L));
  }
  double best = -std::numeric_limits<double>::infinity();
  VectorXd best_alpha;
  for (const auto& a : scan) {
    if (region.min_margin(a) < -1e-9) continue;
    // Rank members by their service slack; ball and orthant hold by construction.
    double m = std::numeric_limits<double>::infinity();
    for (const auto& c : region.lower) m = std::min(m, lower_margin(c, a));
    if (m > best) {
      best = m;
      best_alpha = a;
    }
  }
  if (best_alpha.size() == 0) throw Error(ErrorCode::EmptyRegion, "no scanned alpha satisfies the region");
  return best_alpha;
}

}  // namespace passwpt
