#include "passwpt/channel.hpp"

#include <cmath>

namespace passwpt {

std::vector<Point3> pa_positions(const Placement& placement, const ScenarioConfig& config) {
  std::vector<Point3> out;
  out.reserve(static_cast<std::size_t>(placement.waveguides() * placement.pas()));
  for (int n = 0; n < placement.waveguides(); ++n) {
    for (double x : placement.x[static_cast<std::size_t>(n)]) {
      out.push_back({x, config.waveguide_y[static_cast<std::size_t>(n)], config.waveguide_height});
    }
  }
  return out;
}

VectorXcd spherical_channel(const std::vector<Point3>& antennas, const Point3& user,
                            const ScenarioConfig& config) {
  const double eta = config.eta();
  const double kappa = config.kappa();
  VectorXcd h(static_cast<Eigen::Index>(antennas.size()));
  for (std::size_t i = 0; i < antennas.size(); ++i) {
    const double dist = distance(antennas[i], user);
    h[static_cast<Eigen::Index>(i)] = std::polar(eta / dist, -kappa * dist);
  }
  return h;
}

VectorXcd idr_channel(const Placement& placement, const Point3& idr, const ScenarioConfig& config) {
  return spherical_channel(pa_positions(placement, config), idr, config);
}

VectorXcd ehr_channel(const Placement& placement, const Point3& ehr, const ScenarioConfig& config) {
  return spherical_channel(pa_positions(placement, config), ehr, config);
}

VectorXcd waveguide_phase(const Placement& placement, const ScenarioConfig& config) {
  const double lg = config.guided_wavelength();
  VectorXcd g(placement.waveguides() * placement.pas());
  Eigen::Index i = 0;
  for (const auto& row : placement.x) {
    for (double x : row) {
      // Reduce the cycle count first so x = m*lambda_g lands on phase 0.
      const double cycles = x / lg;
      const double frac = cycles - std::round(cycles);
      g[i++] = std::polar(1.0, -2.0 * kPi * frac);
    }
  }
  return g;
}

ChannelSet build_channel_set(const Placement& placement, const UserLayout& layout,
                             const ScenarioConfig& config) {
  ChannelSet ch;
  ch.waveguides = placement.waveguides();
  ch.pas = placement.pas();
  const auto antennas = pa_positions(placement, config);
  for (const auto& p : layout.idr_positions) ch.h_idr.push_back(spherical_channel(antennas, p, config));
  for (const auto& p : layout.ehr_positions) ch.h_ehr.push_back(spherical_channel(antennas, p, config));
  ch.g_phase = waveguide_phase(placement, config);
  return ch;
}

namespace {

VectorXcd collapse(const VectorXcd& h, const VectorXcd& g, const VectorXd& alpha, int N, int L) {
  // Returns (h^H G Lambda)^H.
  VectorXcd c(N);
  for (int n = 0; n < N; ++n) {
    cplx acc{0.0, 0.0};
    for (int l = 0; l < L; ++l) {
      const int i = n * L + l;
      acc += h[i] * g[i] * alpha[i];
    }
    c[n] = std::conj(acc);
  }
  return c;
}

}  // namespace

EffectiveChannels effective_channels(const ChannelSet& ch, const RadiationState& alpha) {
  const int N = ch.waveguides;
  const int L = ch.pas;
  if (alpha.waveguides() != N || alpha.pas() != L || ch.g_phase.size() != N * L) {
    throw Error(ErrorCode::DimensionMismatch, "radiation state does not match the channel set");
  }
  EffectiveChannels eff;
  for (const auto& h : ch.h_idr) {
    if (h.size() != N * L) throw Error(ErrorCode::DimensionMismatch, "IDR channel length");
    eff.c.push_back(collapse(h, ch.g_phase, alpha.alpha(), N, L));
  }
  for (const auto& h : ch.h_ehr) {
    if (h.size() != N * L) throw Error(ErrorCode::DimensionMismatch, "EHR channel length");
    eff.d.push_back(collapse(h, ch.g_phase, alpha.alpha(), N, L));
  }
  return eff;
}

EffectiveChannels effective_channels(const ChannelSet& ch, const RadiationState& alpha,
                                     const BeamformingMatrix& w) {
  EffectiveChannels eff = effective_channels(ch, alpha);
  if (w.antennas() != ch.waveguides) {
    throw Error(ErrorCode::DimensionMismatch, "beamformer rows must equal the waveguide count");
  }
  const int K = static_cast<int>(eff.c.size());
  const int Q = static_cast<int>(eff.d.size());
  eff.s.resize(K, w.users());
  eff.e.resize(Q, w.users());
  for (int k = 0; k < K; ++k) {
    for (int j = 0; j < w.users(); ++j) eff.s(k, j) = eff.c[k].dot(w.w.col(j));
  }
  for (int q = 0; q < Q; ++q) {
    for (int j = 0; j < w.users(); ++j) eff.e(q, j) = eff.d[q].dot(w.w.col(j));
  }
  return eff;
}

VectorXcd alpha_form(const VectorXcd& channel_row, const VectorXcd& g_phase,
                     const VectorXcd& w_column, int pas) {
  VectorXcd row(channel_row.size());
  for (Eigen::Index i = 0; i < channel_row.size(); ++i) {
    row[i] = channel_row[i] * g_phase[i] * w_column[i / pas];
  }
  return row;
}

}  // namespace passwpt
