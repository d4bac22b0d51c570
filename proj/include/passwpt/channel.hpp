#pragma once

// Spherical-wave LoS channels, the in-waveguide phase response and the
// effective per-waveguide channels every solver works with.
//
// Index convention: PA (n, l) maps to flat index n*L + l. Channel vectors
// hold the row entries of h^H, i.e. entry i is eta*exp(-j*kappa*d_i)/d_i, so
// h_k^H G Lambda w_j = sum_i h[i] g[i] alpha[i] w_j[n(i)].

#include <vector>

#include "passwpt/radiation.hpp"
#include "passwpt/scenario.hpp"
#include "passwpt/types.hpp"

namespace passwpt {

struct ChannelSet {
  int waveguides = 0;  // N
  int pas = 0;         // L
  std::vector<VectorXcd> h_idr;  // K rows of h_k^H, length N*L
  std::vector<VectorXcd> h_ehr;  // Q rows of h'_q^H, length N*L
  VectorXcd g_phase;             // diagonal of G, unit modulus
};

struct EffectiveChannels {
  std::vector<VectorXcd> c;  // c_k = (h_k^H G Lambda)^H, length N
  std::vector<VectorXcd> d;  // d_q = (h'_q^H G Lambda)^H, length N
  MatrixXcd s;               // s(k, j) = c_k^H w_j
  MatrixXcd e;               // e(q, k) = d_q^H w_k
};

// PA coordinates in the flat n*L + l order.
std::vector<Point3> pa_positions(const Placement& placement, const ScenarioConfig& config);

// eta*exp(-j*kappa*d)/d for every antenna.
VectorXcd spherical_channel(const std::vector<Point3>& antennas, const Point3& user,
                            const ScenarioConfig& config);

VectorXcd idr_channel(const Placement& placement, const Point3& idr, const ScenarioConfig& config);
VectorXcd ehr_channel(const Placement& placement, const Point3& ehr, const ScenarioConfig& config);

// exp(-j*2*pi*x/lambda_g) per PA. Phase only; alpha lives in Lambda.
VectorXcd waveguide_phase(const Placement& placement, const ScenarioConfig& config);

ChannelSet build_channel_set(const Placement& placement, const UserLayout& layout,
                             const ScenarioConfig& config);

// Throws DimensionMismatch when alpha, W and the channel set disagree.
EffectiveChannels effective_channels(const ChannelSet& ch, const RadiationState& alpha,
                                     const BeamformingMatrix& w);

// Effective channels without a beamformer (s and e left empty).
EffectiveChannels effective_channels(const ChannelSet& ch, const RadiationState& alpha);

// Coefficient rows of the linear forms in alpha:
//   s_{k,j}(alpha) = sum_i sinr_row(k,j)[i] alpha[i]
//   e_{q,k}(alpha) = sum_i harvest_row(q,k)[i] alpha[i]
// i.e. the coefficient vectors of h^H beta(w_j) with beta = diag(G (.) lift(w_j)).
VectorXcd alpha_form(const VectorXcd& channel_row, const VectorXcd& g_phase,
                     const VectorXcd& w_column, int pas);

}  // namespace passwpt
