#pragma once

// Power radiation ratios: the coupled-mode forward map, the block-diagonal
// Lambda matrix, and the feasible alpha sets built at a fixed (W, X).

#include <string>
#include <vector>

#include "passwpt/types.hpp"

namespace passwpt {

struct ScenarioConfig;
struct ChannelSet;

class RadiationState {
 public:
  RadiationState() = default;
  // Throws InfeasibleAlpha if any entry is negative or a waveguide's squared
  // sum exceeds 1 (with 1e-9 slack).
  RadiationState(VectorXd alpha, int waveguides, int pas);

  static RadiationState equal_power(int waveguides, int pas);

  const VectorXd& alpha() const { return alpha_; }
  int waveguides() const { return waveguides_; }
  int pas() const { return pas_; }
  double at(int n, int l) const { return alpha_[n * pas_ + l]; }
  // Block-diagonal Lambda (N*L x N): column n holds alpha_n.
  MatrixXd lambda() const;

 private:
  VectorXd alpha_;
  int waveguides_ = 0;
  int pas_ = 0;
};

// Same as the constructor.
RadiationState assemble_lambda(const VectorXd& alpha, int waveguides, int pas);

// alpha_l = a_l sin(eps_l d) prod_{i<l} sqrt(1 - a_i sin^2(eps_i d)).
// The product uses each earlier PA's own coupling, so sum alpha_l^2 <= 1.
VectorXd coupled_mode_alpha(const std::vector<int>& activation, const std::vector<double>& coupling,
                            double d_y_max);

// alpha^T M alpha >= threshold, M symmetric PSD.
struct QuadraticLowerBound {
  MatrixXd m;
  double threshold = 0.0;
  std::string label;
};

// The alpha set of a fixed (W, X): quadratic service floors, per-waveguide
// unit balls and the nonnegative orthant. The raw linear-form rows are kept so
// convex restrictions can be formed around a reference point.
struct AlphaFeasibleRegion {
  int waveguides = 0;
  int pas = 0;
  std::vector<QuadraticLowerBound> lower;
  double ball_radius = 1.0;
  bool nonnegative = true;

  // sinr_rows[k][j]: s_{k,j}(alpha) = sinr_rows[k][j]^T alpha.
  std::vector<std::vector<VectorXcd>> sinr_rows;
  // harvest_rows[q][k]: e_{q,k}(alpha) = harvest_rows[q][k]^T alpha.
  std::vector<std::vector<VectorXcd>> harvest_rows;
  double gamma = 0.0;   // SINR floor
  double noise = 0.0;   // sigma^2
  std::vector<double> harvest_floor;  // per-EHR floor on sum_k |e_qk|^2 (P^min/zeta_q)

  bool contains(const VectorXd& alpha, double rel_tol = 1e-9) const;
  // Smallest normalized slack over all constraints (negative when violated).
  double min_margin(const VectorXd& alpha) const;
};

// Region for one IDR and one EHR with alpha-linear forms e_I = phi_i^T alpha
// and e_E = phi_e^T alpha:
//   |e_I|^2 >= gamma_min sigma^2, |e_E|^2 >= P^min/zeta_1, ||alpha_n|| <= 1, alpha >= 0.
// Throws EmptyRegion if no scanned point is a member.
// check_nonempty = false skips the scan (callers that already hold a member).
AlphaFeasibleRegion feasible_region_two_user(const VectorXcd& phi_i, const VectorXcd& phi_e,
                                            const ScenarioConfig& config, int waveguides, int pas,
                                            bool check_nonempty = true);

// Multi-user region at fixed (W, X):
//   alpha^T (S_kk - gamma sum_{j!=k} S_kj) alpha >= gamma sigma^2 per IDR,
//   sum_k |e_qk(alpha)|^2 >= P^min/zeta_q per EHR, balls, orthant.
AlphaFeasibleRegion feasible_region_multi(const ChannelSet& channels, const BeamformingMatrix& w,
                                          const ScenarioConfig& config, bool check_nonempty = true);

// Deterministic scan (equal power, aligned points, pseudo-random boundary
// points). Throws EmptyRegion when nothing is a member; otherwise returns the
// scanned member with the largest service slack.
VectorXd find_region_member(const AlphaFeasibleRegion& region);

// Re(conj(row) row^T): |row^T alpha|^2 = alpha^T M alpha for real alpha.
MatrixXd gram_real(const VectorXcd& row);

}  // namespace passwpt
