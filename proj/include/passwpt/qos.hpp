#pragma once

// Convex restrictions of the service constraints shared by the W and alpha
// subproblems.
//
// A complex linear form over a real decision x is a row r with z = r^T x.
// For the beamformer, x = [Re vec(W); Im vec(W)] with vec index k*N + n.

#include <vector>

#include "passwpt/channel.hpp"
#include "passwpt/convex.hpp"
#include "passwpt/types.hpp"

namespace passwpt {

VectorXd pack_beamformer(const BeamformingMatrix& w);
BeamformingMatrix unpack_beamformer(const VectorXd& x, int antennas, int users);

// Row of c^H w_j over the packed beamformer.
VectorXcd beam_row(const VectorXcd& c, int j, int antennas, int users);

// Real Gram matrix with |r^T x|^2 = x^T M x.
MatrixXd real_gram(const VectorXcd& row);

// Re{e^{-j theta} r_d^T x} >= sqrt(gamma) || [r_j^T x (j != k) ; sigma] ||.
// Exact SINR floor once the desired term's phase is fixed to theta.
void add_sinr_cone(QcqpProblem& p, const VectorXcd& desired, const std::vector<VectorXcd>& interference,
                   double gamma, double noise, double theta, const std::string& label);

// sum_i |r_i^T x|^2 >= floor, replaced by its tangent at x_ref:
// sum_i 2 Re{conj(r_i^T x_ref) r_i^T x} - |r_i^T x_ref|^2 >= floor.
void add_energy_tangent(QcqpProblem& p, const std::vector<VectorXcd>& rows, const VectorXd& x_ref,
                        double floor, const std::string& label);

// Angle of r^T x (0 when it vanishes).
double form_phase(const VectorXcd& row, const VectorXd& x);

// Per-IDR interference rows {s_kj : j != k} taken from a full row set.
std::vector<VectorXcd> interference_rows(const std::vector<VectorXcd>& rows, int k);

}  // namespace passwpt
