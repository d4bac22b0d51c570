#pragma once

// Small dense convex programs over a real decision vector x:
//
//   minimize    x^T P x + q^T x + r                 (P symmetric PSD)
//   subject to  a^T x <= b                          linear
//               x^T P_i x + a_i^T x <= b_i          convex quadratic (P_i PSD)
//               ||A x + b|| <= c^T x + d            second-order cone
//               e^T x == f                          linear equality
//
// Solved with a log-barrier path-following method. Equalities are eliminated
// through an orthonormal null-space basis, a phase-1 problem finds a strictly
// feasible start when the caller's guess is not one, and every function is
// scaled to unit coefficient magnitude before the barrier sees it.

#include <optional>
#include <string>
#include <vector>

#include "passwpt/types.hpp"

namespace passwpt {

struct LinearConstraint {
  VectorXd a;
  double b = 0.0;
  std::string label;
};

struct QuadraticConstraint {
  MatrixXd p;
  VectorXd a;
  double b = 0.0;
  std::string label;
};

struct SocConstraint {
  MatrixXd a;
  VectorXd b;
  VectorXd c;
  double d = 0.0;
  std::string label;
};

class QcqpProblem {
 public:
  explicit QcqpProblem(int n);

  int dimension() const { return n_; }

  void set_objective(MatrixXd p, VectorXd q, double r = 0.0);
  void set_linear_objective(VectorXd q, double r = 0.0);

  void add_linear(VectorXd a, double b, std::string label = {});
  // Throws NonconvexConstraint if p has a negative eigenvalue.
  void add_quadratic(MatrixXd p, VectorXd a, double b, std::string label = {});
  void add_soc(MatrixXd a, VectorXd b, VectorXd c, double d, std::string label = {});
  void add_equality(VectorXd a, double b, std::string label = {});

  // ||x[offset : offset+len]||^2 <= radius^2.
  void add_ball(int offset, int len, double radius, std::string label = {});
  // x[offset : offset+len] >= 0.
  void add_nonnegative(int offset, int len);

  double objective(const VectorXd& x) const;

  const MatrixXd& objective_p() const { return obj_p_; }
  const VectorXd& objective_q() const { return obj_q_; }
  double objective_r() const { return obj_r_; }
  const std::vector<LinearConstraint>& linear() const { return linear_; }
  const std::vector<QuadraticConstraint>& quadratic() const { return quadratic_; }
  const std::vector<SocConstraint>& soc() const { return soc_; }
  const std::vector<LinearConstraint>& equality() const { return equality_; }

 private:
  int n_;
  MatrixXd obj_p_;
  VectorXd obj_q_;
  double obj_r_ = 0.0;
  std::vector<LinearConstraint> linear_;
  std::vector<QuadraticConstraint> quadratic_;
  std::vector<SocConstraint> soc_;
  std::vector<LinearConstraint> equality_;
};

// Lagrange multipliers in the units of the problem as posed. For a cone the
// dual vector is (y_tau, y_u) with y_tau >= ||y_u||.
struct Multipliers {
  std::vector<double> linear;
  std::vector<double> quadratic;
  std::vector<VectorXd> soc;
  VectorXd equality;
};

// Residuals of the normalized problem (objective and constraints scaled to
// unit coefficient magnitude), so they are comparable across physical scales.
struct KktCertificate {
  double primal = 0.0;           // largest constraint violation
  double dual = 0.0;             // stationarity and dual-cone violation
  double complementarity = 0.0;  // sum |lambda_i f_i(x)|
  Multipliers multipliers;

  double max_residual() const;
};

struct QcqpResult {
  VectorXd x;
  double objective = 0.0;
  KktCertificate kkt;
  bool converged = false;
  int newton_steps = 0;
  bool used_phase1 = false;
};

struct SolveOptions {
  double tol = 1e-9;           // duality-gap target m/t of the normalized problem
  int max_iters = 500;         // total Newton steps
  std::optional<VectorXd> start;
};

// Throws Infeasible when the phase-1 problem certifies no strictly feasible
// point. On iteration exhaustion the best iterate comes back with
// converged == false.
QcqpResult solve_qcqp(const QcqpProblem& problem, const SolveOptions& options = {});
QcqpResult solve_qcqp(const QcqpProblem& problem, double tol, int max_iters);

KktCertificate kkt_residual(const QcqpProblem& problem, const VectorXd& x,
                            const Multipliers& multipliers);

// Convex restriction of |row^T x| >= sqrt_gamma around x_ref:
//   Re{e^{-j theta} row}^T x >= sqrt_gamma, optionally Im{e^{-j theta} row}^T x == 0,
// with theta = angle(row^T x_ref) (0 when row^T x_ref vanishes).
struct PhaseFixedConstraint {
  double theta = 0.0;
  LinearConstraint real_part;      // already in a^T x <= b form
  LinearConstraint imag_pin;       // equality a^T x == 0
};

PhaseFixedConstraint fix_phase(const VectorXcd& row, double sqrt_gamma, const VectorXd& x_ref);

// Adds the restriction to a problem; pin selects whether the imaginary part
// is fixed to zero.
void add_phase_fixed(QcqpProblem& problem, const PhaseFixedConstraint& c, bool pin);

}  // namespace passwpt
