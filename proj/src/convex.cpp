#include "passwpt/convex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace passwpt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Normalized slack a start needs to skip phase 1, and the slack phase 1 aims
// for. A start on the boundary to rounding leaves the barrier unusable.
constexpr double kStartMargin = 1e-6;
constexpr double kPhase1Margin = 1e-3;

double max_abs(const MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }
double max_abs(const VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

void check_psd(const MatrixXd& p, const std::string& what) {
  if (p.size() == 0) return;
  const MatrixXd sym = 0.5 * (p + p.transpose());
  const double scale = std::max(1.0, max_abs(sym));
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10 * scale) {
    throw Error(ErrorCode::NonconvexConstraint, what + " is not positive semidefinite");
  }
}

// Scale factor that brings a function to unit coefficient magnitude.
double unit_scale(double m) { return m > 0.0 ? 1.0 / m : 1.0; }

struct Scales {
  double objective = 1.0;
  std::vector<double> linear, quadratic, soc, equality;
};

Scales problem_scales(const QcqpProblem& p) {
  Scales s;
  s.objective = unit_scale(std::max(max_abs(p.objective_p()), max_abs(p.objective_q())));
  for (const auto& c : p.linear()) s.linear.push_back(unit_scale(max_abs(c.a)));
  for (const auto& c : p.quadratic()) {
    s.quadratic.push_back(unit_scale(std::max(max_abs(c.p), max_abs(c.a))));
  }
  for (const auto& c : p.soc()) s.soc.push_back(unit_scale(std::max(max_abs(c.a), max_abs(c.c))));
  for (const auto& c : p.equality()) s.equality.push_back(unit_scale(max_abs(c.a)));
  return s;
}

// Inequality-only problem in the reduced variable z (x = x0 + Z z), already
// normalized.
struct Reduced {
  int n = 0;
  MatrixXd p;
  VectorXd q;
  struct Lin { VectorXd a; double b; };
  struct Quad { MatrixXd p; VectorXd a; double b; };
  struct Cone { MatrixXd a; VectorXd b; VectorXd c; double d; };
  std::vector<Lin> lin;
  std::vector<Quad> quad;
  std::vector<Cone> cone;

  int barrier_degree() const {
    return static_cast<int>(lin.size() + quad.size() + 2 * cone.size());
  }
};

// Largest constraint value; cones contribute ||u|| - tau.
double max_constraint(const Reduced& r, const VectorXd& z) {
  double worst = -kInf;
  for (const auto& c : r.lin) worst = std::max(worst, c.a.dot(z) - c.b);
  for (const auto& c : r.quad) worst = std::max(worst, z.dot(c.p * z) + c.a.dot(z) - c.b);
  for (const auto& c : r.cone) worst = std::max(worst, (c.a * z + c.b).norm() - (c.c.dot(z) + c.d));
  return worst;
}

bool strictly_feasible(const Reduced& r, const VectorXd& z) {
  for (const auto& c : r.lin) {
    if (!(c.a.dot(z) - c.b < 0.0)) return false;
  }
  for (const auto& c : r.quad) {
    if (!(z.dot(c.p * z) + c.a.dot(z) - c.b < 0.0)) return false;
  }
  for (const auto& c : r.cone) {
    const double tau = c.c.dot(z) + c.d;
    const VectorXd u = c.a * z + c.b;
    if (!(tau > 0.0) || !(tau * tau - u.squaredNorm() > 0.0)) return false;
  }
  return true;
}

// t * f0(z) + barrier(z); +inf outside the domain.
double barrier_value(const Reduced& r, const VectorXd& z, double t) {
  double v = t * (z.dot(r.p * z) + r.q.dot(z));
  for (const auto& c : r.lin) {
    const double g = c.a.dot(z) - c.b;
    if (!(g < 0.0)) return kInf;
    v -= std::log(-g);
  }
  for (const auto& c : r.quad) {
    const double g = z.dot(c.p * z) + c.a.dot(z) - c.b;
    if (!(g < 0.0)) return kInf;
    v -= std::log(-g);
  }
  for (const auto& c : r.cone) {
    const double tau = c.c.dot(z) + c.d;
    const double s = tau * tau - (c.a * z + c.b).squaredNorm();
    if (!(tau > 0.0) || !(s > 0.0)) return kInf;
    v -= std::log(s);
  }
  return v;
}

void barrier_derivatives(const Reduced& r, const VectorXd& z, double t, VectorXd& grad,
                         MatrixXd& hess) {
  grad = t * (2.0 * r.p * z + r.q);
  hess = 2.0 * t * r.p;
  for (const auto& c : r.lin) {
    const double g = c.a.dot(z) - c.b;
    grad += c.a / (-g);
    hess.noalias() += c.a * c.a.transpose() / (g * g);
  }
  for (const auto& c : r.quad) {
    const double g = z.dot(c.p * z) + c.a.dot(z) - c.b;
    const VectorXd dg = 2.0 * c.p * z + c.a;
    grad += dg / (-g);
    hess.noalias() += dg * dg.transpose() / (g * g) + 2.0 * c.p / (-g);
  }
  for (const auto& c : r.cone) {
    const double tau = c.c.dot(z) + c.d;
    const VectorXd u = c.a * z + c.b;
    const double s = tau * tau - u.squaredNorm();
    const VectorXd ds = 2.0 * tau * c.c - 2.0 * c.a.transpose() * u;
    grad -= ds / s;
    hess.noalias() += ds * ds.transpose() / (s * s);
    hess.noalias() -= (2.0 * c.c * c.c.transpose() - 2.0 * c.a.transpose() * c.a) / s;
  }
}

// Solves H dz = -g; retries with a growing ridge when H is not numerically PD.
bool newton_direction(const MatrixXd& hess, const VectorXd& grad, VectorXd& dz) {
  const double diag = std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
  double ridge = 0.0;
  for (int attempt = 0; attempt < 6; ++attempt) {
    MatrixXd h = hess;
    if (ridge > 0.0) h.diagonal().array() += ridge;
    Eigen::LLT<MatrixXd> llt(h);
    if (llt.info() == Eigen::Success) {
      dz = llt.solve(-grad);
      if (dz.allFinite()) return true;
    }
    ridge = ridge == 0.0 ? 1e-14 * diag : ridge * 100.0;
  }
  return false;
}

struct PathState {
  VectorXd z;
  double t = 1.0;
  int steps = 0;
  bool converged = false;
};

// Newton centering at fixed t. Returns false when the budget ran out.
// Inside the quadratic-convergence zone (decrement < 0.25) full steps are
// taken without the Armijo test, whose comparison of barrier values loses
// all precision once t is large.
template <class Stop>
bool center(const Reduced& r, PathState& st, int budget, Stop&& stop_early) {
  VectorXd grad;
  MatrixXd hess;
  VectorXd dz;
  double prev_dec2 = kInf;
  for (int it = 0; it < 100; ++it) {
    if (st.steps >= budget) return false;
    barrier_derivatives(r, st.z, st.t, grad, hess);
    if (!newton_direction(hess, grad, dz)) return true;
    const double dec2 = -grad.dot(dz);
    if (!(dec2 > 1e-24)) return true;
    const bool local = dec2 < 0.0625;
    if (local && dec2 > 0.25 * prev_dec2) return true;  // stagnated at roundoff level
    double step = 1.0;
    if (local) {
      while (!std::isfinite(barrier_value(r, st.z + step * dz, st.t)) && step > 1e-14) step *= 0.5;
    } else {
      const double f0 = barrier_value(r, st.z, st.t);
      double f1 = barrier_value(r, st.z + step * dz, st.t);
      while (!(f1 <= f0 - 0.01 * step * dec2) && step > 1e-14) {
        step *= 0.5;
        f1 = barrier_value(r, st.z + step * dz, st.t);
      }
      if (!(f1 <= f0)) return true;
    }
    ++st.steps;
    if (!std::isfinite(barrier_value(r, st.z + step * dz, st.t))) return true;
    st.z += step * dz;
    if (stop_early(st.z)) return true;
    if (local) prev_dec2 = dec2;
    if (0.5 * dec2 < 1e-20) return true;
  }
  return true;
}

template <class Stop>
void follow_path(const Reduced& r, PathState& st, double tol, int budget, Stop&& stop_early) {
  const int m = r.barrier_degree();
  st.converged = false;
  while (true) {
    if (!center(r, st, budget, stop_early)) return;
    if (stop_early(st.z)) {
      st.converged = true;
      return;
    }
    if (m == 0 || static_cast<double>(m) / st.t < tol) {
      st.converged = true;
      return;
    }
    st.t *= 10.0;
  }
}

}  // namespace

QcqpProblem::QcqpProblem(int n)
    : n_(n), obj_p_(MatrixXd::Zero(n, n)), obj_q_(VectorXd::Zero(n)) {
  if (n < 0) throw Error(ErrorCode::DimensionMismatch, "negative dimension");
}

void QcqpProblem::set_objective(MatrixXd p, VectorXd q, double r) {
  if (p.rows() != n_ || p.cols() != n_ || q.size() != n_) {
    throw Error(ErrorCode::DimensionMismatch, "objective dimension");
  }
  check_psd(p, "objective matrix");
  obj_p_ = 0.5 * (p + p.transpose());
  obj_q_ = std::move(q);
  obj_r_ = r;
}

void QcqpProblem::set_linear_objective(VectorXd q, double r) {
  set_objective(MatrixXd::Zero(n_, n_), std::move(q), r);
}

void QcqpProblem::add_linear(VectorXd a, double b, std::string label) {
  if (a.size() != n_) throw Error(ErrorCode::DimensionMismatch, "linear constraint dimension");
  linear_.push_back({std::move(a), b, std::move(label)});
}

void QcqpProblem::add_quadratic(MatrixXd p, VectorXd a, double b, std::string label) {
  if (p.rows() != n_ || p.cols() != n_ || a.size() != n_) {
    throw Error(ErrorCode::DimensionMismatch, "quadratic constraint dimension");
  }
  check_psd(p, "constraint '" + label + "'");
  quadratic_.push_back({0.5 * (p + p.transpose()), std::move(a), b, std::move(label)});
}

void QcqpProblem::add_soc(MatrixXd a, VectorXd b, VectorXd c, double d, std::string label) {
  if (a.cols() != n_ || b.size() != a.rows() || c.size() != n_) {
    throw Error(ErrorCode::DimensionMismatch, "cone constraint dimension");
  }
  soc_.push_back({std::move(a), std::move(b), std::move(c), d, std::move(label)});
}

void QcqpProblem::add_equality(VectorXd a, double b, std::string label) {
  if (a.size() != n_) throw Error(ErrorCode::DimensionMismatch, "equality dimension");
  equality_.push_back({std::move(a), b, std::move(label)});
}

void QcqpProblem::add_ball(int offset, int len, double radius, std::string label) {
  MatrixXd p = MatrixXd::Zero(n_, n_);
  p.block(offset, offset, len, len).setIdentity();
  add_quadratic(std::move(p), VectorXd::Zero(n_), radius * radius, std::move(label));
}

void QcqpProblem::add_nonnegative(int offset, int len) {
  for (int i = offset; i < offset + len; ++i) {
    VectorXd a = VectorXd::Zero(n_);
    a[i] = -1.0;
    add_linear(std::move(a), 0.0, "nonneg_" + std::to_string(i));
  }
}

double QcqpProblem::objective(const VectorXd& x) const {
  return x.dot(obj_p_ * x) + obj_q_.dot(x) + obj_r_;
}

double KktCertificate::max_residual() const { return std::max({primal, dual, complementarity}); }

KktCertificate kkt_residual(const QcqpProblem& problem, const VectorXd& x,
                            const Multipliers& mult) {
  const Scales sc = problem_scales(problem);
  KktCertificate k;
  k.multipliers = mult;
  VectorXd station = 2.0 * problem.objective_p() * x + problem.objective_q();
  double dual_cone = 0.0;
  for (std::size_t i = 0; i < problem.linear().size(); ++i) {
    const auto& c = problem.linear()[i];
    const double lam = i < mult.linear.size() ? mult.linear[i] : 0.0;
    const double g = c.a.dot(x) - c.b;
    station += lam * c.a;
    k.primal = std::max(k.primal, g * sc.linear[i]);
    k.complementarity += std::abs(lam * g) * sc.objective;
    dual_cone = std::max(dual_cone, -lam * sc.objective / sc.linear[i]);
  }
  for (std::size_t i = 0; i < problem.quadratic().size(); ++i) {
    const auto& c = problem.quadratic()[i];
    const double lam = i < mult.quadratic.size() ? mult.quadratic[i] : 0.0;
    const double g = x.dot(c.p * x) + c.a.dot(x) - c.b;
    station += lam * (2.0 * c.p * x + c.a);
    k.primal = std::max(k.primal, g * sc.quadratic[i]);
    k.complementarity += std::abs(lam * g) * sc.objective;
    dual_cone = std::max(dual_cone, -lam * sc.objective / sc.quadratic[i]);
  }
  for (std::size_t i = 0; i < problem.soc().size(); ++i) {
    const auto& c = problem.soc()[i];
    const VectorXd u = c.a * x + c.b;
    const double tau = c.c.dot(x) + c.d;
    k.primal = std::max(k.primal, (u.norm() - tau) * sc.soc[i]);
    if (i < mult.soc.size() && mult.soc[i].size() == u.size() + 1) {
      const double yt = mult.soc[i][0];
      const VectorXd yu = mult.soc[i].tail(u.size());
      station -= yt * c.c + c.a.transpose() * yu;
      k.complementarity += std::abs(yt * tau + yu.dot(u)) * sc.objective;
      dual_cone = std::max(dual_cone, (yu.norm() - yt) * sc.objective / sc.soc[i]);
    }
  }
  for (std::size_t i = 0; i < problem.equality().size(); ++i) {
    const auto& c = problem.equality()[i];
    const double nu = i < static_cast<std::size_t>(mult.equality.size()) ? mult.equality[static_cast<Eigen::Index>(i)] : 0.0;
    station += nu * c.a;
    k.primal = std::max(k.primal, std::abs(c.a.dot(x) - c.b) * sc.equality[i]);
  }
  k.primal = std::max(0.0, k.primal);
  k.dual = std::max(station.size() ? station.cwiseAbs().maxCoeff() * sc.objective : 0.0, dual_cone);
  return k;
}

namespace {

// Least-squares multipliers on the near-active set. Near the boundary the
// barrier estimate 1/(t*(-g)) inherits the cancellation error of g itself;
// the gradients at x are accurate, so stationarity is solved for directly.
Multipliers polish_multipliers(const QcqpProblem& problem, const VectorXd& x) {
  const Scales sc = problem_scales(problem);
  const int n = problem.dimension();
  enum class Kind { Linear, Quadratic, Cone, Equality };
  struct Col { Kind kind; std::size_t index; VectorXd g; };
  std::vector<Col> cols;
  constexpr double kActive = 1e-6;
  for (std::size_t i = 0; i < problem.linear().size(); ++i) {
    const auto& c = problem.linear()[i];
    if (sc.linear[i] * (c.a.dot(x) - c.b) > -kActive) cols.push_back({Kind::Linear, i, c.a});
  }
  for (std::size_t i = 0; i < problem.quadratic().size(); ++i) {
    const auto& c = problem.quadratic()[i];
    if (sc.quadratic[i] * (x.dot(c.p * x) + c.a.dot(x) - c.b) > -kActive) {
      cols.push_back({Kind::Quadratic, i, 2.0 * c.p * x + c.a});
    }
  }
  for (std::size_t i = 0; i < problem.soc().size(); ++i) {
    const auto& c = problem.soc()[i];
    const VectorXd u = c.a * x + c.b;
    const double tau = c.c.dot(x) + c.d;
    if (sc.soc[i] * (u.norm() - tau) > -kActive) {
      cols.push_back({Kind::Cone, i, c.a.transpose() * u - tau * c.c});
    }
  }
  for (std::size_t i = 0; i < problem.equality().size(); ++i) {
    cols.push_back({Kind::Equality, i, problem.equality()[i].a});
  }
  const VectorXd grad = 2.0 * problem.objective_p() * x + problem.objective_q();
  std::vector<bool> on(cols.size(), true);
  VectorXd coef;
  for (std::size_t pass = 0; pass <= cols.size(); ++pass) {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (on[j]) idx.push_back(j);
    }
    MatrixXd jac(n, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) jac.col(static_cast<Eigen::Index>(j)) = cols[idx[j]].g;
    const VectorXd sol = idx.empty() ? VectorXd() : VectorXd(jac.completeOrthogonalDecomposition().solve(-grad));
    coef = VectorXd::Zero(static_cast<Eigen::Index>(cols.size()));
    double worst = 0.0;
    std::size_t worst_j = cols.size();
    for (std::size_t j = 0; j < idx.size(); ++j) {
      coef[static_cast<Eigen::Index>(idx[j])] = sol[static_cast<Eigen::Index>(j)];
      if (cols[idx[j]].kind != Kind::Equality && sol[static_cast<Eigen::Index>(j)] < worst) {
        worst = sol[static_cast<Eigen::Index>(j)];
        worst_j = idx[j];
      }
    }
    if (worst_j == cols.size()) break;
    on[worst_j] = false;
  }
  Multipliers m;
  m.linear.assign(problem.linear().size(), 0.0);
  m.quadratic.assign(problem.quadratic().size(), 0.0);
  for (const auto& c : problem.soc()) m.soc.push_back(VectorXd::Zero(c.a.rows() + 1));
  m.equality = VectorXd::Zero(static_cast<Eigen::Index>(problem.equality().size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const double v = coef[static_cast<Eigen::Index>(j)];
    const auto i = cols[j].index;
    switch (cols[j].kind) {
      case Kind::Linear: m.linear[i] = v; break;
      case Kind::Quadratic: m.quadratic[i] = v; break;
      case Kind::Equality: m.equality[static_cast<Eigen::Index>(i)] = v; break;
      case Kind::Cone: {
        // y = w (tau, -u) / tau keeps y on the boundary ray of the dual cone.
        const auto& c = problem.soc()[i];
        const VectorXd u = c.a * x + c.b;
        const double tau = c.c.dot(x) + c.d;
        VectorXd y(u.size() + 1);
        y << v * tau, -v * u;
        m.soc[i] = y;
        break;
      }
    }
  }
  return m;
}

}  // namespace

QcqpResult solve_qcqp(const QcqpProblem& problem, double tol, int max_iters) {
  SolveOptions o;
  o.tol = tol;
  o.max_iters = max_iters;
  return solve_qcqp(problem, o);
}

QcqpResult solve_qcqp(const QcqpProblem& problem, const SolveOptions& options) {
  const int n = problem.dimension();
  const Scales sc = problem_scales(problem);

  // Affine parametrization of the equality set.
  VectorXd x0 = VectorXd::Zero(n);
  MatrixXd basis = MatrixXd::Identity(n, n);
  std::vector<int> eq_rows;
  for (std::size_t i = 0; i < problem.equality().size(); ++i) {
    const auto& c = problem.equality()[i];
    if (max_abs(c.a) == 0.0) {
      if (std::abs(c.b) > 1e-12) throw Error(ErrorCode::Infeasible, "inconsistent equality " + c.label);
      continue;
    }
    eq_rows.push_back(static_cast<int>(i));
  }
  if (!eq_rows.empty()) {
    MatrixXd e(static_cast<Eigen::Index>(eq_rows.size()), n);
    VectorXd f(static_cast<Eigen::Index>(eq_rows.size()));
    for (std::size_t r = 0; r < eq_rows.size(); ++r) {
      const auto& c = problem.equality()[static_cast<std::size_t>(eq_rows[r])];
      const double s = sc.equality[static_cast<std::size_t>(eq_rows[r])];
      e.row(static_cast<Eigen::Index>(r)) = c.a.transpose() * s;
      f[static_cast<Eigen::Index>(r)] = c.b * s;
    }
    Eigen::JacobiSVD<MatrixXd> svd(e, Eigen::ComputeFullV);
    const VectorXd& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv[i] > 1e-10 * sv[0]) ++rank;
    }
    const MatrixXd v = svd.matrixV();
    Eigen::JacobiSVD<MatrixXd> thin(e, Eigen::ComputeThinU | Eigen::ComputeThinV);
    thin.setThreshold(1e-10);
    x0 = thin.solve(f);
    if ((e * x0 - f).cwiseAbs().maxCoeff() > 1e-9) {
      throw Error(ErrorCode::Infeasible, "equality constraints are inconsistent");
    }
    basis = v.rightCols(n - rank);
  }
  const int nz = static_cast<int>(basis.cols());

  // Normalized, reduced problem.
  Reduced red;
  red.n = nz;
  {
    const MatrixXd& p = problem.objective_p();
    red.p = sc.objective * basis.transpose() * p * basis;
    red.q = sc.objective * basis.transpose() * (2.0 * p * x0 + problem.objective_q());
  }
  for (std::size_t i = 0; i < problem.linear().size(); ++i) {
    const auto& c = problem.linear()[i];
    const double s = sc.linear[i];
    red.lin.push_back({s * basis.transpose() * c.a, s * (c.b - c.a.dot(x0))});
  }
  for (std::size_t i = 0; i < problem.quadratic().size(); ++i) {
    const auto& c = problem.quadratic()[i];
    const double s = sc.quadratic[i];
    red.quad.push_back({s * basis.transpose() * c.p * basis, s * basis.transpose() * (2.0 * c.p * x0 + c.a),
                        s * (c.b - x0.dot(c.p * x0) - c.a.dot(x0))});
  }
  for (std::size_t i = 0; i < problem.soc().size(); ++i) {
    const auto& c = problem.soc()[i];
    const double s = sc.soc[i];
    red.cone.push_back({s * c.a * basis, s * (c.a * x0 + c.b), s * basis.transpose() * c.c,
                        s * (c.c.dot(x0) + c.d)});
  }
  // Constraints with no dependence on z are constants: keep only if satisfied.
  auto drop_constant = [](auto& list, auto violated) {
    std::vector<typename std::decay_t<decltype(list)>::value_type> kept;
    for (auto& c : list) {
      if (violated(c) == 0) kept.push_back(std::move(c));
      else if (violated(c) > 0) throw Error(ErrorCode::Infeasible, "constant constraint violated");
    }
    list = std::move(kept);
  };
  drop_constant(red.lin, [](const Reduced::Lin& c) { return max_abs(c.a) > 1e-14 ? 0 : (c.b < 0.0 ? 1 : -1); });
  drop_constant(red.quad, [](const Reduced::Quad& c) {
    return (max_abs(c.p) > 1e-14 || max_abs(c.a) > 1e-14) ? 0 : (c.b < 0.0 ? 1 : -1);
  });
  drop_constant(red.cone, [](const Reduced::Cone& c) {
    if (max_abs(c.a) > 1e-14 || max_abs(c.c) > 1e-14) return 0;
    return c.b.norm() > c.d ? 1 : -1;
  });

  PathState st;
  st.z = VectorXd::Zero(nz);
  if (options.start && options.start->size() == n) st.z = basis.transpose() * (*options.start - x0);

  QcqpResult res;
  auto never = [](const VectorXd&) { return false; };
  if (nz > 0 && !(max_constraint(red, st.z) < -kStartMargin)) {
    res.used_phase1 = true;
    Reduced ph;
    ph.n = nz + 1;
    ph.p = MatrixXd::Zero(nz + 1, nz + 1);
    ph.q = VectorXd::Zero(nz + 1);
    ph.q[nz] = 1.0;
    for (const auto& c : red.lin) {
      VectorXd a(nz + 1);
      a << c.a, -1.0;
      ph.lin.push_back({a, c.b});
    }
    for (const auto& c : red.quad) {
      MatrixXd p = MatrixXd::Zero(nz + 1, nz + 1);
      p.topLeftCorner(nz, nz) = c.p;
      VectorXd a(nz + 1);
      a << c.a, -1.0;
      ph.quad.push_back({p, a, c.b});
    }
    for (const auto& c : red.cone) {
      MatrixXd a = MatrixXd::Zero(c.a.rows(), nz + 1);
      a.leftCols(nz) = c.a;
      VectorXd cc(nz + 1);
      cc << c.c, 1.0;
      ph.cone.push_back({a, c.b, cc, c.d});
    }
    {
      VectorXd a = VectorXd::Zero(nz + 1);
      a[nz] = -1.0;
      ph.lin.push_back({a, 1.0});  // s >= -1 keeps phase 1 bounded
    }
    PathState p1;
    p1.z.resize(nz + 1);
    p1.z << st.z, std::max(max_constraint(red, st.z), -0.5) + 1.0;
    auto done = [nz](const VectorXd& y) { return y[nz] < -kPhase1Margin; };
    follow_path(ph, p1, 1e-10, options.max_iters, done);
    res.newton_steps += p1.steps;
    if (!(p1.z[nz] < 0.0) || !strictly_feasible(red, p1.z.head(nz))) {
      throw Error(ErrorCode::Infeasible, "no strictly feasible point (phase-1 value " +
                                             std::to_string(p1.z[nz]) + ")");
    }
    st.z = p1.z.head(nz);
  }

  if (nz > 0) {
    st.t = 1.0;
    follow_path(red, st, options.tol, options.max_iters - res.newton_steps, never);
    res.newton_steps += st.steps;
    res.converged = st.converged;
  } else {
    res.converged = true;
  }

  res.x = x0 + basis * st.z;
  res.objective = problem.objective(res.x);

  // Multipliers of the central point, mapped back to the unnormalized problem.
  Multipliers mult;
  const double t = st.t;
  for (std::size_t i = 0; i < problem.linear().size(); ++i) {
    const auto& c = problem.linear()[i];
    const double g = sc.linear[i] * (c.a.dot(res.x) - c.b);
    const double lam_n = (max_abs(c.a) > 0.0 && g < 0.0) ? 1.0 / (t * -g) : 0.0;
    mult.linear.push_back(lam_n * sc.linear[i] / sc.objective);
  }
  for (std::size_t i = 0; i < problem.quadratic().size(); ++i) {
    const auto& c = problem.quadratic()[i];
    const double g = sc.quadratic[i] * (res.x.dot(c.p * res.x) + c.a.dot(res.x) - c.b);
    const double lam_n = g < 0.0 ? 1.0 / (t * -g) : 0.0;
    mult.quadratic.push_back(lam_n * sc.quadratic[i] / sc.objective);
  }
  for (std::size_t i = 0; i < problem.soc().size(); ++i) {
    const auto& c = problem.soc()[i];
    const double s_i = sc.soc[i];
    const VectorXd u = s_i * (c.a * res.x + c.b);
    const double tau = s_i * (c.c.dot(res.x) + c.d);
    const double s = tau * tau - u.squaredNorm();
    VectorXd y(u.size() + 1);
    if (s > 0.0 && tau > 0.0) {
      y[0] = 2.0 * tau / (t * s);
      y.tail(u.size()) = -2.0 * u / (t * s);
    } else {
      y.setZero();
    }
    mult.soc.push_back(y * s_i / sc.objective);
  }
  if (!problem.equality().empty()) {
    VectorXd r = 2.0 * problem.objective_p() * res.x + problem.objective_q();
    for (std::size_t i = 0; i < problem.linear().size(); ++i) r += mult.linear[i] * problem.linear()[i].a;
    for (std::size_t i = 0; i < problem.quadratic().size(); ++i) {
      const auto& c = problem.quadratic()[i];
      r += mult.quadratic[i] * (2.0 * c.p * res.x + c.a);
    }
    for (std::size_t i = 0; i < problem.soc().size(); ++i) {
      const auto& c = problem.soc()[i];
      const auto& y = mult.soc[i];
      r -= y[0] * c.c + c.a.transpose() * y.tail(c.a.rows());
    }
    MatrixXd et(n, static_cast<Eigen::Index>(problem.equality().size()));
    for (std::size_t i = 0; i < problem.equality().size(); ++i) {
      et.col(static_cast<Eigen::Index>(i)) = problem.equality()[i].a;
    }
    mult.equality = et.completeOrthogonalDecomposition().solve(-r);
  }
  res.kkt = kkt_residual(problem, res.x, mult);
  KktCertificate polished = kkt_residual(problem, res.x, polish_multipliers(problem, res.x));
  if (polished.max_residual() < res.kkt.max_residual()) res.kkt = polished;
  return res;
}

PhaseFixedConstraint fix_phase(const VectorXcd& row, double sqrt_gamma, const VectorXd& x_ref) {
  PhaseFixedConstraint out;
  const cplx z = row.transpose() * x_ref.cast<cplx>();
  out.theta = std::abs(z) > 0.0 ? std::arg(z) : 0.0;
  const VectorXcd rot = row * std::polar(1.0, -out.theta);
  out.real_part = {-rot.real(), -sqrt_gamma, "phase_fixed_re"};
  // rounding residue from the rotation must not survive the pin's rescaling
  VectorXd im = rot.imag();
  const double floor = 1e-12 * rot.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < im.size(); ++i) {
    if (std::abs(im[i]) <= floor) im[i] = 0.0;
  }
  out.imag_pin = {std::move(im), 0.0, "phase_fixed_im"};
  return out;
}

void add_phase_fixed(QcqpProblem& problem, const PhaseFixedConstraint& c, bool pin) {
  problem.add_linear(c.real_part.a, c.real_part.b, c.real_part.label);
  if (pin) problem.add_equality(c.imag_pin.a, c.imag_pin.b, c.imag_pin.label);
}

}  // namespace passwpt
