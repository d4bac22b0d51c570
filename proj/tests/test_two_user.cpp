#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "passwpt/two_user.hpp"

using namespace passwpt;

namespace {

double f_id(double c, double d, double delta, double l) {
  return (c + l * delta) * (c + l * delta) / (c + 2 * l * delta + l * l * d);
}
double f_eh(double c, double d, double delta, double l) {
  return (delta + l * d) * (delta + l * d) / (c + 2 * l * delta + l * l * d);
}

// Effective channel c with c^H w = h^H G Lambda w, recomputed densely.
VectorXcd lifted(const VectorXcd& h_row, const VectorXcd& g, const VectorXd& alpha, int nw, int pas) {
  return (h_row.transpose() * oracle::dense_g_lambda(g, alpha, nw, pas)).adjoint();
}

ScenarioConfig small_two_user() {
  ScenarioConfig c = two_user_defaults();
  c.pas_per_waveguide = 2;
  c.candidates = {8.0, 16.0, 24.0};
  c.x_max = 32.0;
  return c;
}

}  // namespace

TEST_CASE("direction functions") {
  CHECK_THROWS_AS(direction_functions(0.0, 1.0, 0.0, 1.0), Error);
  CHECK_THROWS_AS(direction_functions(1.0, 0.0, 0.0, 1.0), Error);

  SUBCASE("lambda zero") {
    const auto p = direction_functions(4.0, 9.0, 3.0, 0.0);
    CHECK(p.f_id == doctest::Approx(4.0));
    CHECK(p.f_eh == doctest::Approx(9.0 / 4.0));
  }

  SUBCASE("colinear pairs are constant") {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 20; ++t) {
      const VectorXcd c1 = oracle::random_cvec(rng, 3);
      const VectorXcd d1 = std::polar(oracle::uniform(rng, 0.1, 3.0), oracle::uniform(rng, -kPi, kPi)) * c1;
      const double c = c1.squaredNorm(), d = d1.squaredNorm();
      for (double l : {0.0, 1.0, 10.0, 1e3}) {
        const auto p = direction_functions(c1, d1, l);
        CHECK(std::abs(p.f_id - c) < 1e-10 * c);
        CHECK(std::abs(p.f_eh - d) < 1e-10 * d);
      }
    }
  }

  SUBCASE("finite-difference slopes for non-colinear pairs") {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 100; ++t) {
      const VectorXcd c1 = oracle::random_cvec(rng, 4);
      const VectorXcd d1 = oracle::random_cvec(rng, 4);
      const double c = c1.squaredNorm(), d = d1.squaredNorm(), delta = std::abs(c1.dot(d1));
      REQUIRE(delta * delta < c * d);
      for (int i = 0; i < 100; ++i) {
        const double l = std::pow(10.0, -2.0 + 4.0 * i / 99.0);
        const double h = 1e-6 * l;
        const auto hi = direction_functions(c1, d1, l + h);
        const auto lo = direction_functions(c1, d1, l - h);
        CHECK(hi.f_id - lo.f_id < 0.0);
        CHECK(hi.f_eh - lo.f_eh > 0.0);
        const auto p = direction_functions(c1, d1, l);
        CHECK(p.f_id == doctest::Approx(f_id(c, d, delta, l)).epsilon(1e-12));
        CHECK(p.f_eh == doctest::Approx(f_eh(c, d, delta, l)).epsilon(1e-12));
        CHECK(p.f_id <= c * (1 + 1e-12));
        CHECK(p.f_eh <= d * (1 + 1e-12));
      }
    }
  }
}

TEST_CASE("mixed direction") {
  std::mt19937_64 rng(3);
  const VectorXcd c1 = oracle::random_cvec(rng, 3);
  const VectorXcd d1 = oracle::random_cvec(rng, 3);
  for (double l : {0.0, 0.3, 5.0}) {
    const VectorXcd v = mixed_direction(c1, d1, l);
    CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-14));
    // |c^H v|^2 and |d^H v|^2 are the direction functions
    const auto p = direction_functions(c1, d1, l);
    CHECK(std::norm(c1.dot(v)) == doctest::Approx(p.f_id).epsilon(1e-12));
    CHECK(std::norm(d1.dot(v)) == doctest::Approx(p.f_eh).epsilon(1e-12));
    // v lies in span{c1, d1}
    MatrixXcd basis(3, 2);
    basis << c1, d1;
    const VectorXcd coef = basis.colPivHouseholderQr().solve(v);
    CHECK((basis * coef - v).norm() < 1e-9);
  }
}

TEST_CASE("maximal feasible power") {
  ScenarioConfig c = two_user_defaults();
  std::mt19937_64 rng(4);
  const VectorXcd c1 = oracle::random_cvec(rng, 1, 1e-5);
  const VectorXcd d1 = oracle::random_cvec(rng, 1, 1e-5);

  c.gamma_min = 0.0;
  CHECK(p0_star(0.5, c1, d1, c) == c.p_max);

  c.gamma_min = 1e-6;
  CHECK(p0_star(0.5, c1 * 1e5, d1, c) == c.p_max);

  const double f = direction_functions(c1, d1, 0.0).f_id;
  c.gamma_min = f * c.p_max / c.noise_power;
  CHECK(p0_star(0.0, c1, d1, c) == c.p_max);

  c.gamma_min *= 1.01;
  try {
    p0_star(0.0, c1, d1, c);
    FAIL("expected InfeasibleLambda");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InfeasibleLambda);
  }
}

TEST_CASE("Dinkelbach parameter update") {
  ScenarioConfig c = two_user_defaults();
  std::mt19937_64 rng(5);
  const VectorXcd d1 = oracle::random_cvec(rng, 1);
  CHECK(dinkelbach_beta_update(VectorXcd::Zero(1), d1, c) == 0.0);

  c.phi = 1.0;
  c.p_circuit = 0.0;
  c.zeta = {1.0};
  const VectorXcd unit = VectorXcd::Constant(1, cplx(1.0, 0.0));
  CHECK(dinkelbach_beta_update(unit, unit, c) == doctest::Approx(1.0));

  SUBCASE("matches the PCE metric for one IDR and one EHR") {
    ScenarioConfig d = two_user_defaults();
    const auto layout = sample_user_drop(d, 9);
    const auto ch = build_channel_set(initial_placement(d, build_position_grid(d)), layout, d);
    const RadiationState a = RadiationState::equal_power(1, 4);
    BeamformingMatrix w{oracle::random_cmat(rng, 1, 1, 3.0)};
    const auto eff = effective_channels(ch, a, w);
    CHECK(dinkelbach_beta_update(w.w.col(0), eff.d[0], d) == doctest::Approx(pce(eff, w, d)).epsilon(1e-12));
  }
}

TEST_CASE("WMMSE receive filter") {
  CHECK(wmmse_filter(cplx(0.0, 0.0), 1.0) == cplx(0.0, 0.0));
  const cplx e(3e-3, -4e-3);
  const cplx u = wmmse_filter(e, 1e-14);
  CHECK(std::abs(std::abs(u * e) - 1.0) < 1e-6);

  const double noise = 2e-5;
  const cplx us = wmmse_filter(e, noise);
  const auto mse = [&](cplx v) { return std::norm(v) * (std::norm(e) + noise) - 2.0 * (std::conj(v) * e).real(); };
  CHECK(mse(us) == doctest::Approx(-std::norm(e) / (std::norm(e) + noise)).epsilon(1e-12));
  for (cplx step : {cplx(1e-3, 0.0), cplx(0.0, 1e-3), cplx(-1e-3, 2e-3)}) CHECK(mse(us) < mse(us + step));
}

TEST_CASE("EHR-only limit gives the pure energy beam") {
  ScenarioConfig c = two_user_defaults();
  c.pas_per_waveguide = 1;
  c.candidates = {16.0};
  c.gamma_min = 1e-300;
  c.p_min = 0.0;
  const auto layout = sample_user_drop(c, 12);
  TwoUserOptions opt;
  opt.update_alpha = false;
  const auto r = solve_two_user_pce(c, layout, opt);
  const VectorXcd d1 = lifted(r.channels.h_ehr[0], r.channels.g_phase, VectorXd::Ones(1), 1, 1);
  const double d = d1.squaredNorm();
  const double expect = c.zeta[0] * c.p_max * d / (c.phi * c.p_max + c.p_circuit);
  CHECK(r.metrics.pce == doctest::Approx(expect).epsilon(1e-6));
  CHECK(r.state.p0 == c.p_max);
}

TEST_CASE("two-user PCE matches exhaustive enumeration") {
  ScenarioConfig c = small_two_user();
  TwoUserOptions opt;
  opt.lambda_points = 101;
  opt.refine_lambda = false;
  opt.update_alpha = false;
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const auto layout = sample_user_drop(c, seed);
    const auto r = solve_two_user_pce(c, layout, opt);

    const VectorXd a = VectorXd::Constant(2, std::sqrt(0.5));
    double best = -1.0;
    for (std::size_t i = 0; i < c.candidates.size(); ++i) {
      for (std::size_t j = i + 1; j < c.candidates.size(); ++j) {
        const Placement p{{{c.candidates[i], c.candidates[j]}}};
        const auto ch = build_channel_set(p, layout, c);
        const VectorXcd c1 = lifted(ch.h_idr[0], ch.g_phase, a, 1, 2);
        const VectorXcd d1 = lifted(ch.h_ehr[0], ch.g_phase, a, 1, 2);
        for (double l : lambda_grid(c1, d1, c, 101)) {
          const cplx rot = std::conj(c1.dot(d1)) / std::abs(c1.dot(d1));
          VectorXcd w = c1 + l * rot * d1;
          w *= std::sqrt(c.p_max) / w.norm();
          const double snr = std::norm(c1.dot(w)) / c.noise_power;
          const double harvest = c.zeta[0] * std::norm(d1.dot(w));
          if (snr < c.gamma_min || harvest < c.p_min) continue;
          best = std::max(best, harvest / (c.phi * c.p_max + c.p_circuit));
        }
      }
    }
    REQUIRE(best > 0.0);
    CHECK(std::abs(r.metrics.pce - best) <= 1e-6 * best);

    const auto& beta = r.report.beta;
    for (std::size_t i = 1; i < beta.size(); ++i) CHECK(beta[i] >= beta[i - 1]);
    CHECK(r.report.converged);
    CHECK(r.report.residual.back() < 1e-4 * r.metrics.pce * (c.phi * c.p_max + c.p_circuit));

    // w1 in span{c1, d1}
    const auto eff = effective_channels(r.channels, r.state.alpha);
    MatrixXcd basis(1, 2);
    basis << eff.c[0], eff.d[0];
    const VectorXcd coef = basis.colPivHouseholderQr().solve(r.state.w1);
    CHECK((basis * coef - r.state.w1).norm() <= 1e-9 * r.state.w1.norm());
  }
}

TEST_CASE("two-user PCE with the alpha step") {
  const ScenarioConfig c = two_user_defaults();
  const auto layout = sample_user_drop(c, 77);
  TwoUserOptions fixed;
  fixed.update_alpha = false;
  const auto base = solve_two_user_pce(c, layout, fixed);
  const auto r = solve_two_user_pce(c, layout);
  CHECK(r.metrics.pce >= base.metrics.pce * (1.0 - 1e-9));
  const auto& beta = r.report.beta;
  for (std::size_t i = 1; i < beta.size(); ++i) CHECK(beta[i] >= beta[i - 1]);
  CHECK(r.state.p0 <= c.p_max);
  CHECK(r.state.p0 > 0.0);
  CHECK(r.metrics.sinr[0] >= c.gamma_min * (1 - 1e-6));
  CHECK(r.metrics.harvested[0] >= c.p_min * (1 - 1e-6));
}

TEST_CASE("rate refinement") {
  ScenarioConfig c = two_user_defaults();
  c.pas_per_waveguide = 2;
  ChannelSet ch;
  ch.waveguides = 1;
  ch.pas = 2;
  ch.h_idr = {VectorXcd{{cplx(1e-4, 0.0), cplx(0.1e-4, 0.0)}}};
  ch.h_ehr = {VectorXcd{{cplx(0.1e-4, 0.0), cplx(1e-4, 0.0)}}};
  ch.g_phase = VectorXcd::Ones(2);
  const VectorXcd w1 = VectorXcd::Ones(1);
  const VectorXd start{{0.6, 0.8}};

  // max over the quarter circle of the rate subject to the floors
  const auto grid_best = [&](const ScenarioConfig& cfg) {
    double best = -1.0;
    for (int i = 0; i <= 1000000; ++i) {
      const double t = 0.5 * kPi * i / 1e6;
      const double zi = 1e-4 * std::cos(t) + 0.1e-4 * std::sin(t);
      const double ze = 0.1e-4 * std::cos(t) + 1e-4 * std::sin(t);
      if (zi * zi < cfg.gamma_min * cfg.noise_power) continue;
      if (cfg.zeta[0] * ze * ze < cfg.p_min) continue;
      best = std::max(best, std::log2(1.0 + zi * zi / cfg.noise_power));
    }
    return best;
  };

  SUBCASE("vacuous floors") {
    c.gamma_min = 1e-300;
    c.p_min = 0.0;
    const VectorXcd phi_i = alpha_form(ch.h_idr[0], ch.g_phase, w1, 2);
    const VectorXcd phi_e = alpha_form(ch.h_ehr[0], ch.g_phase, w1, 2);
    const auto region = feasible_region_two_user(phi_i, phi_e, c, 1, 2, false);
    const auto r = solve_two_user_sum_rate(w1, ch, region, RadiationState(start, 1, 2), c);
    // Cauchy-Schwarz: alpha along the (real, positive) IDR row
    const VectorXd expect = VectorXd{{1.0, 0.1}} / std::sqrt(1.01);
    CHECK((r.alpha.alpha() - expect).norm() < 1e-3);
    CHECK(r.metrics.sum_rate == doctest::Approx(grid_best(c)).epsilon(1e-3));
    for (std::size_t i = 1; i < r.report.objective.size(); ++i)
      CHECK(r.report.objective[i] >= r.report.objective[i - 1] - 1e-8);
  }

  SUBCASE("binding harvest floor is pinned") {
    c.p_min = 1e-9;
    const VectorXcd phi_i = alpha_form(ch.h_idr[0], ch.g_phase, w1, 2);
    const VectorXcd phi_e = alpha_form(ch.h_ehr[0], ch.g_phase, w1, 2);
    const auto region = feasible_region_two_user(phi_i, phi_e, c, 1, 2, false);
    REQUIRE(region.contains(start));
    const auto r = solve_two_user_sum_rate(w1, ch, region, RadiationState(start, 1, 2), c);
    CHECK(r.eta > 0.0);
    const cplx z = phi_e.transpose() * r.alpha.alpha().cast<cplx>();
    const double sg = std::sqrt(r.gamma_floor);
    CHECK(r.gamma_floor == doctest::Approx(c.p_min / c.zeta[0]));
    CHECK(std::abs((std::polar(1.0, -r.theta) * z).real() - sg) < 1e-6 * sg);
    CHECK(r.metrics.sum_rate == doctest::Approx(grid_best(c)).epsilon(1e-3));
    CHECK(r.kkt.max_residual() < 1e-6);
    CHECK(region.contains(r.alpha.alpha(), 1e-6));
  }
}

TEST_CASE("bi-level pipeline keeps every constraint") {
  const ScenarioConfig c = two_user_defaults();
  for (std::uint64_t seed : {3u, 8u}) {
    const auto layout = sample_user_drop(c, seed);
    const auto upper = solve_two_user_pce(c, layout);
    const auto lower = solve_two_user_sum_rate(upper, c);
    CHECK(lower.metrics.sum_rate >= upper.metrics.sum_rate * (1.0 - 1e-9));
    CHECK(lower.metrics.sinr[0] >= c.gamma_min * (1 - 1e-6));
    CHECK(lower.metrics.harvested[0] >= c.p_min * (1 - 1e-6));
    CHECK(lower.alpha.alpha().minCoeff() >= 0.0);
    CHECK(lower.alpha.alpha().norm() <= 1.0 + 1e-6);
    CHECK(upper.state.w1.squaredNorm() <= c.p_max * (1 + 1e-9));
    const auto& obj = lower.report.objective;
    for (std::size_t i = 1; i < obj.size(); ++i) CHECK(obj[i] >= obj[i - 1] - 1e-8);
  }
}
