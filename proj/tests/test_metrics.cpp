#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "passwpt/metrics.hpp"

using namespace passwpt;

namespace {

struct Instance {
  ChannelSet ch;
  VectorXd alpha;
  BeamformingMatrix w;
};

Instance random_instance(std::mt19937_64& rng, int nw, int pas, int k, int q) {
  Instance in;
  in.ch.waveguides = nw;
  in.ch.pas = pas;
  for (int i = 0; i < k; ++i) in.ch.h_idr.push_back(oracle::random_cvec(rng, nw * pas, 1e-3));
  for (int i = 0; i < q; ++i) in.ch.h_ehr.push_back(oracle::random_cvec(rng, nw * pas, 1e-3));
  in.ch.g_phase.resize(nw * pas);
  for (int i = 0; i < nw * pas; ++i) in.ch.g_phase[i] = std::polar(1.0, oracle::uniform(rng, -kPi, kPi));
  in.alpha = oracle::random_alpha(rng, nw, pas);
  in.w.w = oracle::random_cmat(rng, nw, k);
  return in;
}

ScenarioConfig config_for(int k, int q) {
  ScenarioConfig c = multi_user_defaults();
  c.num_idrs = k;
  c.num_ehrs = q;
  c.zeta.assign(q, 0.5);
  return c;
}

}  // namespace

TEST_CASE("rate values") {
  CHECK(achievable_rate(0.0) == 0.0);
  CHECK(achievable_rate(1.0) == doctest::Approx(1.0));
  CHECK(achievable_rate(3.0) == doctest::Approx(2.0));
}

TEST_CASE("SINR against a dense recomputation") {
  std::mt19937_64 rng(3);
  const auto in = random_instance(rng, 3, 2, 3, 2);
  const auto eff = effective_channels(in.ch, RadiationState(in.alpha, 3, 2), in.w);
  const MatrixXcd gl = oracle::dense_g_lambda(in.ch.g_phase, in.alpha, 3, 2);
  const double noise = 1e-8;
  for (int k = 0; k < 3; ++k) {
    CHECK(sinr(k, eff, noise) == doctest::Approx(oracle::sinr(in.ch.h_idr, gl, in.w.w, k, noise)).epsilon(1e-12));
  }
}

TEST_CASE("single IDR SINR is the SNR") {
  std::mt19937_64 rng(4);
  const auto in = random_instance(rng, 2, 2, 1, 1);
  const auto eff = effective_channels(in.ch, RadiationState(in.alpha, 2, 2), in.w);
  CHECK(sinr(0, eff, 1e-9) == doctest::Approx(std::norm(eff.s(0, 0)) / 1e-9).epsilon(1e-14));
}

TEST_CASE("zero desired signal gives zero SINR") {
  EffectiveChannels eff;
  eff.s = MatrixXcd::Zero(2, 2);
  eff.s(0, 1) = cplx(1.0, 0.0);
  CHECK(sinr(0, eff, 1e-3) == 0.0);
}

TEST_CASE("harvested power against the trace form") {
  std::mt19937_64 rng(6);
  const auto in = random_instance(rng, 3, 3, 2, 3);
  const auto eff = effective_channels(in.ch, RadiationState(in.alpha, 3, 3), in.w);
  const MatrixXcd gl = oracle::dense_g_lambda(in.ch.g_phase, in.alpha, 3, 3);
  for (int q = 0; q < 3; ++q) {
    CHECK(harvested_power(q, eff, 0.7) ==
          doctest::Approx(oracle::harvested_trace(in.ch.h_ehr[q], gl, in.w.w, 0.7)).epsilon(1e-12));
  }

  EffectiveChannels single;
  single.e = MatrixXcd::Constant(1, 1, cplx(0.3, 0.4));
  CHECK(harvested_power(0, single, 1.0) == doctest::Approx(0.25));

  BeamformingMatrix zero{MatrixXcd::Zero(3, 2)};
  const auto z = effective_channels(in.ch, RadiationState(in.alpha, 3, 3), zero);
  CHECK(harvested_power(0, z, 0.5) == 0.0);
}

TEST_CASE("PCE") {
  ScenarioConfig c = config_for(2, 3);
  std::mt19937_64 rng(9);
  const auto in = random_instance(rng, 3, 3, 2, 3);
  const RadiationState a(in.alpha, 3, 3);

  SUBCASE("zero beamformer") {
    BeamformingMatrix zero{MatrixXcd::Zero(3, 2)};
    const auto eff = effective_channels(in.ch, a, zero);
    CHECK(pce(eff, zero, c) == 0.0);
    CHECK(consumed_power(zero, c) == doctest::Approx(3 * c.p_circuit));
  }

  SUBCASE("definition") {
    const auto eff = effective_channels(in.ch, a, in.w);
    double num = 0.0;
    const MatrixXcd gl = oracle::dense_g_lambda(in.ch.g_phase, in.alpha, 3, 3);
    for (int q = 0; q < 3; ++q) num += oracle::harvested_trace(in.ch.h_ehr[q], gl, in.w.w, c.zeta[q]);
    const double den = c.phi * in.w.w.squaredNorm() + 3 * c.p_circuit;
    CHECK(pce(eff, in.w, c) == doctest::Approx(num / den).epsilon(1e-12));
  }

  SUBCASE("linear in zeta") {
    const auto eff = effective_channels(in.ch, a, in.w);
    c.zeta = {0.1, 0.3, 0.4};
    ScenarioConfig d = c;
    for (auto& z : d.zeta) z *= 2.0;
    CHECK(pce(eff, in.w, d) == doctest::Approx(2.0 * pce(eff, in.w, c)).epsilon(1e-14));
  }

  SUBCASE("non-increasing in P_C and phi") {
    const auto eff = effective_channels(in.ch, a, in.w);
    double last = 1e300;
    for (double pc : {0.0, 1e-4, 1e-3, 1e-2, 1.0}) {
      c.p_circuit = pc;
      const double v = pce(eff, in.w, c);
      CHECK(v <= last);
      last = v;
    }
    last = 1e300;
    for (double phi : {1.0, 1.5, 2.5, 4.0}) {
      c.phi = phi;
      const double v = pce(eff, in.w, c);
      CHECK(v <= last);
      last = v;
    }
  }
}

TEST_CASE("report consistency and phase invariance") {
  ScenarioConfig c = config_for(3, 2);
  std::mt19937_64 rng(12);
  auto in = random_instance(rng, 3, 2, 3, 2);
  const RadiationState a(in.alpha, 3, 2);
  const MetricsReport m = evaluate_metrics(in.ch, a, in.w, c);
  double total = 0.0;
  for (int k = 0; k < 3; ++k) {
    CHECK(m.rates[k] == doctest::Approx(std::log2(1.0 + m.sinr[k])).epsilon(1e-14));
    CHECK(std::exp2(m.rates[k]) - 1.0 == doctest::Approx(m.sinr[k]).epsilon(1e-12));
    total += m.rates[k];
  }
  CHECK(m.sum_rate == doctest::Approx(total).epsilon(1e-14));
  CHECK(m.tx_power == doctest::Approx(in.w.w.squaredNorm()));
  CHECK(m.pce >= 0.0);

  for (int k = 0; k < 3; ++k) in.w.w.col(k) *= std::polar(1.0, 0.3 + k);
  const MetricsReport r = evaluate_metrics(in.ch, a, in.w, c);
  CHECK(r.sum_rate == doctest::Approx(m.sum_rate).epsilon(1e-12));
  CHECK(r.pce == doctest::Approx(m.pce).epsilon(1e-12));
}
