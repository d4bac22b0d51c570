#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "passwpt/config_io.hpp"
#include "passwpt/harness.hpp"

using namespace passwpt;
namespace fs = std::filesystem;

namespace {

ScenarioConfig small_scenario() {
  ScenarioConfig c = multi_user_defaults();
  c.num_waveguides = 2;
  c.pas_per_waveguide = 2;
  c.num_idrs = 2;
  c.num_ehrs = 2;
  c.zeta = {0.5, 0.5};
  c.waveguide_y = {0.0, 10.0};
  c.candidates = {8.0, 16.0, 24.0, 32.0};
  c.max_outer_iters = 15;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("passwpt_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("unit conversions") {
  CHECK(dbm_to_watt(-80.0) == doctest::Approx(1e-11).epsilon(1e-12));
  CHECK(dbm_to_watt(30.0) == doctest::Approx(1.0));
  CHECK(watt_to_dbm(1e-11) == doctest::Approx(-80.0));
  CHECK(db_to_linear(20.0) == doctest::Approx(100.0));
  CHECK(linear_to_db(100.0) == doctest::Approx(20.0));
  CHECK(axis_from_file(SweepAxis::PMax, 50.0) == doctest::Approx(100.0));
  CHECK(axis_to_file(SweepAxis::GammaMin, 10.0) == doctest::Approx(10.0));
  CHECK(axis_from_file(SweepAxis::PasPerWaveguide, 3.0) == 3.0);
}

TEST_CASE("config files") {
  const std::string toml = R"(
[scenario]
num_waveguides = 2
num_ehrs = 3
noise_power_dbm = -80
p_max_dbm = 40
gamma_min_db = 10
zeta = 0.4

[experiment]
axis = "p_max"
values = [40, 44]
schemes = ["pass-wpt", "mimo"]
drops = 3
)";
  const ExperimentSpec spec = experiment_from_json(toml_text_to_json(toml));
  CHECK(spec.base.num_waveguides == 2);
  CHECK(spec.base.waveguide_y == std::vector<double>{0.0, 10.0});
  CHECK(spec.base.zeta == std::vector<double>{0.4, 0.4, 0.4});
  CHECK(spec.base.noise_power == doctest::Approx(1e-11));
  CHECK(spec.base.p_max == doctest::Approx(10.0));
  CHECK(spec.base.gamma_min == doctest::Approx(10.0));
  CHECK(spec.axis == SweepAxis::PMax);
  REQUIRE(spec.values.size() == 2);
  CHECK(spec.values[1] == doctest::Approx(dbm_to_watt(44.0)));
  CHECK(spec.schemes == std::vector<Scheme>{Scheme::PassWpt, Scheme::Mimo});
  CHECK(spec.drops == 3);

  const ExperimentSpec back = experiment_from_json(experiment_to_json(spec));
  CHECK(back.values == spec.values);
  CHECK(back.base.p_max == spec.base.p_max);

  const auto bad = toml_text_to_json("[scenario]\nnum_waveguidez = 2\n");
  CHECK_THROWS_AS(experiment_from_json(bad), Error);
  CHECK_THROWS_AS(load_config("/nonexistent/path.toml"), Error);

  SUBCASE("shipped configs load") {
    for (const char* name : {"scenario", "convergence", "power_vs_sinr", "pce_vs_grid", "rate_vs_L", "rate_vs_pmax"}) {
      const fs::path p = fs::path(PASSWPT_SOURCE_DIR) / "configs" / (std::string(name) + ".toml");
      CHECK_NOTHROW(load_experiment(p.string()).validate());
    }
  }
}

TEST_CASE("spec validation and parsing") {
  ExperimentSpec s;
  s.values = {2.0, 1.0};
  CHECK_THROWS_AS(s.validate(), Error);
  s.values = {1.0};
  s.drops = 0;
  CHECK_THROWS_AS(s.validate(), Error);
  CHECK(parse_axis("L") == SweepAxis::PasPerWaveguide);
  CHECK(parse_scheme("ep-pass") == Scheme::EqualPower);
  CHECK(parse_figure("rate_vs_pmax") == Figure::RateVsPmax);
  CHECK_THROWS_AS(parse_axis("nope"), Error);
}

TEST_CASE("density candidates nest") {
  const auto a = density_candidates(32.0, 4);
  const auto b = density_candidates(32.0, 8);
  CHECK(a == std::vector<double>{8, 16, 24, 32});
  for (double x : a) CHECK(std::find(b.begin(), b.end(), x) != b.end());
}

TEST_CASE("percentiles") {
  CHECK(percentile({3.0, 1.0, 2.0, 4.0}, 50.0) == doctest::Approx(2.5));
  CHECK(percentile({1.0, 2.0, 3.0, 4.0, 5.0}, 10.0) == doctest::Approx(1.4));
  CHECK(percentile({7.0}, 90.0) == 7.0);
  CHECK(median({5.0, 1.0, 3.0}) == 3.0);
}

TEST_CASE("one drop, one scheme, one value gives one row") {
  ExperimentSpec s;
  s.base = small_scenario();
  s.axis = SweepAxis::Iterations;
  s.values = {15.0};
  s.schemes = {Scheme::EqualPower};
  s.drops = 1;
  const auto rep = run_experiment(s);
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.rows[0].drop == 0);
  CHECK(rep.aggregates.size() == 1);
  CHECK(rep.provenance.seed == s.base.rng_seed);
  CHECK(rep.provenance.config_hash.size() == 16);
}

TEST_CASE("sweeps are deterministic and files are well formed") {
  ExperimentSpec s;
  s.base = small_scenario();
  s.axis = SweepAxis::PMax;
  s.values = {10.0, 100.0};
  s.drops = 2;
  s.threads = 2;
  const fs::path a = scratch("a"), b = scratch("b");
  s.out_dir = a.string();
  const auto rep = run_experiment(s);
  s.out_dir = b.string();
  s.threads = 1;
  run_experiment(s);
  CHECK(rep.rows.size() == 3 * 2 * 2);
  for (const char* f : {"results.csv", "traces.csv"}) CHECK(slurp(a / f) == slurp(b / f));

  const std::string csv = slurp(a / "results.csv");
  const std::string golden =
      "scheme,value,drop,feasible,status,iterations,rate_iterations,converged,pce,sum_rate,tx_power,"
      "consumed_power,min_sinr,harvested_total\n";
  CHECK(csv.substr(0, golden.size()) == golden);
  CHECK(slurp(a / "traces.csv").rfind("scheme,value,drop,series,iteration,y\n", 0) == 0);

  // per-drop sum rate never falls with more budget
  for (const auto& r1 : rep.rows) {
    if (r1.scheme != Scheme::PassWpt || r1.value != 10.0) continue;
    for (const auto& r2 : rep.rows) {
      if (r2.scheme == Scheme::PassWpt && r2.drop == r1.drop && r2.value == 100.0)
        CHECK(r2.sum_rate >= r1.sum_rate * (1 - 1e-8));
    }
  }

  SUBCASE("report round trip and figures") {
    const ExperimentReport back = report_from_json(slurp(a / "report.json"));
    REQUIRE(back.rows.size() == rep.rows.size());
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
      CHECK(back.rows[i].pce == rep.rows[i].pce);
      CHECK(back.rows[i].sum_rate == rep.rows[i].sum_rate);
      CHECK(back.rows[i].trace == rep.rows[i].trace);
    }
    CHECK(back.spec.values == rep.spec.values);
    CHECK(report_to_json(back) == report_to_json(rep));

    std::ostringstream fig;
    emit_figure_data(back, Figure::RateVsPmax, fig);
    std::istringstream lines(fig.str());
    std::string header;
    std::getline(lines, header);
    CHECK(header == "p_max_dbm,scheme,sum_rate_mean,sum_rate_p10,sum_rate_p90");
    int n = 0;
    for (std::string l; std::getline(lines, l);) ++n;
    CHECK(n == 6);

    std::ostringstream none;
    try {
      emit_figure_data(back, Figure::PceVsGrid, none);
      FAIL("expected MissingAxis");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingAxis);
    }

    // aggregates are recomputable from rows
    const auto again = aggregate_rows(back.rows, back.spec);
    REQUIRE(again.size() == rep.aggregates.size());
    for (std::size_t i = 0; i < again.size(); ++i) CHECK(again[i].pce_median == rep.aggregates[i].pce_median);
  }
}

TEST_CASE("convergence figure") {
  ExperimentSpec s;
  s.base = small_scenario();
  s.values = {15.0};
  s.schemes = {Scheme::PassWpt};
  const auto rep = run_experiment(s);
  std::ostringstream os;
  emit_figure_data(rep, Figure::Convergence, os);
  CHECK(os.str().rfind("iteration,scheme,objective,p10,p90\n", 0) == 0);
  std::ostringstream tx;
  emit_figure_data(rep, Figure::TxPowerTrace, tx);
  CHECK(tx.str().rfind("iteration,scheme,tx_power,p10,p90\n", 0) == 0);
}
