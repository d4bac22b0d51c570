#include "doctest.h"

#include <cmath>
#include <set>

#include "passwpt/scenario.hpp"

using namespace passwpt;

TEST_CASE("uniform grid points and count") {
  auto g = uniform_grid(32.0, 8.0);
  CHECK(g.candidates == std::vector<double>{0, 8, 16, 24, 32});
  CHECK(g.count() == 5);

  g = uniform_grid(32.0, 33.0);
  CHECK(g.candidates == std::vector<double>{0});

  g = uniform_grid(10.0, 3.0);
  CHECK(g.candidates == std::vector<double>{0, 3, 6, 9});
}

TEST_CASE("grid rejects a non-positive step") {
  CHECK_THROWS_AS(uniform_grid(32.0, 0.0), Error);
  try {
    uniform_grid(32.0, -1.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonPositiveStep);
  }
}

TEST_CASE("grid size is floor(x_max/step)+1 and rebuilding gives the same grid") {
  for (double step : {0.7, 1.0, 2.5, 3.3, 8.0, 31.9}) {
    const auto a = uniform_grid(32.0, step);
    const auto b = uniform_grid(32.0, step);
    CHECK(a.candidates == b.candidates);
    CHECK(a.count() == static_cast<int>(std::floor(32.0 / step)) + 1);
    for (int i = 1; i < a.count(); ++i) CHECK(a.candidates[i] > a.candidates[i - 1]);
  }
}

TEST_CASE("explicit candidates override the uniform grid") {
  ScenarioConfig c = multi_user_defaults();
  CHECK(build_position_grid(c).candidates == std::vector<double>{8, 16, 24, 32});
  c.candidates.clear();
  c.grid_step = 8.0;
  CHECK(build_position_grid(c).candidates == std::vector<double>{0, 8, 16, 24, 32});
}

TEST_CASE("defaults") {
  const ScenarioConfig c = multi_user_defaults();
  CHECK(c.carrier_frequency == 28e9);
  CHECK(c.n_eff == 1.4);
  CHECK(c.noise_power == doctest::Approx(1e-11).epsilon(1e-12));
  CHECK(c.waveguide_height == 5.0);
  CHECK(c.waveguide_y == std::vector<double>{0, 10, 20, 30});
  CHECK(c.gamma_min == doctest::Approx(100.0));
  CHECK(c.mc_drops == 100);
  CHECK(c.solver_tol == 1e-4);
  CHECK(c.max_outer_iters == 60);
  CHECK(c.min_spacing() == doctest::Approx(0.5 * 299792458.0 / 28e9));
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config validation collects violations") {
  ScenarioConfig c = multi_user_defaults();
  c.zeta = {0.5, 1.5, 0.5, 0.5};
  c.waveguide_y = {0.0};
  c.grid_step = 1e-4;
  try {
    c.validate();
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    const std::string what = e.what();
    CHECK(what.find("zeta") != std::string::npos);
    CHECK(what.find("waveguide_y") != std::string::npos);
    CHECK(what.find("grid_step") != std::string::npos);
  }
}

TEST_CASE("user drop stays in the region and is reproducible") {
  const ScenarioConfig c = multi_user_defaults();
  const auto a = sample_user_drop(c, 42);
  const auto b = sample_user_drop(c, 42);
  REQUIRE(a.idr_positions.size() == 4);
  REQUIRE(a.ehr_positions.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(a.idr_positions[i].x == b.idr_positions[i].x);
    CHECK(a.idr_positions[i].y == b.idr_positions[i].y);
    for (const auto& p : {a.idr_positions[i], a.ehr_positions[i]}) {
      CHECK(p.x >= 0.0);
      CHECK(p.x <= 10.0);
      CHECK(p.y >= 0.0);
      CHECK(p.y <= 10.0);
      CHECK(p.z == 0.0);
    }
  }
  const auto other = sample_user_drop(c, 43);
  CHECK(other.idr_positions[0].x != a.idr_positions[0].x);
}

TEST_CASE("drop x-coordinates have the uniform mean") {
  ScenarioConfig c = multi_user_defaults();
  c.num_idrs = 1;
  c.num_ehrs = 1;
  c.zeta = {0.5};
  const int n = 10000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += sample_user_drop(c, derive_seed(7, i)).idr_positions[0].x;
  const double sigma = 10.0 / std::sqrt(12.0) / std::sqrt(double(n));
  CHECK(std::abs(sum / n - 5.0) < 3.0 * sigma);
}

TEST_CASE("derived seeds are distinct and order independent") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(20251014, i));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(1, 5) == derive_seed(1, 5));
  CHECK(derive_seed(1, 5) != derive_seed(2, 5));
}

TEST_CASE("placement validation") {
  ScenarioConfig c = two_user_defaults();
  c.grid_step = 8.0;
  const PositionGrid grid{{8, 16, 24, 32}};

  CHECK(validate_placement(Placement{{{8, 16, 24, 32}}}, c, grid).ok());

  auto v = validate_placement(Placement{{{8, 8, 24, 32}}}, c, grid);
  CHECK(v.has(ViolationKind::Spacing));

  v = validate_placement(Placement{{{8, 24, 16, 32}}}, c, grid);
  CHECK(v.has(ViolationKind::Ordering));

  v = validate_placement(Placement{{{8, 16, 24, 30}}}, c, grid);
  CHECK(v.has(ViolationKind::OffGrid));

  v = validate_placement(Placement{{{8, 16, 24}}}, c, grid);
  CHECK(v.has(ViolationKind::Dimension));

  v = validate_placement(Placement{{{8, 16, 24, 40}}}, c, PositionGrid{{8, 16, 24, 40}});
  CHECK(v.has(ViolationKind::OutOfRange));
}

TEST_CASE("accepted placements keep adjacent gaps of at least the spacing") {
  ScenarioConfig c = two_user_defaults();
  c.candidates.clear();
  c.grid_step = 2.0;
  c.x_max = 12.0;
  const PositionGrid grid = build_position_grid(c);
  const auto rows = enumerate_rows(c, grid, 100000);
  CHECK(!rows.empty());
  for (const auto& r : rows) {
    const Placement p{{r}};
    REQUIRE(validate_placement(p, c, grid).ok());
    for (std::size_t l = 1; l < r.size(); ++l) CHECK(r[l] - r[l - 1] >= 2.0 - 1e-12);
  }
  // C(7,4) subsets of {0,2,...,12}
  CHECK(rows.size() == 35);
}

TEST_CASE("exhaustive placement search finds the argmax, first maximum kept") {
  ScenarioConfig c = two_user_defaults();
  c.candidates = {0, 1, 2, 3, 4};
  c.grid_step = 1.0;
  c.pas_per_waveguide = 2;
  c.x_max = 4.0;
  const PositionGrid grid = build_position_grid(c);
  const Placement start = initial_placement(c, grid);
  const auto score = [](const Placement& p) -> std::optional<double> {
    const double s = p.x[0][0] + p.x[0][1];
    if (s > 6.0) return std::nullopt;
    return s;
  };
  const auto r = search_placements(c, grid, start, score);
  CHECK(r.found);
  CHECK(r.exhaustive);
  CHECK(r.score == 6.0);
  CHECK(r.best.x[0] == std::vector<double>{2, 4});
}
