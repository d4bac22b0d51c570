#include "passwpt/scenario.hpp"

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <random>
#include <sstream>

namespace passwpt {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveStep: return "NonPositiveStep";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InfeasibleAlpha: return "InfeasibleAlpha";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::DegenerateChannel: return "DegenerateChannel";
    case ErrorCode::InfeasibleLambda: return "InfeasibleLambda";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::NonconvexConstraint: return "NonconvexConstraint";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MissingAxis: return "MissingAxis";
  }
  return "Unknown";
}

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::Dimension: return "dimension";
    case ViolationKind::Ordering: return "ordering";
    case ViolationKind::Spacing: return "spacing";
    case ViolationKind::OffGrid: return "off_grid";
    case ViolationKind::OutOfRange: return "out_of_range";
  }
  return "unknown";
}

double ScenarioConfig::sinr_requirement() const {
  return std::max(gamma_min, std::exp2(r_min) - 1.0);
}

void ScenarioConfig::validate() const {
  std::vector<std::string> problems;
  auto require = [&](bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  };
  require(carrier_frequency > 0.0, "carrier_frequency must be > 0");
  require(n_eff >= 1.0, "n_eff must be >= 1");
  require(noise_power > 0.0, "noise_power must be > 0");
  require(waveguide_height > 0.0, "waveguide_height must be > 0");
  require(x_max > 0.0, "x_max must be > 0");
  if (carrier_frequency > 0.0) {
    require(grid_step == 0.0 || grid_step >= 0.5 * wavelength() * (1.0 - 1e-12),
            "grid_step must be >= half a wavelength");
  }
  require(grid_step >= 0.0, "grid_step must be >= 0");
  require(region_x > 0.0 && region_y > 0.0, "region_x and region_y must be > 0");
  require(num_waveguides >= 1, "num_waveguides must be >= 1");
  require(pas_per_waveguide >= 1, "pas_per_waveguide must be >= 1");
  require(num_idrs >= 1, "num_idrs must be >= 1");
  require(num_ehrs >= 1, "num_ehrs must be >= 1");
  require(static_cast<int>(waveguide_y.size()) == num_waveguides,
          "waveguide_y must have num_waveguides entries");
  require(static_cast<int>(zeta.size()) == num_ehrs, "zeta must have num_ehrs entries");
  for (double z : zeta) require(z > 0.0 && z < 1.0, "zeta entries must lie in (0,1)");
  require(gamma_min > 0.0, "gamma_min must be > 0");
  require(p_max > 0.0, "p_max must be > 0");
  require(p_min >= 0.0, "p_min must be >= 0");
  require(p_circuit >= 0.0, "p_circuit must be >= 0");
  require(phi > 0.0, "phi must be > 0");
  require(rho_min >= 0.0, "rho_min must be >= 0");
  require(solver_tol > 0.0, "solver_tol must be > 0");
  require(max_outer_iters >= 1, "max_outer_iters must be >= 1");
  require(mc_drops >= 1, "mc_drops must be >= 1");
  require(scaling_factor > 1.0, "scaling_factor must be > 1");
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    require(candidates[i] > candidates[i - 1], "candidates must be strictly increasing");
  }
  for (double c : candidates) require(c >= 0.0 && c <= x_max, "candidates must lie in [0, x_max]");
  if (!problems.empty()) {
    std::ostringstream os;
    for (std::size_t i = 0; i < problems.size(); ++i) os << (i ? "; " : "") << problems[i];
    throw Error(ErrorCode::ConfigError, os.str());
  }
}

ScenarioConfig multi_user_defaults() { return ScenarioConfig{}; }

ScenarioConfig two_user_defaults() {
  ScenarioConfig c;
  c.num_waveguides = 1;
  c.pas_per_waveguide = 4;
  c.num_idrs = 1;
  c.num_ehrs = 1;
  c.waveguide_y = {0.0};
  c.zeta = {0.5};
  return c;
}

PositionGrid uniform_grid(double x_max, double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::NonPositiveStep, "grid step must be positive");
  if (!(x_max >= 0.0)) throw Error(ErrorCode::ConfigError, "x_max must be non-negative");
  // Relative slack keeps x_max/step = 4 - 1ulp from dropping the last point.
  const auto j = static_cast<long>(std::floor(x_max / step * (1.0 + 1e-12))) + 1;
  PositionGrid grid;
  grid.candidates.reserve(static_cast<std::size_t>(j));
  for (long b = 0; b < j; ++b) grid.candidates.push_back(static_cast<double>(b) * step);
  return grid;
}

PositionGrid build_position_grid(const ScenarioConfig& config) {
  if (!config.candidates.empty()) {
    PositionGrid grid;
    grid.candidates = config.candidates;
    return grid;
  }
  return uniform_grid(config.x_max, config.min_spacing());
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(base) ^ (index * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
}

UserLayout sample_user_drop(const ScenarioConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, config.region_x);
  std::uniform_real_distribution<double> uy(0.0, config.region_y);
  UserLayout layout;
  for (int k = 0; k < config.num_idrs; ++k) {
    const double x = ux(rng);
    const double y = uy(rng);
    layout.idr_positions.push_back({x, y, 0.0});
  }
  for (int q = 0; q < config.num_ehrs; ++q) {
    const double x = ux(rng);
    const double y = uy(rng);
    layout.ehr_positions.push_back({x, y, 0.0});
  }
  return layout;
}

bool PlacementValidation::has(ViolationKind kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [kind](const PlacementViolation& v) { return v.kind == kind; });
}

PlacementValidation validate_placement(const Placement& placement, const ScenarioConfig& config) {
  return validate_placement(placement, config, build_position_grid(config));
}

PlacementValidation validate_placement(const Placement& placement, const ScenarioConfig& config,
                                       const PositionGrid& grid) {
  PlacementValidation out;
  auto add = [&](ViolationKind kind, int n, int l, std::string msg) {
    out.violations.push_back({kind, n, l, std::move(msg)});
  };
  if (placement.waveguides() != config.num_waveguides) {
    add(ViolationKind::Dimension, -1, -1, "expected " + std::to_string(config.num_waveguides) +
                                              " waveguides, got " +
                                              std::to_string(placement.waveguides()));
    return out;
  }
  const double spacing = config.min_spacing();
  const double tol = 1e-9 * std::max(1.0, config.x_max);
  for (int n = 0; n < placement.waveguides(); ++n) {
    const auto& row = placement.x[static_cast<std::size_t>(n)];
    if (static_cast<int>(row.size()) != config.pas_per_waveguide) {
      add(ViolationKind::Dimension, n, -1,
          "expected " + std::to_string(config.pas_per_waveguide) + " PAs");
      continue;
    }
    for (int l = 0; l < static_cast<int>(row.size()); ++l) {
      const double x = row[static_cast<std::size_t>(l)];
      if (x < -tol || x > config.x_max + tol) {
        add(ViolationKind::OutOfRange, n, l, "position outside [0, x_max]");
      }
      const auto it = std::lower_bound(grid.candidates.begin(), grid.candidates.end(), x - tol);
      if (it == grid.candidates.end() || std::abs(*it - x) > tol) {
        add(ViolationKind::OffGrid, n, l, "position is not a grid candidate");
      }
      if (l > 0) {
        const double prev = row[static_cast<std::size_t>(l - 1)];
        if (x < prev) {
          add(ViolationKind::Ordering, n, l, "positions not increasing");
        } else if (x - prev < spacing - tol) {
          add(ViolationKind::Spacing, n, l, "adjacent PAs closer than the minimum spacing");
        }
      }
    }
  }
  return out;
}

Placement initial_placement(const ScenarioConfig& config, const PositionGrid& grid) {
  const int L = config.pas_per_waveguide;
  const int J = grid.count();
  const double spacing = config.min_spacing();
  if (J < L) throw Error(ErrorCode::ConfigError, "fewer candidates than PAs per waveguide");
  std::vector<double> row;
  row.reserve(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) {
    const int idx = L == 1 ? 0 : static_cast<int>(std::lround(double(l) * double(J - 1) / double(L - 1)));
    row.push_back(grid.candidates[static_cast<std::size_t>(idx)]);
  }
  // Dense explicit candidate lists can violate the spacing rule; fall back to
  // a greedy left-to-right pick.
  bool ok = true;
  for (int l = 1; l < L; ++l) {
    if (row[static_cast<std::size_t>(l)] - row[static_cast<std::size_t>(l - 1)] < spacing * (1 - 1e-12)) ok = false;
  }
  if (!ok) {
    row.clear();
    double last = -1e300;
    for (double c : grid.candidates) {
      if (static_cast<int>(row.size()) == L) break;
      if (c - last >= spacing * (1 - 1e-12)) {
        row.push_back(c);
        last = c;
      }
    }
    if (static_cast<int>(row.size()) < L) {
      throw Error(ErrorCode::ConfigError, "candidate grid cannot host L PAs at the minimum spacing");
    }
  }
  Placement p;
  p.x.assign(static_cast<std::size_t>(config.num_waveguides), row);
  return p;
}

std::vector<std::vector<double>> enumerate_rows(const ScenarioConfig& config, const PositionGrid& grid,
                                                std::size_t max_rows) {
  const int L = config.pas_per_waveguide;
  const double gap = config.min_spacing() * (1.0 - 1e-12);
  std::vector<std::vector<double>> out;
  std::vector<double> row;
  // Depth-first in candidate order gives lexicographic output.
  auto rec = [&](auto&& self, int start) -> bool {
    if (static_cast<int>(row.size()) == L) {
      out.push_back(row);
      return out.size() <= max_rows;
    }
    for (int b = start; b < grid.count(); ++b) {
      const double x = grid.candidates[static_cast<std::size_t>(b)];
      if (!row.empty() && x - row.back() < gap) continue;
      if (grid.count() - b < L - static_cast<int>(row.size())) break;
      row.push_back(x);
      const bool more = self(self, b + 1);
      row.pop_back();
      if (!more) return false;
    }
    return true;
  };
  rec(rec, 0);
  return out;
}

std::size_t placement_count(std::size_t rows, int waveguides) {
  std::size_t total = 1;
  for (int n = 0; n < waveguides; ++n) {
    if (rows != 0 && total > SIZE_MAX / rows) return SIZE_MAX;
    total *= rows;
  }
  return total;
}

Placement placement_at(const std::vector<std::vector<double>>& rows, int waveguides, std::size_t index) {
  Placement p;
  p.x.resize(static_cast<std::size_t>(waveguides));
  for (int n = waveguides - 1; n >= 0; --n) {
    p.x[static_cast<std::size_t>(n)] = rows[index % rows.size()];
    index /= rows.size();
  }
  return p;
}

PlacementSearchResult search_placements(const ScenarioConfig& config, const PositionGrid& grid,
                                        const Placement& start, const PlacementScore& score,
                                        std::size_t exhaustive_limit) {
  PlacementSearchResult res;
  auto consider = [&](const Placement& p) {
    ++res.evaluated;
    const auto v = score(p);
    if (v && (!res.found || *v > res.score)) {
      res.best = p;
      res.score = *v;
      res.found = true;
      return true;
    }
    return false;
  };
  const auto rows = enumerate_rows(config, grid, exhaustive_limit);
  const std::size_t total = rows.size() > exhaustive_limit ? SIZE_MAX
                                                          : placement_count(rows.size(), config.num_waveguides);
  if (total <= exhaustive_limit && !rows.empty()) {
    res.exhaustive = true;
    for (std::size_t i = 0; i < total; ++i) consider(placement_at(rows, config.num_waveguides, i));
    return res;
  }
  consider(start);
  Placement cur = start;
  const double gap = config.min_spacing() * (1.0 - 1e-12);
  for (int pass = 0; pass < 50; ++pass) {
    bool improved = false;
    for (int n = 0; n < cur.waveguides(); ++n) {
      auto& row = cur.x[static_cast<std::size_t>(n)];
      for (int l = 0; l < static_cast<int>(row.size()); ++l) {
        const double lo = l > 0 ? row[static_cast<std::size_t>(l - 1)] + gap : -1e300;
        const double hi = l + 1 < static_cast<int>(row.size()) ? row[static_cast<std::size_t>(l + 1)] - gap : 1e300;
        const double keep = row[static_cast<std::size_t>(l)];
        double best_x = keep;
        for (double c : grid.candidates) {
          if (c < lo || c > hi || c == keep) continue;
          row[static_cast<std::size_t>(l)] = c;
          if (consider(cur)) best_x = c;
        }
        row[static_cast<std::size_t>(l)] = best_x;
        if (best_x != keep) improved = true;
      }
    }
    if (!improved) break;
  }
  return res;
}

}  // namespace passwpt
