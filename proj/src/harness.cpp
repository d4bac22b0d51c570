#include "passwpt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include "passwpt/baselines.hpp"
#include "passwpt/config_io.hpp"

#ifndef PASSWPT_VERSION
#define PASSWPT_VERSION "dev"
#endif

namespace passwpt {
namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + "\"";
}

double min_of(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::min_element(v.begin(), v.end()); }

double sum_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

struct WarmStart {
  Placement placement;
  VectorXd alpha;
  BeamformingMatrix w;
};

// Previous solution carried onto the new scenario. A larger L gets the extra
// PAs at free grid points with alpha = 0, which leaves every channel as it was.
std::optional<WarmStart> carry_over(const MultiUserResult& prev, const ScenarioConfig& prev_cfg,
                                    const ScenarioConfig& cfg) {
  if (prev_cfg.num_waveguides != cfg.num_waveguides || prev_cfg.num_idrs != cfg.num_idrs ||
      prev_cfg.num_ehrs != cfg.num_ehrs || cfg.pas_per_waveguide < prev_cfg.pas_per_waveguide) {
    return std::nullopt;
  }
  const PositionGrid grid = build_position_grid(cfg);
  const int nw = cfg.num_waveguides;
  const int l_old = prev_cfg.pas_per_waveguide;
  const int l_new = cfg.pas_per_waveguide;
  const double gap = cfg.min_spacing() * (1.0 - 1e-12);
  WarmStart ws;
  ws.alpha = VectorXd::Zero(nw * l_new);
  for (int n = 0; n < nw; ++n) {
    std::vector<std::pair<double, double>> row;  // (x, alpha)
    for (int l = 0; l < l_old; ++l) {
      row.emplace_back(prev.placement.x[static_cast<std::size_t>(n)][static_cast<std::size_t>(l)],
                       prev.alpha.at(n, l));
    }
    for (double c : grid.candidates) {
      if (static_cast<int>(row.size()) == l_new) break;
      const bool clear = std::all_of(row.begin(), row.end(), [&](const auto& p) { return std::abs(p.first - c) >= gap; });
      if (clear) row.emplace_back(c, 0.0);
    }
    if (static_cast<int>(row.size()) != l_new) return std::nullopt;
    std::sort(row.begin(), row.end());
    std::vector<double> xs;
    for (int l = 0; l < l_new; ++l) {
      xs.push_back(row[static_cast<std::size_t>(l)].first);
      ws.alpha[n * l_new + l] = row[static_cast<std::size_t>(l)].second;
    }
    ws.placement.x.push_back(std::move(xs));
  }
  if (!validate_placement(ws.placement, cfg, grid).ok()) return std::nullopt;
  ws.w = prev.w;
  const double pw = ws.w.power();
  if (pw > cfg.p_max) ws.w.w *= std::sqrt(cfg.p_max / pw);
  return ws;
}

double design_value(const MultiUserResult& r, Objective obj) {
  return obj == Objective::Pce ? r.metrics.pce : r.metrics.sum_rate;
}

// Solves from `base` and from each extra start; the feasible result with
// the largest objective wins, earlier ones on ties.
MultiUserResult best_of(const ScenarioConfig& cfg, const UserLayout& layout, const MultiUserOptions& base,
                        const std::vector<std::optional<WarmStart>>& starts, Objective obj) {
  MultiUserResult best = solve_multi_user(cfg, layout, base);
  for (const auto& st : starts) {
    if (!st) continue;
    MultiUserOptions wo = base;
    wo.start_placement = st->placement;
    wo.start_alpha = st->alpha;
    wo.start_w = st->w;
    try {
      MultiUserResult r = solve_multi_user(cfg, layout, wo);
      const bool better =
          r.report.feasible && (!best.report.feasible || design_value(r, obj) > design_value(best, obj));
      if (better) best = std::move(r);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Infeasible) throw;
    }
  }
  return best;
}

ExperimentRow pass_wpt_row(const ScenarioConfig& cfg, const UserLayout& layout, DropState* warm) {
  ExperimentRow row;
  MultiUserOptions po;
  po.objective = Objective::Pce;
  std::optional<WarmStart> w_pce, w_rate;
  if (warm && warm->pce) w_pce = carry_over(*warm->pce, warm->config, cfg);
  if (warm && warm->rate) w_rate = carry_over(*warm->rate, warm->config, cfg);
  const MultiUserResult pce = best_of(cfg, layout, po, {w_pce}, Objective::Pce);

  // Rate stage from the default start, from the PCE design, and warm.
  MultiUserOptions ro;
  ro.objective = Objective::SumRate;
  ro.constraints.pce_floor = cfg.rho_min;
  const WarmStart from_pce{pce.placement, pce.alpha.alpha(), pce.w};
  const MultiUserResult rate = best_of(cfg, layout, ro, {from_pce, w_rate}, Objective::SumRate);

  row.feasible = pce.report.feasible && rate.report.feasible;
  row.status = pce.report.status != "ok" ? pce.report.status : rate.report.status;
  row.iterations = pce.report.iterations;
  row.rate_iterations = rate.report.iterations;
  row.converged = pce.report.converged && rate.report.converged;
  row.pce_design = pce.metrics;
  row.rate_design = rate.metrics;
  row.consumed_power = consumed_power(pce.w, cfg);
  row.trace = pce.report.objective;
  row.power_trace = pce.report.p0;
  row.rate_trace = rate.report.objective;
  if (warm) {
    warm->config = cfg;
    warm->pce = pce;
    warm->rate = rate;
  }
  return row;
}

ExperimentRow equal_power_row(const ScenarioConfig& cfg, const UserLayout& layout) {
  ExperimentRow row;
  const BaselineResult pce = equal_power_pass(cfg, layout, Objective::Pce);
  const BaselineResult rate = equal_power_pass(cfg, layout, Objective::SumRate);
  row.feasible = pce.feasible && rate.feasible;
  row.status = pce.status != "ok" ? pce.status : rate.status;
  row.iterations = pce.iterations;
  row.rate_iterations = rate.iterations;
  row.converged = pce.converged && rate.converged;
  row.pce_design = pce.metrics;
  row.rate_design = rate.metrics;
  if (pce.feasible) row.consumed_power = consumed_power(pce.w, cfg);
  row.trace = pce.trace;
  row.rate_trace = rate.trace;
  return row;
}

ExperimentRow mimo_row(const ScenarioConfig& cfg, const UserLayout& layout) {
  ExperimentRow row;
  const BaselineResult r = mimo_swipt(cfg, layout);
  row.feasible = r.feasible;
  row.status = r.status;
  row.iterations = r.iterations;
  row.rate_iterations = r.iterations;
  row.converged = r.converged;
  row.pce_design = r.metrics;
  row.rate_design = r.metrics;
  if (r.feasible) row.consumed_power = consumed_power(r.w, cfg);
  row.trace = r.trace;
  row.power_trace = r.trace;
  row.rate_trace = r.trace;
  return row;
}

json metrics_json(const MetricsReport& m) {
  return json{{"sinr", m.sinr},           {"rates", m.rates}, {"sum_rate", m.sum_rate},
              {"harvested", m.harvested}, {"pce", m.pce},     {"tx_power", m.tx_power}};
}

MetricsReport metrics_from(const json& j) {
  MetricsReport m;
  m.sinr = j.at("sinr").get<std::vector<double>>();
  m.rates = j.at("rates").get<std::vector<double>>();
  m.sum_rate = j.at("sum_rate").get<double>();
  m.harvested = j.at("harvested").get<std::vector<double>>();
  m.pce = j.at("pce").get<double>();
  m.tx_power = j.at("tx_power").get<double>();
  return m;
}

struct Stats {
  double mean = 0.0, p10 = 0.0, p90 = 0.0;
};

Stats stats(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return s;
  s.mean = sum_of(v) / static_cast<double>(v.size());
  s.p10 = percentile(v, 10.0);
  s.p90 = percentile(v, 90.0);
  return s;
}

}  // namespace

const char* to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Iterations: return "iterations";
    case SweepAxis::GammaMin: return "gamma_min";
    case SweepAxis::GridDensity: return "grid_density";
    case SweepAxis::PasPerWaveguide: return "pas_per_waveguide";
    case SweepAxis::PMax: return "p_max";
  }
  return "?";
}

const char* to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::PassWpt: return "pass-wpt";
    case Scheme::EqualPower: return "ep-pass";
    case Scheme::Mimo: return "mimo";
  }
  return "?";
}

const char* to_string(Figure figure) {
  switch (figure) {
    case Figure::Convergence: return "convergence";
    case Figure::PowerVsSinr: return "power_vs_sinr";
    case Figure::TxPowerTrace: return "txpower_trace";
    case Figure::PceVsGrid: return "pce_vs_grid";
    case Figure::RateVsL: return "rate_vs_L";
    case Figure::RateVsPmax: return "rate_vs_pmax";
  }
  return "?";
}

SweepAxis parse_axis(const std::string& name) {
  for (SweepAxis a : {SweepAxis::Iterations, SweepAxis::GammaMin, SweepAxis::GridDensity,
                      SweepAxis::PasPerWaveguide, SweepAxis::PMax}) {
    if (name == to_string(a)) return a;
  }
  if (name == "L") return SweepAxis::PasPerWaveguide;
  config_error("unknown sweep axis '" + name + "'");
}

Scheme parse_scheme(const std::string& name) {
  for (Scheme s : {Scheme::PassWpt, Scheme::EqualPower, Scheme::Mimo}) {
    if (name == to_string(s)) return s;
  }
  config_error("unknown scheme '" + name + "'");
}

Figure parse_figure(const std::string& name) {
  for (Figure f : {Figure::Convergence, Figure::PowerVsSinr, Figure::TxPowerTrace, Figure::PceVsGrid,
                   Figure::RateVsL, Figure::RateVsPmax}) {
    if (name == to_string(f)) return f;
  }
  config_error("unknown figure '" + name + "'");
}

void ExperimentSpec::validate() const {
  base.validate();
  if (values.empty()) config_error("sweep values must not be empty");
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) config_error("sweep values must be strictly increasing");
  }
  const bool integral = axis == SweepAxis::Iterations || axis == SweepAxis::GridDensity ||
                        axis == SweepAxis::PasPerWaveguide;
  for (double v : values) {
    if (!(v > 0.0)) config_error("sweep values must be positive");
    if (integral && v != std::round(v)) config_error("sweep values must be integers for this axis");
  }
  if (drops < 1) config_error("drops must be >= 1");
  if (threads < 1) config_error("threads must be >= 1");
  if (schemes.empty()) config_error("schemes must not be empty");
}

std::vector<double> density_candidates(double x_max, int count) {
  std::vector<double> c;
  for (int b = 1; b <= count; ++b) c.push_back(x_max * b / count);
  return c;
}

ScenarioConfig apply_axis(const ScenarioConfig& base, SweepAxis axis, double value) {
  ScenarioConfig c = base;
  switch (axis) {
    case SweepAxis::Iterations: c.max_outer_iters = static_cast<int>(value); break;
    case SweepAxis::GammaMin: c.gamma_min = value; break;
    case SweepAxis::GridDensity: c.candidates = density_candidates(c.x_max, static_cast<int>(value)); break;
    case SweepAxis::PasPerWaveguide: c.pas_per_waveguide = static_cast<int>(value); break;
    case SweepAxis::PMax: c.p_max = value; break;
  }
  return c;
}

ExperimentRow run_scheme(Scheme scheme, const ScenarioConfig& config, const UserLayout& layout, DropState* warm) {
  ExperimentRow row;
  try {
    switch (scheme) {
      case Scheme::PassWpt: row = pass_wpt_row(config, layout, warm); break;
      case Scheme::EqualPower: row = equal_power_row(config, layout); break;
      case Scheme::Mimo: row = mimo_row(config, layout); break;
    }
  } catch (const std::exception& e) {
    row = ExperimentRow{};
    row.feasible = false;
    row.status = e.what();
    if (warm) *warm = DropState{};
  }
  row.scheme = scheme;
  row.pce = row.feasible ? row.pce_design.pce : 0.0;
  row.sum_rate = row.feasible ? row.rate_design.sum_rate : 0.0;
  return row;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return percentile(std::move(values), 50.0); }

std::vector<Aggregate> aggregate_rows(const std::vector<ExperimentRow>& rows, const ExperimentSpec& spec) {
  std::vector<Aggregate> out;
  for (double v : spec.values) {
    for (Scheme s : spec.schemes) {
      Aggregate a;
      a.scheme = s;
      a.value = v;
      std::vector<double> pce, rate, power;
      for (const auto& r : rows) {
        if (r.scheme != s || r.value != v) continue;
        ++a.drops;
        pce.push_back(r.pce);
        rate.push_back(r.sum_rate);
        if (r.feasible) {
          ++a.feasible;
          power.push_back(r.consumed_power);
        }
      }
      const Stats ps = stats(pce), rs = stats(rate), ws = stats(power);
      a.pce_mean = ps.mean;
      a.pce_median = median(pce);
      a.pce_p10 = ps.p10;
      a.pce_p90 = ps.p90;
      a.rate_mean = rs.mean;
      a.rate_median = median(rate);
      a.rate_p10 = rs.p10;
      a.rate_p90 = rs.p90;
      a.power_mean = ws.mean;
      a.power_p10 = ws.p10;
      a.power_p90 = ws.p90;
      out.push_back(a);
    }
  }
  return out;
}

std::vector<TraceAggregate> aggregate_traces(const std::vector<ExperimentRow>& rows, const ExperimentSpec& spec) {
  std::vector<TraceAggregate> out;
  for (double v : spec.values) {
    for (Scheme s : spec.schemes) {
      for (const char* series : {"objective", "tx_power"}) {
        std::vector<const std::vector<double>*> traces;
        std::size_t len = 0;
        for (const auto& r : rows) {
          if (r.scheme != s || r.value != v || !r.feasible) continue;
          const auto& t = std::string(series) == "objective" ? r.trace : r.power_trace;
          if (t.empty()) continue;
          traces.push_back(&t);
          len = std::max(len, t.size());
        }
        for (std::size_t i = 0; i < len; ++i) {
          std::vector<double> at;
          for (const auto* t : traces) at.push_back((*t)[std::min(i, t->size() - 1)]);
          const Stats st = stats(at);
          out.push_back({s, v, series, static_cast<int>(i), st.mean, st.p10, st.p90});
        }
      }
    }
  }
  return out;
}

void write_rows_csv_header(std::ostream& os) {
  os << "scheme,value,drop,feasible,status,iterations,rate_iterations,converged,pce,sum_rate,tx_power,"
        "consumed_power,min_sinr,harvested_total\n";
}

void write_row_csv(std::ostream& os, const ExperimentRow& r) {
  os << to_string(r.scheme) << ',' << num(r.value) << ',' << r.drop << ',' << (r.feasible ? 1 : 0) << ','
     << csv_text(r.status) << ',' << r.iterations << ',' << r.rate_iterations << ',' << (r.converged ? 1 : 0)
     << ',' << num(r.pce) << ',' << num(r.sum_rate) << ',' << num(r.pce_design.tx_power) << ','
     << num(r.consumed_power) << ',' << num(min_of(r.pce_design.sinr)) << ','
     << num(sum_of(r.pce_design.harvested)) << '\n';
}

void write_traces_csv(std::ostream& os, const std::vector<ExperimentRow>& rows) {
  os << "scheme,value,drop,series,iteration,y\n";
  for (const auto& r : rows) {
    const std::pair<const char*, const std::vector<double>*> series[] = {
        {"objective", &r.trace}, {"tx_power", &r.power_trace}, {"rate_objective", &r.rate_trace}};
    for (const auto& [name, t] : series) {
      for (std::size_t i = 0; i < t->size(); ++i) {
        os << to_string(r.scheme) << ',' << num(r.value) << ',' << r.drop << ',' << name << ',' << i << ','
           << num((*t)[i]) << '\n';
      }
    }
  }
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentReport report;
  report.spec = spec;
  report.provenance.config_hash = fnv1a_hex(experiment_to_json(spec).dump());
  report.provenance.seed = spec.base.rng_seed;
  report.provenance.code_version = PASSWPT_VERSION;

  std::ofstream results;
  namespace fs = std::filesystem;
  if (!spec.out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(spec.out_dir, ec);
    results.open(fs::path(spec.out_dir) / "results.csv", std::ios::binary);
    if (!results) throw Error(ErrorCode::IoError, "cannot write to " + spec.out_dir);
    write_rows_csv_header(results);
  }

  const auto drops = static_cast<std::size_t>(spec.drops);
  std::vector<std::optional<std::vector<ExperimentRow>>> done(drops);
  std::size_t flushed = 0;
  std::mutex mu;
  std::atomic<std::size_t> next{0};

  const auto run_drop = [&](std::size_t d) {
    const UserLayout layout = sample_user_drop(spec.base, derive_seed(spec.base.rng_seed, d));
    std::map<Scheme, DropState> state;
    std::vector<ExperimentRow> rows;
    for (double v : spec.values) {
      ScenarioConfig cfg;
      try {
        cfg = apply_axis(spec.base, spec.axis, v);
        cfg.validate();
      } catch (const Error& e) {
        for (Scheme s : spec.schemes) {
          ExperimentRow r;
          r.scheme = s;
          r.feasible = false;
          r.status = e.what();
          r.value = v;
          r.drop = static_cast<int>(d);
          rows.push_back(r);
        }
        continue;
      }
      for (Scheme s : spec.schemes) {
        DropState* warm = spec.warm_start ? &state[s] : nullptr;
        ExperimentRow r = run_scheme(s, cfg, layout, warm);
        r.value = v;
        r.drop = static_cast<int>(d);
        rows.push_back(std::move(r));
      }
    }
    return rows;
  };

  const auto worker = [&]() {
    for (std::size_t d = next++; d < drops; d = next++) {
      std::vector<ExperimentRow> rows = run_drop(d);
      std::lock_guard<std::mutex> lock(mu);
      done[d] = std::move(rows);
      while (flushed < drops && done[flushed]) {
        if (results) {
          for (const auto& r : *done[flushed]) write_row_csv(results, r);
          results.flush();
        }
        ++flushed;
      }
    }
  };

  const int threads = std::min<int>(spec.threads, spec.drops);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (auto& d : done) {
    for (auto& r : *d) report.rows.push_back(std::move(r));
  }
  report.aggregates = aggregate_rows(report.rows, spec);
  report.trace_aggregates = aggregate_traces(report.rows, spec);

  if (!spec.out_dir.empty()) {
    std::ofstream traces(fs::path(spec.out_dir) / "traces.csv", std::ios::binary);
    std::ofstream js(fs::path(spec.out_dir) / "report.json", std::ios::binary);
    if (!traces || !js) throw Error(ErrorCode::IoError, "cannot write to " + spec.out_dir);
    write_traces_csv(traces, report.rows);
    js << report_to_json(report) << '\n';
  }
  return report;
}

std::string report_to_json(const ExperimentReport& report) {
  json j;
  j["spec"] = experiment_to_json(report.spec);
  j["values_si"] = report.spec.values;
  j["provenance"] = {{"config_hash", report.provenance.config_hash},
                     {"seed", report.provenance.seed},
                     {"code_version", report.provenance.code_version}};
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"scheme", to_string(r.scheme)},
                    {"value", r.value},
                    {"drop", r.drop},
                    {"feasible", r.feasible},
                    {"status", r.status},
                    {"iterations", r.iterations},
                    {"rate_iterations", r.rate_iterations},
                    {"converged", r.converged},
                    {"pce", r.pce},
                    {"sum_rate", r.sum_rate},
                    {"consumed_power", r.consumed_power},
                    {"pce_design", metrics_json(r.pce_design)},
                    {"rate_design", metrics_json(r.rate_design)},
                    {"trace", r.trace},
                    {"power_trace", r.power_trace},
                    {"rate_trace", r.rate_trace}});
  }
  j["rows"] = rows;
  json aggs = json::array();
  for (const auto& a : report.aggregates) {
    aggs.push_back({{"scheme", to_string(a.scheme)}, {"value", a.value},         {"feasible", a.feasible},
                    {"drops", a.drops},             {"pce_mean", a.pce_mean},    {"pce_median", a.pce_median},
                    {"pce_p10", a.pce_p10},         {"pce_p90", a.pce_p90},      {"rate_mean", a.rate_mean},
                    {"rate_median", a.rate_median}, {"rate_p10", a.rate_p10},    {"rate_p90", a.rate_p90},
                    {"power_mean", a.power_mean},   {"power_p10", a.power_p10},  {"power_p90", a.power_p90}});
  }
  j["aggregates"] = aggs;
  json traces = json::array();
  for (const auto& t : report.trace_aggregates) {
    traces.push_back({{"scheme", to_string(t.scheme)}, {"value", t.value}, {"series", t.series},
                      {"iteration", t.iteration},      {"mean", t.mean},   {"p10", t.p10},
                      {"p90", t.p90}});
  }
  j["trace_aggregates"] = traces;
  return j.dump(1);
}

ExperimentReport report_from_json(const std::string& text) {
  ExperimentReport rep;
  try {
    const json j = json::parse(text);
    rep.spec = experiment_from_json(j.at("spec"));
    if (j.contains("values_si")) rep.spec.values = j.at("values_si").get<std::vector<double>>();
    const json& p = j.at("provenance");
    rep.provenance.config_hash = p.at("config_hash").get<std::string>();
    rep.provenance.seed = p.at("seed").get<std::uint64_t>();
    rep.provenance.code_version = p.at("code_version").get<std::string>();
    for (const auto& r : j.at("rows")) {
      ExperimentRow row;
      row.scheme = parse_scheme(r.at("scheme").get<std::string>());
      row.value = r.at("value").get<double>();
      row.drop = r.at("drop").get<int>();
      row.feasible = r.at("feasible").get<bool>();
      row.status = r.at("status").get<std::string>();
      row.iterations = r.at("iterations").get<int>();
      row.rate_iterations = r.at("rate_iterations").get<int>();
      row.converged = r.at("converged").get<bool>();
      row.pce = r.at("pce").get<double>();
      row.sum_rate = r.at("sum_rate").get<double>();
      row.consumed_power = r.at("consumed_power").get<double>();
      row.pce_design = metrics_from(r.at("pce_design"));
      row.rate_design = metrics_from(r.at("rate_design"));
      row.trace = r.at("trace").get<std::vector<double>>();
      row.power_trace = r.at("power_trace").get<std::vector<double>>();
      row.rate_trace = r.at("rate_trace").get<std::vector<double>>();
      rep.rows.push_back(std::move(row));
    }
    for (const auto& a : j.at("aggregates")) {
      Aggregate g;
      g.scheme = parse_scheme(a.at("scheme").get<std::string>());
      g.value = a.at("value").get<double>();
      g.feasible = a.at("feasible").get<int>();
      g.drops = a.at("drops").get<int>();
      g.pce_mean = a.at("pce_mean").get<double>();
      g.pce_median = a.at("pce_median").get<double>();
      g.pce_p10 = a.at("pce_p10").get<double>();
      g.pce_p90 = a.at("pce_p90").get<double>();
      g.rate_mean = a.at("rate_mean").get<double>();
      g.rate_median = a.at("rate_median").get<double>();
      g.rate_p10 = a.at("rate_p10").get<double>();
      g.rate_p90 = a.at("rate_p90").get<double>();
      g.power_mean = a.at("power_mean").get<double>();
      g.power_p10 = a.at("power_p10").get<double>();
      g.power_p90 = a.at("power_p90").get<double>();
      rep.aggregates.push_back(g);
    }
    for (const auto& t : j.at("trace_aggregates")) {
      rep.trace_aggregates.push_back({parse_scheme(t.at("scheme").get<std::string>()), t.at("value").get<double>(),
                                      t.at("series").get<std::string>(), t.at("iteration").get<int>(),
                                      t.at("mean").get<double>(), t.at("p10").get<double>(),
                                      t.at("p90").get<double>()});
    }
  } catch (const json::exception& e) {
    config_error(std::string("report: ") + e.what());
  }
  return rep;
}

void emit_figure_data(const ExperimentReport& report, Figure figure, std::ostream& os) {
  const SweepAxis axis = report.spec.axis;
  const auto need = [&](SweepAxis a) {
    if (axis != a) {
      throw Error(ErrorCode::MissingAxis, std::string(to_string(figure)) + " needs a " + to_string(a) +
                                              " sweep, report has " + to_string(axis));
    }
  };
  if (figure == Figure::Convergence || figure == Figure::TxPowerTrace) {
    need(SweepAxis::Iterations);
    const std::string series = figure == Figure::Convergence ? "objective" : "tx_power";
    os << "iteration,scheme," << series << ",p10,p90\n";
    const double v0 = report.spec.values.front();
    for (Scheme s : report.spec.schemes) {
      for (const auto& t : report.trace_aggregates) {
        if (t.scheme != s || t.value != v0 || t.series != series) continue;
        os << t.iteration << ',' << to_string(s) << ',' << num(t.mean) << ',' << num(t.p10) << ','
           << num(t.p90) << '\n';
      }
    }
    return;
  }
  const char* x_name = "";
  const char* metric = "";
  switch (figure) {
    case Figure::PowerVsSinr: need(SweepAxis::GammaMin); x_name = "gamma_min_db"; metric = "consumed_power"; break;
    case Figure::PceVsGrid: need(SweepAxis::GridDensity); x_name = "grid_density"; metric = "pce"; break;
    case Figure::RateVsL: need(SweepAxis::PasPerWaveguide); x_name = "L"; metric = "sum_rate"; break;
    case Figure::RateVsPmax: need(SweepAxis::PMax); x_name = "p_max_dbm"; metric = "sum_rate"; break;
    default: break;
  }
  os << x_name << ",scheme," << metric << "_mean," << metric << "_p10," << metric << "_p90\n";
  for (const auto& a : report.aggregates) {
    double m = 0.0, lo = 0.0, hi = 0.0;
    if (figure == Figure::PowerVsSinr) {
      m = a.power_mean, lo = a.power_p10, hi = a.power_p90;
    } else if (figure == Figure::PceVsGrid) {
      m = a.pce_mean, lo = a.pce_p10, hi = a.pce_p90;
    } else {
      m = a.rate_mean, lo = a.rate_p10, hi = a.rate_p90;
    }
    os << num(axis_to_file(axis, a.value)) << ',' << to_string(a.scheme) << ',' << num(m) << ',' << num(lo)
       << ',' << num(hi) << '\n';
  }
}

}  // namespace passwpt
