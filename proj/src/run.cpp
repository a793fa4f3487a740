#include "flowsplit/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numeric>

#include "flowsplit/checks.hpp"
#include "flowsplit/io.hpp"
#include "flowsplit/minor_algebra.hpp"
#include "flowsplit/scenario.hpp"
#include "flowsplit/sde.hpp"
#include "flowsplit/subdet_flow.hpp"

namespace flowsplit {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* const kCommands[] = {"simulate",      "subdet-trace", "stopping-time", "decompose",
                                 "attainability", "verify-all",   "list-scenarios"};

bool needs_scenario(const std::string& c) { return c != "verify-all" && c != "list-scenarios"; }

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct Context {
  Context(const RunConfig& c, Scenario s) : cfg(c), scenario(std::move(s)) {}

  const RunConfig& cfg;
  Scenario scenario;
  std::uint64_t seed = 0;
  double dt = 0.0;
  double horizon = 0.0;
  std::size_t steps = 0;
  RunOutcome out;
  json checks = json::array();
  json failures = json::array();

  bool wants(std::string_view f) const {
    return !cfg.out_dir.empty() && std::find(cfg.formats.begin(), cfg.formats.end(), f) != cfg.formats.end();
  }

  void write(const std::string& name, std::string_view content) {
    const fs::path p = fs::path(cfg.out_dir) / name;
    write_atomic(p, content);
    out.files.push_back(p.string());
  }

  void check(const std::string& name, bool passed, const std::string& detail, json extra = json::object()) {
    json c = {{"scenario", scenario.name}, {"check", name}, {"passed", passed}, {"detail", detail}};
    c.update(extra);
    checks.push_back(c);
    if (!passed) failures.push_back({{"scenario", scenario.name}, {"check", name}, {"detail", detail}});
  }

  std::string stem() const { return scenario.name + "_"; }
};

std::string seed_tag(std::uint64_t seed) { return "s" + std::to_string(seed); }

std::vector<SubdetMethod> requested_methods(const Context& c) {
  if (c.cfg.method == "all") {
    if (c.scenario.system->transition()) return {SubdetMethod::direct};
    return {SubdetMethod::direct, SubdetMethod::ito_liouville, SubdetMethod::cauchy_binet};
  }
  const auto m = parse_subdet_method(c.cfg.method);
  if (!m) throw Error(Errc::invalid_argument, "unknown method '" + c.cfg.method + "'");
  return {*m};
}

MinorSelection selection_for(const Context& c) {
  if (c.cfg.selection) return parse_selection(*c.cfg.selection, c.scenario.dim());
  return c.scenario.default_selection();
}

BrownianPath path_for(const Context& c, std::uint64_t seed) {
  return sample_brownian(seed, c.scenario.noise_count(), c.dt, c.steps);
}

void run_simulate(Context& c) {
  struct One {
    std::uint64_t seed;
    LinearizedTrajectory traj;
  };
  const auto runs = fan_out(c.seed, c.cfg.seeds, [&](std::uint64_t seed) {
    return One{seed, integrate_linearized(*c.scenario.system, c.scenario.x0, path_for(c, seed))};
  });
  json res = json::array();
  for (const One& r : runs) {
    const bool ok = !r.traj.explosion_step;
    c.check("finite-" + seed_tag(r.seed), ok,
            ok ? "trajectory stays finite" : "non-finite state at step " + std::to_string(*r.traj.explosion_step));
    res.push_back({{"seed", r.seed},
                   {"steps", r.traj.points.size() - 1},
                   {"endpoint", r.traj.points.back()},
                   {"linearization", matrix_to_json(r.traj.linearizations.back())},
                   {"transitions", r.traj.transitions},
                   {"explosion_step", r.traj.explosion_step ? json(*r.traj.explosion_step) : json(nullptr)}});
    if (c.wants("csv")) c.write(c.stem() + "trajectory_" + seed_tag(r.seed) + ".csv", trajectory_csv(r.traj));
  }
  c.out.report["result"] = {{"runs", res}};
}

void run_subdet(Context& c) {
  const MinorSelection sel = selection_for(c);
  const auto methods = requested_methods(c);
  if (c.cfg.method == "all" && methods.size() == 1) {
    c.out.report["note"] = "scenario changes charts along the way; only the direct method applies";
  }
  const double initial = minor_det(Matrix::identity(c.scenario.dim()), sel.rows, sel.cols);
  const auto runs = fan_out(c.seed, c.cfg.seeds, [&](std::uint64_t seed) {
    const BrownianPath path = path_for(c, seed);
    std::vector<SubdetTrace> traces;
    for (SubdetMethod m : methods) traces.push_back(subdet_trace(m, *c.scenario.system, c.scenario.x0, path, sel));
    return traces;
  });
  json res = json::array();
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const std::uint64_t seed = c.seed + r;
    const auto& traces = runs[r];
    json per = json::object();
    for (const SubdetTrace& tr : traces) {
      const std::string m = to_string(tr.method);
      const auto [lo, hi] = std::minmax_element(tr.values.begin(), tr.values.end());
      per[m] = {{"initial", tr.values.front()}, {"final", tr.values.back()}, {"min", *lo}, {"max", *hi},
                {"explosion_step", tr.explosion_step ? json(*tr.explosion_step) : json(nullptr)}};
      c.check("initial-condition-" + m + "-" + seed_tag(seed), tr.values.front() == initial,
              "trace starts at minor(I) = " + format_number(initial));
      c.check("finite-" + m + "-" + seed_tag(seed), !tr.explosion_step, "trace stays finite");
      if (c.wants("csv")) c.write(c.stem() + "subdet_" + m + "_" + seed_tag(seed) + ".csv", trace_csv(tr));
    }
    json dev = json::object();
    for (std::size_t a = 0; a < traces.size(); ++a) {
      for (std::size_t b = a + 1; b < traces.size(); ++b) {
        const double d = max_relative_deviation(traces[a], traces[b]);
        const bool formulas = traces[a].method != SubdetMethod::direct && traces[b].method != SubdetMethod::direct;
        const double limit = formulas ? 1e-6 : 1e-3;
        const std::string key = std::string(to_string(traces[a].method)) + "/" + to_string(traces[b].method);
        dev[key] = d;
        c.check("agreement-" + key + "-" + seed_tag(seed), d <= limit,
                "max relative deviation " + format_number(d) + " (limit " + format_number(limit) + ")",
                {{"value", num(d)}, {"limit", limit}});
      }
    }
    res.push_back({{"seed", seed}, {"methods", per}, {"deviations", dev}});
  }
  c.out.report["result"] = {{"selection", sel.rows.to_string() + ";" + sel.cols.to_string()}, {"runs", res}};
}

void run_stopping(Context& c) {
  const MinorSelection sel = selection_for(c);
  const SubdetMethod method = c.cfg.method == "all" ? SubdetMethod::direct : requested_methods(c).front();
  const auto runs = fan_out(c.seed, c.cfg.seeds, [&](std::uint64_t seed) {
    return estimate_stopping_time(subdet_trace(method, *c.scenario.system, c.scenario.x0, path_for(c, seed), sel));
  });
  std::optional<double> root;
  const Scenario& s = c.scenario;
  if (s.closed_subdet && s.noise_count() == 0 && !c.cfg.selection) {
    const double none[1] = {0.0};
    auto g = [&](double t) { return s.closed_subdet(t, std::span<const double>(none, 0), s.x0); };
    for (std::size_t i = 0; i < c.steps && !root; ++i) {
      double a = c.dt * static_cast<double>(i), b = a + c.dt;
      if (g(a) > 0.0 && g(b) <= 0.0) {
        for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
          const double mid = 0.5 * (a + b);
          (g(mid) > 0.0 ? a : b) = mid;
        }
        root = 0.5 * (a + b);
      }
    }
  }
  json res = json::array();
  for (std::size_t r = 0; r < runs.size(); ++r) {
    json j = stopping_time_to_json(runs[r]);
    j["seed"] = c.seed + r;
    j["method"] = to_string(method);
    if (root) {
      j["closed_form_root"] = *root;
      const double err = runs[r].tau ? std::abs(*runs[r].tau - *root) : INFINITY;
      c.check("closed-form-tau", err <= 1e-3, "|tau - closed-form root| = " + format_number(err),
              {{"value", num(err)}, {"limit", 1e-3}});
    }
    res.push_back(j);
  }
  c.out.report["result"] = {{"runs", res}};
  if (runs.size() == 1) c.out.report["result"].update(res[0]);
}

void run_decompose(Context& c) {
  const Scenario& s = c.scenario;
  if (!s.split) throw Error(Errc::invalid_argument, "scenario has no foliation split");
  if (!s.grid && !c.cfg.grid) throw Error(Errc::invalid_argument, "scenario has no decomposition grid");
  Lattice grid = *s.grid;
  if (c.cfg.grid) {
    if (c.cfg.grid->size() != s.dim()) throw Error(Errc::invalid_argument, "grid spec must have one count per dimension");
    std::size_t total = 1;
    for (std::size_t k : *c.cfg.grid) {
      if (k < 2) throw Error(Errc::invalid_argument, "grid counts must be at least 2");
      total *= k;
    }
    if (total > 1000000) throw Error(Errc::invalid_argument, "grid too large");
    grid = Lattice(grid.lo(), grid.hi(), *c.cfg.grid);
  }
  std::vector<double> times = c.cfg.times;
  if (times.empty() && c.cfg.horizon) times = {*c.cfg.horizon};
  if (times.empty()) times = s.decompose_times;
  if (times.empty()) throw Error(Errc::invalid_argument, "no decomposition time given");
  json res = json::array();
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    if (!(t > 0.0) || t < c.dt) throw Error(Errc::invalid_argument, "decomposition time must be at least dt");
    const FlowDecomposition d = decompose_flow(s, t, grid, c.seed, c.dt);
    json summary = flow_decomposition_to_json(d);
    const std::string tag = "t" + std::to_string(i);
    const std::string at = " at t = " + format_number(t);
    c.check("complete-" + tag, d.result.complete(),
            std::to_string(d.result.refused.size()) + " nodes refused (|minor| < 1e-9)" + at);
    c.check("verification-" + tag, d.verification.passed(),
            std::to_string(d.verification.violations.size()) + " violations of (a)(b)(c) at tol 1e-6" + at);
    c.check("orientation-" + tag, d.orientation.preserved,
            "min sampled minor " + format_number(d.orientation.min_minor) + at + "; " + d.orientation.note);
    if (d.result.psi_fit.linear.rows()) summary["psi_linear"] = matrix_to_json(d.result.psi_fit.linear);
    if (d.result.xi_fit.linear.rows()) summary["xi_linear"] = matrix_to_json(d.result.xi_fit.linear);
    if (s.closed_factors && d.result.psi_fit.linear.rows() && d.result.xi_fit.linear.rows()) {
      const auto [psi, xi] = s.closed_factors(t);
      const double e = std::max(max_abs_diff(psi, d.result.psi_fit.linear), max_abs_diff(xi, d.result.xi_fit.linear));
      summary["closed_form_error"] = e;
      c.check("closed-form-factors-" + tag, e <= 1e-6, "linear parts vs closed form: " + format_number(e) + at,
              {{"value", num(e)}, {"limit", 1e-6}});
    }
    res.push_back(summary);
    if (c.wants("csv")) c.write(c.stem() + "decompose_" + tag + ".csv", decomposition_csv(d.phi, d.result));
    if (c.wants("json")) {
      json full = decomposition_to_json(d.result);
      full["phi"] = sample_to_json(d.phi);
      full["summary"] = summary;
      c.write(c.stem() + "decompose_" + tag + ".json", full.dump(1) + "\n");
    }
  }
  c.out.report["result"] = {{"seed", c.seed}, {"dt", c.dt}, {"grid", grid.counts()}, {"times", res}};
}

void run_attainability(Context& c) {
  const Scenario& s = c.scenario;
  if (!s.fixture) throw Error(Errc::invalid_argument, "scenario '" + s.name + "' has no attainability fixture");
  const ScenarioFixture& fx = *s.fixture;
  const double res = c.cfg.resolution.value_or(fx.resolution);
  if (!(res > 0.0)) throw Error(Errc::invalid_argument, "resolution must be positive");
  const GridFoliation g = fx.build(res);
  if (!g.connected()) throw Error(Errc::invalid_argument, "fixture mask is not connected");
  std::vector<NamedPoint> queries = fx.queries;
  if (!c.cfg.points.empty()) {
    queries.clear();
    for (std::size_t i = 0; i < c.cfg.points.size(); ++i) queries.push_back({"p" + std::to_string(i + 1), c.cfg.points[i]});
  }
  json out = json::array();
  for (const NamedPoint& q : queries) {
    const Cell cell = fx.cell_at(q.at, res);
    if (!g.in_mask(cell)) throw Error(Errc::out_of_range, "query point " + q.name + " is outside the domain");
    const AttainableSet a = attainable_set(g, cell);
    const AttainableSet co = coattainable_set(g, cell);
    const AttainabilityReport rep = check_attainability_prop(g, cell);
    c.check("implication-" + q.name, rep.implication_holds(),
            std::string("A = C: ") + (rep.antecedent ? "true" : "false") + ", A = M: " + (rep.consequent ? "true" : "false"));
    out.push_back({{"name", q.name},
                   {"point", q.at},
                   {"cell", {cell.x, cell.y}},
                   {"attainable", rep.attainable},
                   {"coattainable", rep.coattainable},
                   {"domain", rep.domain},
                   {"antecedent", rep.antecedent},
                   {"consequent", rep.consequent},
                   {"note", rep.note}});
    if (c.wants("csv") || c.wants("pgm")) {
      c.write(c.stem() + "A_" + q.name + ".pgm", a.to_pgm(g));
      c.write(c.stem() + "C_" + q.name + ".pgm", co.to_pgm(g));
    }
    if (c.wants("json")) {
      c.write(c.stem() + "sets_" + q.name + ".json", json{{"A", a.to_json(g)}, {"C", co.to_json(g)}}.dump() + "\n");
    }
  }
  if (fx.check_every_cell && c.cfg.points.empty()) {
    std::size_t bad = 0, total = 0;
    for (std::size_t i = 0; i < g.cells(); ++i) {
      if (!g.in_mask(i)) continue;
      ++total;
      if (!check_attainability_prop(g, g.cell(i)).implication_holds()) ++bad;
    }
    c.check("implication-every-cell", bad == 0, std::to_string(bad) + " of " + std::to_string(total) + " cells violate A=C => A=M");
  }
  c.out.report["result"] = {{"resolution", res},
                            {"width", g.width()},
                            {"height", g.height()},
                            {"domain", g.mask_count()},
                            {"queries", out},
                            {"certificate", "discrete: finite connected mask, label flood fill"}};
}

json scenario_summary(const Scenario& s) {
  json j = {{"name", s.name},
            {"description", s.description},
            {"flow", s.has_flow()},
            {"fixture", s.fixture.has_value()},
            {"closed_flow", static_cast<bool>(s.closed_flow)},
            {"closed_subdet", static_cast<bool>(s.closed_subdet)},
            {"checks", check_names(s)}};
  json consts = json::object();
  for (const auto& [k, v] : s.constants) consts[k] = v;
  j["constants"] = consts;
  if (s.has_flow()) {
    j["dim"] = s.dim();
    j["vertical"] = s.split->k;
    j["noises"] = s.noise_count();
    j["horizon"] = s.horizon;
    j["dt"] = s.dt;
    j["seed"] = s.seed;
    j["chart_transition"] = static_cast<bool>(s.system->transition());
  }
  return j;
}

void run_verify_all(Context& c, const std::vector<const Scenario*>& scenarios) {
  json all = json::array();
  json for_file = json::array();
  std::size_t passed = 0, total = 0;
  for (const Scenario* s : scenarios) {
    for (const CheckResult& r : run_checks(*s)) {
      ++total;
      if (r.passed) ++passed;
      all.push_back(r.to_json());
      for_file.push_back(r.to_json(false));
      if (!r.passed) c.failures.push_back({{"scenario", r.scenario}, {"check", r.name}, {"detail", r.detail}});
    }
  }
  c.checks = all;
  c.out.report["result"] = {{"passed", passed}, {"total", total}, {"scenarios", scenarios.size()}};
  if (c.wants("json")) {
    c.write("verify_all.json", json{{"version", version()}, {"checks", for_file}}.dump(1) + "\n");
  }
}

Scenario resolve_scenario(const RunConfig& cfg) {
  if (cfg.scenario_spec) {
    json spec = *cfg.scenario_spec;
    if (!cfg.parameters.empty()) {
      json consts = spec.value("constants", json::object());
      for (const auto& [k, v] : cfg.parameters) {
        if (!consts.contains(k)) throw Error(Errc::invalid_argument, "scenario has no parameter '" + k + "'");
        consts[k] = v;
      }
      spec["constants"] = consts;
    }
    Scenario s = scenario_from_json(spec);
    return s;
  }
  return make_scenario(cfg.scenario, cfg.parameters);
}

}  // namespace

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("FLOW_SEED");
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  const unsigned long long s = std::strtoull(v, &end, 10);
  if (*end != '\0' || v[0] == '-') return std::nullopt;
  return s;
}

std::vector<std::size_t> parse_grid(std::string_view text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find_first_of("xX", start);
    if (end == std::string_view::npos) end = text.size();
    const std::string part(text.substr(start, end - start));
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) {
      throw Error(Errc::invalid_argument, "grid spec must look like WxH, got '" + std::string(text) + "'");
    }
    out.push_back(std::stoul(part));
    start = end + 1;
  }
  return out;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  try {
    c.command = j.value("command", std::string{});
    c.scenario = j.value("scenario", std::string{});
    if (j.contains("scenario_spec")) c.scenario_spec = j.at("scenario_spec");
    const json params = j.value("parameters", json::object());
    for (const auto& [k, v] : params.items()) c.parameters[k] = v.get<double>();
    if (j.contains("horizon") && !j.at("horizon").is_null()) c.horizon = j.at("horizon").get<double>();
    if (j.contains("t") && !j.at("t").is_null()) c.horizon = j.at("t").get<double>();
    if (j.contains("dt") && !j.at("dt").is_null()) c.dt = j.at("dt").get<double>();
    c.times = j.value("times", std::vector<double>{});
    if (j.contains("seed") && !j.at("seed").is_null()) c.seed = j.at("seed").get<std::uint64_t>();
    c.seeds = j.value("seeds", std::size_t{1});
    if (j.contains("grid") && !j.at("grid").is_null()) {
      c.grid = j.at("grid").is_string() ? parse_grid(j.at("grid").get<std::string>()) : j.at("grid").get<std::vector<std::size_t>>();
    }
    if (j.contains("selection") && !j.at("selection").is_null()) c.selection = j.at("selection").get<std::string>();
    c.method = j.value("method", c.method);
    if (j.contains("resolution") && !j.at("resolution").is_null()) c.resolution = j.at("resolution").get<double>();
    c.points = j.value("points", c.points);
    c.out_dir = j.value("out", j.value("out_dir", std::string{}));
    if (j.contains("format")) {
      c.formats = j.at("format").is_string() ? std::vector<std::string>{j.at("format").get<std::string>()}
                                             : j.at("format").get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("run config: ") + e.what());
  }
  return c;
}

json RunConfig::to_json() const {
  json j = {{"command", command}, {"scenario", scenario}, {"seeds", seeds}, {"method", method}, {"format", formats}};
  if (scenario_spec) j["scenario_spec"] = *scenario_spec;
  if (!parameters.empty()) {
    json p = json::object();
    for (const auto& [k, v] : parameters) p[k] = v;
    j["parameters"] = p;
  }
  if (horizon) j["horizon"] = *horizon;
  if (dt) j["dt"] = *dt;
  if (!times.empty()) j["times"] = times;
  if (seed) j["seed"] = *seed;
  if (grid) j["grid"] = *grid;
  if (selection) j["selection"] = *selection;
  if (resolution) j["resolution"] = *resolution;
  if (!points.empty()) j["points"] = points;
  if (!out_dir.empty()) j["out"] = out_dir;
  return j;
}

void RunConfig::validate() const {
  if (std::find(std::begin(kCommands), std::end(kCommands), command) == std::end(kCommands)) {
    throw Error(Errc::invalid_argument, "unknown command '" + command + "'");
  }
  if (needs_scenario(command) && scenario.empty() && !scenario_spec) {
    throw Error(Errc::invalid_argument, command + " needs a scenario");
  }
  if (dt && !(*dt > 0.0)) throw Error(Errc::invalid_argument, "dt must be positive");
  if (horizon && !(*horizon > 0.0)) throw Error(Errc::invalid_argument, "horizon must be positive");
  if (dt && horizon && *horizon < *dt) throw Error(Errc::invalid_argument, "horizon must be at least dt");
  if (seeds < 1 || seeds > 10000) throw Error(Errc::invalid_argument, "seeds must be in [1, 10000]");
  if (method != "all" && !parse_subdet_method(method)) throw Error(Errc::invalid_argument, "unknown method '" + method + "'");
  for (const auto& f : formats) {
    if (f != "csv" && f != "json" && f != "pgm") throw Error(Errc::invalid_argument, "unknown format '" + f + "'");
  }
  for (double t : times) {
    if (!(t > 0.0)) throw Error(Errc::invalid_argument, "decomposition times must be positive");
  }
}

RunOutcome run(const RunConfig& cfg) {
  RunOutcome fail;
  fail.report = {{"tool", "flowsplit"}, {"version", version()}, {"command", cfg.command}, {"scenario", cfg.scenario}};
  int error_status = kExitUsage;
  try {
    cfg.validate();
    if (cfg.command == "list-scenarios") {
      RunOutcome out;
      out.report = fail.report;
      json list = json::array();
      for (const Scenario& s : registry()) list.push_back(scenario_summary(s));
      out.report["scenarios"] = list;
      out.report["status"] = "pass";
      out.report["exit_status"] = kExitOk;
      return out;
    }
    std::vector<const Scenario*> pool;
    std::optional<Scenario> custom;
    if (cfg.command == "verify-all") {
      if (!cfg.scenario.empty() || cfg.scenario_spec) {
        custom = resolve_scenario(cfg);
        pool.push_back(&*custom);
      } else {
        for (const Scenario& s : registry()) pool.push_back(&s);
      }
    }
    Context c(cfg, cfg.command == "verify-all" ? Scenario{} : resolve_scenario(cfg));
    c.out.report = fail.report;
    c.out.report["config"] = cfg.to_json();
    c.scenario.name = c.scenario.name.empty() ? cfg.scenario : c.scenario.name;
    c.out.report["scenario"] = c.scenario.name;
    error_status = kExitRuntime;

    if (cfg.command == "verify-all") {
      run_verify_all(c, pool);
    } else if (cfg.command == "attainability") {
      run_attainability(c);
    } else {
      if (!c.scenario.has_flow()) throw Error(Errc::invalid_argument, "scenario '" + c.scenario.name + "' has no flow");
      c.seed = cfg.seed ? *cfg.seed : env_seed().value_or(c.scenario.seed);
      c.dt = cfg.dt.value_or(c.scenario.dt);
      c.horizon = cfg.horizon.value_or(c.scenario.horizon);
      if (c.horizon < c.dt) throw Error(Errc::invalid_argument, "horizon must be at least dt");
      c.steps = static_cast<std::size_t>(std::llround(c.horizon / c.dt));
      c.out.report["seed"] = c.seed;
      c.out.report["dt"] = c.dt;
      if (cfg.command != "decompose") c.out.report["horizon"] = c.dt * static_cast<double>(c.steps);
      if (cfg.command == "simulate") run_simulate(c);
      else if (cfg.command == "subdet-trace") run_subdet(c);
      else if (cfg.command == "stopping-time") run_stopping(c);
      else run_decompose(c);
    }
    const bool ok = c.failures.empty();
    c.out.status = ok ? kExitOk : kExitChecksFailed;
    c.out.report["checks"] = c.checks;
    c.out.report["failures"] = c.failures;
    c.out.report["status"] = ok ? "pass" : "fail";
    c.out.report["exit_status"] = c.out.status;
    if (cfg.command != "verify-all" && c.wants("json")) {
      json file = c.out.report;
      file.erase("files");
      c.write(c.stem() + cfg.command + ".json", file.dump(1) + "\n");
    }
    c.out.report["files"] = c.out.files;
    return std::move(c.out);
  } catch (const Error& e) {
    const bool usage = e.code() == Errc::invalid_argument || e.code() == Errc::unknown_scenario ||
                       e.code() == Errc::parse_error || e.code() == Errc::out_of_range ||
                       e.code() == Errc::dimension_mismatch;
    fail.status = usage ? kExitUsage : error_status;
    fail.report["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
  } catch (const std::exception& e) {
    fail.status = kExitRuntime;
    fail.report["error"] = {{"code", "internal"}, {"message", e.what()}};
  }
  fail.report["status"] = "error";
  fail.report["exit_status"] = fail.status;
  fail.report["failures"] = json::array({{{"check", "run"}, {"detail", fail.report["error"]["message"]}}});
  return fail;
}

}  // namespace flowsplit
