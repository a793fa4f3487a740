// Acceptance run: one PASS/FAIL line per criterion, each under a time limit.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>

#include "flowsplit/attainability.hpp"
#include "flowsplit/checks.hpp"
#include "flowsplit/io.hpp"
#include "flowsplit/minor_algebra.hpp"
#include "flowsplit/run.hpp"
#include "flowsplit/scenario.hpp"
#include "flowsplit/subdet_flow.hpp"

using namespace flowsplit;
using nlohmann::json;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double limit_seconds;
  std::function<Outcome()> body;
};

std::string num(double v) { return format_number(v); }

BrownianPath path_of(std::uint64_t seed, std::size_t m, double dt, double t) {
  return sample_brownian(seed, m, dt, static_cast<std::size_t>(std::llround(t / dt)));
}

Outcome rotation_stopping_time() {
  RunConfig c;
  c.command = "stopping-time";
  c.scenario = "rotation";
  c.dt = 1e-4;
  c.horizon = 2.0;
  const RunOutcome o = run(c);
  if (o.status != kExitOk || o.report["result"]["tau"].is_null()) return {false, "run failed: " + o.report.dump()};
  const double err = std::abs(o.report["result"]["tau"].get<double>() - std::numbers::pi / 2);
  return {err <= 1e-3, "|tau - pi/2| = " + num(err)};
}

Outcome rotation_factorization() {
  const double t = std::numbers::pi / 4;
  RunConfig c;
  c.command = "decompose";
  c.scenario = "rotation";
  c.times = {t};
  c.grid = std::vector<std::size_t>{21, 21};
  const RunOutcome o = run(c);
  const json& r = o.report["result"]["times"][0];
  if (!r.contains("psi_linear")) return {false, "no factorization: " + o.report.dump()};
  const Matrix psi = matrix_from_json(r["psi_linear"]), xi = matrix_from_json(r["xi_linear"]);
  const double e = std::max(max_abs_diff(psi, Matrix(2, 2, {1.0, 0.0, std::sin(t), std::cos(t)})),
                            max_abs_diff(xi, Matrix(2, 2, {1.0 / std::cos(t), -std::tan(t), 0.0, 1.0})));
  const double res = r["residual"].get<double>();
  return {e <= 1e-6 && res <= 1e-6 && o.status == kExitOk, "factor error " + num(e) + ", residual " + num(res)};
}

Outcome ito_liouville_consistency() {
  const Scenario s = make_scenario("nonlinear3");
  const MinorSelection sel = MinorSelection::decomposability(3, 2);
  double di = 0.0, ic = 0.0;
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    const BrownianPath p = path_of(seed, 2, 1e-4, 1.0);
    const SubdetTrace d = subdet_trace(SubdetMethod::direct, *s.system, s.x0, p, sel);
    const SubdetTrace i = subdet_trace(SubdetMethod::ito_liouville, *s.system, s.x0, p, sel);
    const SubdetTrace c = subdet_trace(SubdetMethod::cauchy_binet, *s.system, s.x0, p, sel);
    di = std::max(di, max_relative_deviation(d, i));
    ic = std::max(ic, max_relative_deviation(i, c));
  }
  return {di <= 1e-3 && ic <= 1e-6, "direct/ito " + num(di) + ", ito/cb " + num(ic) + " over 10 seeds"};
}

Outcome cauchy_binet_exactness() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> entry(-6, 6);
  int bad = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t l = 1 + rep % 6;
    const std::size_t m = l + (rep / 6) % (9 - l);
    IntMatrix a(l, m), b(m, l);
    for (auto& v : a.entries()) v = entry(rng);
    for (auto& v : b.entries()) v = entry(rng);
    if (cauchy_binet(a, b) != determinant(a * b)) ++bad;
  }
  return {bad == 0, std::to_string(200 - bad) + "/200 exact"};
}

Outcome laplace_derivative() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto selections = combinations(5, 3);
  std::uniform_int_distribution<std::size_t> pick(0, selections.size() - 1);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    Matrix m(5, 5);
    for (double& v : m.entries()) v = u(rng);
    const IndexSelection& r = selections[pick(rng)];
    const IndexSelection& c = selections[pick(rng)];
    for (std::size_t p = 1; p <= 3; ++p) {
      for (std::size_t q = 1; q <= 3; ++q) {
        Matrix hi = m, lo = m;
        hi(r[p - 1] - 1, c[q - 1] - 1) += 1e-5;
        lo(r[p - 1] - 1, c[q - 1] - 1) -= 1e-5;
        const double fd = (minor_det(hi, r, c) - minor_det(lo, r, c)) / 2e-5;
        const double an = laplace_partial(m, r, c, p, q);
        worst = std::max(worst, std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), kRelativeFloor}));
      }
    }
  }
  return {worst <= 1e-6, "max relative error " + num(worst)};
}

Outcome liouville() {
  const Scenario s = make_scenario("linear3");
  const SubdetTrace t = subdet_trace(SubdetMethod::cauchy_binet, *s.system, s.x0, path_of(0, 0, 1e-3, 1.0),
                                     MinorSelection::decomposability(3, 3));
  double err = 0.0;
  for (std::size_t i = 0; i < t.values.size(); ++i) err = std::max(err, std::abs(t.values[i] - std::exp(0.15 * t.times[i])));
  return {err <= 1e-4, "max |trace - exp(t tr A)| = " + num(err)};
}

Outcome sufficient_conditions() {
  const Scenario polar = make_scenario("polar-linear");
  const Scenario shear = make_scenario("shear");
  double hyp = 0.0, min_trace = INFINITY, shear_dev = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const LinearizedTrajectory traj = integrate_linearized(*polar.system, polar.x0, path_of(seed, 1, 1e-3, 1.0));
    hyp = std::max(hyp, check_sufficient_condition(*polar.system, samples_from(traj), 1).max_abs);
    for (double v : subdet_direct(traj, MinorSelection::decomposability(2, 1)).values) min_trace = std::min(min_trace, v);
    const SubdetTrace st = subdet_trace(SubdetMethod::direct, *shear.system, shear.x0, path_of(seed, 1, 1e-3, 1.0),
                                        MinorSelection::decomposability(2, 1));
    for (double v : st.values) shear_dev = std::max(shear_dev, std::abs(v - 1.0));
  }
  return {hyp == 0.0 && min_trace > 0.0 && shear_dev <= 1e-6,
          "hypothesis max " + num(hyp) + ", min polar trace " + num(min_trace) + ", shear |trace - 1| " + num(shear_dev)};
}

Outcome integrator_order() {
  const Scenario s = make_scenario("gbm");
  const std::size_t factors[] = {100, 50, 20, 10, 5, 2, 1};
  std::vector<double> err(std::size(factors), 0.0);
  const int seeds = 40;
  for (int seed = 0; seed < seeds; ++seed) {
    const BrownianPath fine = path_of(static_cast<std::uint64_t>(seed), 1, 1e-4, 1.0);
    const double exact = s.x0[0] * std::exp(0.5 + 0.6 * fine.total(0));
    for (std::size_t k = 0; k < std::size(factors); ++k) {
      err[k] += std::abs(flow_endpoint(*s.system, s.x0, fine.coarsen(factors[k]))[0] - exact) / seeds;
    }
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(std::size(factors));
  for (std::size_t k = 0; k < std::size(factors); ++k) {
    const double x = std::log(1e-4 * static_cast<double>(factors[k])), y = std::log(err[k]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope >= 0.7, "strong-error slope " + num(slope) + " (dt 1e-2 .. 1e-4, 40 paths)"};
}

Outcome attainability_fixtures() {
  std::string detail;
  bool ok = true;
  {
    const Scenario s = make_scenario("cartesian");
    const GridFoliation g = s.fixture->build(s.fixture->resolution);
    for (std::size_t i = 0; i < g.cells(); ++i) {
      if (g.in_mask(i) && attainable_set(g, g.cell(i)).count() != g.mask_count()) ok = false;
    }
    detail += std::string("cartesian A = M everywhere: ") + (ok ? "yes" : "no");
  }
  {
    const Scenario s = make_scenario("l-domain");
    const ScenarioFixture& fx = *s.fixture;
    const GridFoliation g = fx.build(fx.resolution);
    const Cell x = fx.cell_at({0.5, 0.5}, fx.resolution), z = fx.cell_at({1.5, 1.5}, fx.resolution),
               y = fx.cell_at({0.5, 2.5}, fx.resolution);
    const bool ax = attainable_set(g, x).count() == g.mask_count();
    const bool y_out = !attainable_set(g, z).contains(g, y);
    ok = ok && ax && y_out;
    detail += std::string("; L: A(x) = M ") + (ax ? "yes" : "no") + ", y not in A(z) " + (y_out ? "yes" : "no");
  }
  std::size_t queries = 0;
  for (const Scenario& s : registry()) {
    if (!s.fixture) continue;
    const GridFoliation g = s.fixture->build(s.fixture->resolution);
    for (const NamedPoint& q : s.fixture->queries) {
      ++queries;
      if (!check_attainability_prop(g, s.fixture->cell_at(q.at, s.fixture->resolution)).implication_holds()) {
        ok = false;
        detail += "; implication fails at " + s.name + ":" + q.name;
      }
    }
  }
  detail += "; implication checked at " + std::to_string(queries) + " query points";
  return {ok, detail};
}

Outcome moebius_obstruction() {
  const Scenario quotient = make_scenario("moebius");
  const Scenario slit = make_scenario("moebius-slit");
  bool ok = true;
  std::optional<double> first_bad;
  for (double t : quotient.decompose_times) {
    const FlowDecomposition d = decompose_flow(quotient, t, *quotient.grid, 0, quotient.dt);
    if (d.orientation.preserved != (d.crossings == 0)) ok = false;
    if (!d.orientation.preserved && !first_bad) first_bad = t;
  }
  std::size_t good = 0;
  for (double t : slit.decompose_times) {
    const FlowDecomposition d = decompose_flow(slit, t, *slit.grid, 0, slit.dt);
    if (d.result.complete() && d.verification.passed() && d.orientation.preserved) ++good;
  }
  // x0 reaches the identified face at y = 1 after 0.8 time units
  ok = ok && first_bad && std::abs(*first_bad - 0.8) < 1e-9 && good == slit.decompose_times.size();
  return {ok, "quotient first not-preserved at t = " + (first_bad ? num(*first_bad) : std::string("never")) +
                  " (crossing at 0.8); slit decomposed at " + std::to_string(good) + "/" +
                  std::to_string(slit.decompose_times.size()) + " times"};
}

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, "rotation stopping time", 5.0, rotation_stopping_time},
      {2, "rotation factorization", 5.0, rotation_factorization},
      {3, "Ito-Liouville consistency", 60.0, ito_liouville_consistency},
      {4, "Cauchy-Binet exactness", 1.0, cauchy_binet_exactness},
      {5, "Laplace derivative", 1.0, laplace_derivative},
      {6, "Liouville specialization", 5.0, liouville},
      {7, "sufficient-condition corollaries", 10.0, sufficient_conditions},
      {8, "integrator order", 30.0, integrator_order},
      {9, "attainability fixtures", 1.0, attainability_fixtures},
      {10, "Moebius obstruction", 10.0, moebius_obstruction},
  };
  // build the registry outside the timed sections
  (void)registry();
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_seconds;
    const bool pass = o.ok && in_time;
    failed += !pass;
    std::printf("%s %2d %-34s %s [%.2f s, limit %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str(),
                secs, c.limit_seconds, in_time ? "" : ", too slow");
    std::fflush(stdout);
  }
  std::printf("%d/10 criteria passed\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}
