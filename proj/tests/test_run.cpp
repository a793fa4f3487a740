#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "flowsplit/run.hpp"

using namespace flowsplit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

RunConfig config(const json& j) { return RunConfig::from_json(j); }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("flowsplit_run_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config round trip and validation") {
  const json j = {{"command", "decompose"}, {"scenario", "rotation"}, {"t", 0.5},    {"dt", 1e-3},
                  {"seed", 4},              {"grid", "5x7"},          {"out", "d"}, {"parameters", {{"a", 1.0}}}};
  const RunConfig c = config(j);
  CHECK(c.horizon == 0.5);
  CHECK(*c.grid == std::vector<std::size_t>{5, 7});
  CHECK(c.parameters.at("a") == 1.0);
  const RunConfig d = config(c.to_json());
  CHECK(d.to_json() == c.to_json());

  CHECK_THROWS_AS(config({{"command", "simulate"}, {"scenario", "rotation"}, {"dt", -1.0}}).validate(), Error);
  CHECK_THROWS_AS(config({{"command", "simulate"}, {"scenario", "rotation"}, {"dt", 0.1}, {"horizon", 0.01}}).validate(),
                  Error);
  CHECK_THROWS_AS(config({{"command", "simulate"}}).validate(), Error);
  CHECK_THROWS_AS(config({{"command", "fly"}, {"scenario", "rotation"}}).validate(), Error);
  CHECK_THROWS_AS(config({{"command", "simulate"}, {"scenario", "rotation"}, {"method", "rk"}}).validate(), Error);
  CHECK_THROWS_AS(config({{"command", "simulate"}, {"scenario", "rotation"}, {"format", "xml"}}).validate(), Error);
  CHECK_THROWS_AS(config({{"command", "simulate"}, {"seed", "x"}}), Error);
  CHECK(parse_grid("21x21") == std::vector<std::size_t>{21, 21});
  CHECK(parse_grid("3x4x5").size() == 3);
  CHECK(parse_grid("21") == std::vector<std::size_t>{21});
  CHECK_THROWS_AS(parse_grid("21x"), Error);
  CHECK_THROWS_AS(parse_grid("ax2"), Error);
}

TEST_CASE("stopping-time rotation gives pi/2") {
  const RunOutcome o = run(config({{"command", "stopping-time"}, {"scenario", "rotation"}, {"dt", 1e-4}, {"horizon", 2.0}}));
  CHECK(o.status == kExitOk);
  CHECK(std::abs(o.report["result"]["tau"].get<double>() - std::numbers::pi / 2) <= 1e-3);
  CHECK(o.report["status"] == "pass");
}

TEST_CASE("subdet-trace --method all writes three agreeing traces") {
  const fs::path dir = scratch("traces");
  const RunOutcome o =
      run(config({{"command", "subdet-trace"}, {"scenario", "rotation"}, {"method", "all"}, {"out", dir.string()}}));
  CHECK(o.status == kExitOk);
  for (const char* m : {"direct", "ito", "cb"}) CHECK(fs::exists(dir / ("rotation_subdet_" + std::string(m) + "_s0.csv")));
  for (const auto& [k, v] : o.report["result"]["runs"][0]["deviations"].items()) CHECK(v.get<double>() <= 1e-3);
  fs::remove_all(dir);
}

TEST_CASE("decompose rotation at pi/4 on 21x21") {
  const RunOutcome o = run(config({{"command", "decompose"}, {"scenario", "rotation"}, {"t", 0.7854}, {"grid", "21x21"}}));
  CHECK(o.status == kExitOk);
  const json& r = o.report["result"]["times"][0];
  CHECK(r["residual"].get<double>() <= 1e-6);
  CHECK(r["closed_form_error"].get<double>() <= 1e-6);
}

TEST_CASE("error statuses") {
  CHECK(run(config({{"command", "simulate"}, {"scenario", "nope"}})).status == kExitUsage);
  CHECK(run(config({{"command", "simulate"}, {"scenario", "rotation"}, {"dt", 0.0}})).status == kExitUsage);
  CHECK(run(config({{"command", "decompose"}, {"scenario", "rotation"}, {"grid", "5x5x5"}})).status == kExitUsage);
  CHECK(run(config({{"command", "decompose"}, {"scenario", "gbm"}})).status == kExitUsage);
  CHECK(run(config({{"command", "attainability"}, {"scenario", "rotation"}})).status == kExitUsage);
  CHECK(run(config({{"command", "subdet-trace"}, {"scenario", "moebius"}, {"method", "cb"}})).status == kExitUsage);
  CHECK(run(config({{"command", "subdet-trace"}, {"scenario", "rotation"}, {"selection", "3;3"}})).status == kExitUsage);
  const RunOutcome o = run(config({{"command", "simulate"}, {"scenario", "rotation"}, {"parameters", {{"zz", 1.0}}}}));
  CHECK(o.status == kExitUsage);
  CHECK(o.report["failures"].size() == 1);
  CHECK(o.report["error"]["code"] == "invalid_argument");
}

TEST_CASE("check failures give status 1 with a failure list") {
  const RunOutcome o = run(config({{"command", "decompose"}, {"scenario", "moebius"}, {"times", {0.5, 1.0}}}));
  CHECK(o.status == kExitChecksFailed);
  CHECK(o.report["status"] == "fail");
  REQUIRE(o.report["failures"].size() == 1);
  CHECK(o.report["failures"][0]["check"] == "orientation-t1");
}

TEST_CASE("outputs are byte-identical across runs") {
  const fs::path a = scratch("repro_a"), b = scratch("repro_b");
  for (const char* cmd : {"simulate", "subdet-trace", "decompose", "stopping-time"}) {
    for (const fs::path& d : {a, b}) {
      json j = {{"command", cmd}, {"scenario", "noisy-rotation"}, {"seed", 17}, {"out", d.string()}};
      if (std::string(cmd) == "decompose") j["grid"] = "5x5";
      else j["seeds"] = 3;
      CHECK(run(config(j)).status == kExitOk);
    }
  }
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    std::string x = slurp(e.path()), y = slurp(b / e.path().filename());
    // the stored config names its own output directory
    if (e.path().extension() == ".json") {
      json jx = json::parse(x), jy = json::parse(y);
      jx.erase("config");
      jy.erase("config");
      x = jx.dump();
      y = jy.dump();
    }
    CHECK_MESSAGE(x == y, e.path().filename().string());
    ++compared;
  }
  CHECK(compared > 10);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("multi-seed runs equal the single-seed runs they contain") {
  const RunOutcome many = run(config({{"command", "stopping-time"}, {"scenario", "noisy-rotation"}, {"seed", 5}, {"seeds", 3}}));
  REQUIRE(many.status == kExitOk);
  for (int i = 0; i < 3; ++i) {
    const RunOutcome one = run(config({{"command", "stopping-time"}, {"scenario", "noisy-rotation"}, {"seed", 5 + i}}));
    CHECK(one.report["result"]["runs"][0] == many.report["result"]["runs"][i]);
  }
}

TEST_CASE("FLOW_SEED supplies the default seed") {
  ::setenv("FLOW_SEED", "23", 1);
  const RunOutcome a = run(config({{"command", "simulate"}, {"scenario", "noisy-rotation"}}));
  ::unsetenv("FLOW_SEED");
  const RunOutcome b = run(config({{"command", "simulate"}, {"scenario", "noisy-rotation"}, {"seed", 23}}));
  const RunOutcome c = run(config({{"command", "simulate"}, {"scenario", "noisy-rotation"}}));
  CHECK(a.report["seed"] == 23);
  CHECK(a.report["result"] == b.report["result"]);
  CHECK(c.report["seed"] == 7);
}

TEST_CASE("attainability pipeline writes masks") {
  const fs::path dir = scratch("attain");
  const RunOutcome o = run(config({{"command", "attainability"}, {"scenario", "l-domain"}, {"out", dir.string()}}));
  CHECK(o.status == kExitOk);
  CHECK(fs::exists(dir / "l-domain_A_z.pgm"));
  const json& q = o.report["result"]["queries"];
  CHECK(q[0]["consequent"] == true);
  CHECK(q[1]["attainable"] == 80);
  const RunOutcome p = run(config({{"command", "attainability"}, {"scenario", "web"}, {"points", {{1.0, 1.0}}}}));
  CHECK(p.report["result"]["queries"][0]["attainable"] == 525);
  CHECK(run(config({{"command", "attainability"}, {"scenario", "web"}, {"points", {{9.0, 9.0}}}})).status == kExitUsage);
  fs::remove_all(dir);
}

TEST_CASE("inline scenario specs with parameter overrides") {
  const json spec = {{"name", "spin"},         {"dim", 2},        {"vertical", 1},   {"constants", {{"w", 1.0}}},
                     {"drift", {"-w*x2", "w*x1"}}, {"x0", {1.0, 0.0}}, {"horizon", 2.0}, {"dt", 1e-4}};
  const RunOutcome o = run(config({{"command", "stopping-time"}, {"scenario_spec", spec}, {"parameters", {{"w", 2.0}}}}));
  CHECK(o.status == kExitOk);
  CHECK(std::abs(o.report["result"]["tau"].get<double>() - std::numbers::pi / 4) <= 1e-3);
}

TEST_CASE("list-scenarios and verify-all on one scenario") {
  const RunOutcome l = run(config({{"command", "list-scenarios"}}));
  CHECK(l.status == kExitOk);
  CHECK(l.report["scenarios"].size() >= 7);
  const RunOutcome v = run(config({{"command", "verify-all"}, {"scenario", "shear"}}));
  CHECK(v.status == kExitOk);
  CHECK(v.report["result"]["passed"] == v.report["result"]["total"]);
}
