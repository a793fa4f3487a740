// flowsplit command-line front end. Talks to the library only through the C API.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "flowsplit/flowsplit.h"

using nlohmann::json;

namespace {

struct Options {
  std::string scenario;
  std::string config;
  double horizon = 0.0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::size_t seeds = 1;
  std::string grid;
  std::string selection;
  std::string method;
  std::string out;
  std::vector<std::string> formats;
  std::vector<std::string> params;
  double resolution = 0.0;
  std::vector<std::string> points;
  std::vector<double> times;
  bool pretty = false;
};

std::vector<double> split_numbers(const std::string& text, char sep) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, sep)) {
    std::size_t used = 0;
    out.push_back(std::stod(part, &used));
    if (used != part.size()) throw std::invalid_argument(part);
  }
  return out;
}

json build_config(const std::string& command, CLI::App& sub, const Options& o) {
  json cfg = json::object();
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + o.config);
    try {
      cfg = json::parse(in);
    } catch (const json::exception& e) {
      throw CLI::ValidationError("--config", e.what());
    }
    if (!cfg.is_object()) throw CLI::ValidationError("--config", "config must be a JSON object");
  }
  cfg["command"] = command;
  auto given = [&](const char* name) {
    const CLI::Option* opt = sub.get_option_no_throw(name);
    return opt && opt->count() > 0;
  };
  if (!o.scenario.empty()) {
    // a path to a JSON scenario definition is accepted in place of a name
    if (o.scenario.size() > 5 && o.scenario.substr(o.scenario.size() - 5) == ".json") {
      std::ifstream in(o.scenario);
      if (!in) throw CLI::ValidationError("--scenario", "cannot open " + o.scenario);
      cfg["scenario_spec"] = json::parse(in);
      cfg.erase("scenario");
    } else {
      cfg["scenario"] = o.scenario;
    }
  }
  if (given("--t")) cfg["horizon"] = o.horizon;
  if (given("--dt")) cfg["dt"] = o.dt;
  if (given("--seed")) cfg["seed"] = o.seed;
  if (given("--seeds")) cfg["seeds"] = o.seeds;
  if (given("--grid")) cfg["grid"] = o.grid;
  if (given("--selection")) cfg["selection"] = o.selection;
  if (given("--method")) cfg["method"] = o.method;
  if (given("--out")) cfg["out"] = o.out;
  if (given("--format")) cfg["format"] = o.formats;
  if (given("--resolution")) cfg["resolution"] = o.resolution;
  if (given("--times")) cfg["times"] = o.times;
  if (given("--param")) {
    json p = cfg.value("parameters", json::object());
    for (const auto& kv : o.params) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) throw CLI::ValidationError("--param", "expected NAME=VALUE, got " + kv);
      try {
        p[kv.substr(0, eq)] = split_numbers(kv.substr(eq + 1), ',').at(0);
      } catch (const std::exception&) {
        throw CLI::ValidationError("--param", "bad number in " + kv);
      }
    }
    cfg["parameters"] = p;
  }
  if (given("--point")) {
    json pts = json::array();
    for (const auto& s : o.points) {
      std::vector<double> v;
      try {
        v = split_numbers(s, ',');
      } catch (const std::exception&) {
        v.clear();
      }
      if (v.size() != 2) throw CLI::ValidationError("--point", "expected X,Y, got " + s);
      pts.push_back(v);
    }
    cfg["points"] = pts;
  }
  return cfg;
}

void summarize(const json& report) {
  const std::string status = report.value("status", "error");
  if (report.contains("error")) {
    std::cerr << "flowsplit: " << report["error"].value("message", "error") << "\n";
    return;
  }
  std::size_t failed = 0, total = 0;
  for (const auto& c : report.value("checks", json::array())) {
    ++total;
    if (!c.value("passed", false)) {
      ++failed;
      std::cerr << "FAIL " << c.value("scenario", "") << " " << c.value("check", "") << ": " << c.value("detail", "")
                << "\n";
    }
  }
  if (total) std::cerr << status << ": " << (total - failed) << "/" << total << " checks passed\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowsplit: subdeterminant flows, foliation decompositions and attainability"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fs_version()));

  Options o;
  const char* commands[][2] = {
      {"simulate", "integrate a scenario and export the trajectory with its linearization"},
      {"subdet-trace", "propagate the decomposability minor (direct, ito, cb or all)"},
      {"stopping-time", "first time the minor reaches zero"},
      {"decompose", "factor the flow map into vertical and horizontal diffeomorphisms"},
      {"attainability", "attainable and co-attainable sets on a grid fixture"},
      {"verify-all", "run every registered check of every bundled scenario"},
      {"list-scenarios", "list bundled scenarios"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    CLI::App* s = app.add_subcommand(name, help);
    subs.push_back(s);
    const std::string cmd = name;
    s->add_flag("--pretty", o.pretty, "indent the JSON report");
    if (cmd == "list-scenarios") continue;
    s->add_option("--config", o.config, "JSON run config; flags override its fields")->check(CLI::ExistingFile);
    s->add_option("scenario,--scenario", o.scenario, "scenario name or path to a .json scenario");
    s->add_option("--param", o.params, "override a scenario constant, NAME=VALUE (repeatable)");
    s->add_option("--out", o.out, "output directory for CSV/JSON artifacts");
    s->add_option("--format", o.formats, "output formats")->check(CLI::IsMember({"csv", "json", "pgm"}))->delimiter(',');
    if (cmd == "verify-all") continue;
    if (cmd == "attainability") {
      s->add_option("--resolution", o.resolution, "cells per unit length");
      s->add_option("--point", o.points, "query point X,Y (repeatable)");
      continue;
    }
    s->add_option("--t,--horizon", o.horizon, "horizon (decomposition time for decompose)");
    s->add_option("--dt", o.dt, "step size");
    s->add_option("--seed", o.seed, "noise seed (default FLOW_SEED, then the scenario seed)");
    if (cmd != "decompose") s->add_option("--seeds", o.seeds, "number of consecutive seeds to run");
    if (cmd == "subdet-trace" || cmd == "stopping-time") {
      s->add_option("--selection", o.selection, "minor selection \"rows;cols\", 1-based, e.g. \"2,3;2,3\"");
      s->add_option("--method", o.method, "direct | ito | cb | all")->check(CLI::IsMember({"direct", "ito", "cb", "all"}));
    }
    if (cmd == "decompose") {
      s->add_option("--grid", o.grid, "lattice counts WxH[xD]");
      s->add_option("--times", o.times, "several decomposition times")->delimiter(',');
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  CLI::App* chosen = nullptr;
  for (CLI::App* s : subs)
    if (s->parsed()) chosen = s;

  json cfg;
  try {
    cfg = build_config(chosen->get_name(), *chosen, o);
  } catch (const CLI::Error& e) {
    std::cerr << "flowsplit: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "flowsplit: " << e.what() << "\n";
    return 2;
  }

  char* raw = nullptr;
  int exit_status = 3;
  if (fs_run(cfg.dump().c_str(), &raw, &exit_status) != FS_OK) {
    std::cerr << "flowsplit: " << fs_last_error() << "\n";
    return 3;
  }
  const std::string text = raw;
  fs_string_free(raw);
  const json report = json::parse(text);
  std::cout << (o.pretty ? report.dump(2) : report.dump()) << "\n";
  summarize(report);
  return exit_status;
}
