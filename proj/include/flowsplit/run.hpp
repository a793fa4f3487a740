#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowsplit/expr.hpp"

namespace flowsplit {

struct RunConfig {
  std::string command;  // simulate | subdet-trace | stopping-time | decompose | attainability | verify-all | list-scenarios
  std::string scenario;
  std::optional<nlohmann::json> scenario_spec;  // inline custom scenario
  Expression::Constants parameters;             // overrides of scenario constants
  std::optional<double> horizon;
  std::optional<double> dt;
  std::vector<double> times;  // decompose sample times
  std::optional<std::uint64_t> seed;
  std::size_t seeds = 1;
  std::optional<std::vector<std::size_t>> grid;
  std::optional<std::string> selection;
  std::string method = "direct";  // direct | ito | cb | all
  std::optional<double> resolution;
  std::vector<std::array<double, 2>> points;  // attainability queries
  std::string out_dir;                         // empty: no files
  std::vector<std::string> formats{"csv", "json"};

  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  // Shape-level validation; scenario-dependent checks happen in run().
  void validate() const;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitChecksFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

struct RunOutcome {
  int status = kExitOk;
  nlohmann::json report;
  std::vector<std::string> files;
};

// Never throws; errors become a nonzero status with an "error" entry.
RunOutcome run(const RunConfig& config);

// "WxH" or "WxHxD".
std::vector<std::size_t> parse_grid(std::string_view text);

// FLOW_SEED if set and valid.
std::optional<std::uint64_t> env_seed();

}  // namespace flowsplit
