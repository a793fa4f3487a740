#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowsplit/decomposition.hpp"
#include "flowsplit/scenario.hpp"

namespace flowsplit {

// phi_t sampled on a lattice (one shared Brownian path), decomposed and
// verified, plus the orientation verdict along the trajectory of x0.
struct FlowDecomposition {
  double t = 0.0;
  double dt = 0.0;
  DiffeoSample phi;
  std::vector<Matrix> jacobians;
  DecompositionResult result;
  VerificationReport verification;
  OrientationReport orientation;
  std::size_t crossings = 0;  // chart transitions of x0 up to t
  std::optional<double> first_crossing;
};

inline constexpr double kVerifyTolerance = 1e-6;

// dt is shrunk so that t is a whole number of steps.
FlowDecomposition decompose_flow(const Scenario& s, double t, const Lattice& grid, std::uint64_t seed, double dt,
                                 double tol = kVerifyTolerance);

nlohmann::json flow_decomposition_to_json(const FlowDecomposition& d);

struct CheckResult {
  std::string scenario;
  std::string name;
  bool passed = false;
  double value = 0.0;
  double limit = 0.0;
  std::string detail;
  double seconds = 0.0;

  nlohmann::json to_json(bool with_timing = true) const;
};

// Generic checks that apply to the scenario followed by its registered ones.
std::vector<std::string> check_names(const Scenario& s);

CheckResult run_check(const Scenario& s, std::string_view name);
std::vector<CheckResult> run_checks(const Scenario& s);

// Seeds seed, seed+1, ... evaluated concurrently, results in seed order.
template <class F>
auto fan_out(std::uint64_t seed, std::size_t count, F&& f) -> std::vector<decltype(f(seed))>;

}  // namespace flowsplit

#include <future>

namespace flowsplit {

template <class F>
auto fan_out(std::uint64_t seed, std::size_t count, F&& f) -> std::vector<decltype(f(seed))> {
  std::vector<std::future<decltype(f(seed))>> jobs;
  jobs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) jobs.push_back(std::async(std::launch::async, f, seed + i));
  std::vector<decltype(f(seed))> out;
  out.reserve(count);
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

}  // namespace flowsplit
