#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowsplit/attainability.hpp"
#include "flowsplit/decomposition.hpp"
#include "flowsplit/expr.hpp"
#include "flowsplit/lattice.hpp"
#include "flowsplit/subdet_flow.hpp"
#include "flowsplit/vector_field.hpp"

namespace flowsplit {

// Closed forms take the time, the Brownian values W_t (one per noise) and
// the initial point.
using ClosedFlow = std::function<Vector(double, std::span<const double>, std::span<const double>)>;
using ClosedSubdet = std::function<double(double, std::span<const double>, std::span<const double>)>;
// Linear parts of psi_t and xi_t for maps that are linear in the chart.
using ClosedFactors = std::function<std::pair<Matrix, Matrix>(double)>;

// When coordinate `axis` reaches `at`, shift it by `shift` and reflect the
// listed coordinates about c/2 (x -> c - x). Axes are 0-based.
struct FaceTransition {
  std::size_t axis = 0;
  double at = 1.0;
  double shift = -1.0;
  std::vector<std::pair<std::size_t, double>> reflect;

  static FaceTransition from_json(const nlohmann::json& j, std::size_t dim);
  ChartTransition make() const;
};

struct NamedPoint {
  std::string name;
  std::array<double, 2> at{};
};

// Planar attainability fixture. `build(resolution)` produces the labelled
// grid; query points are in continuous coordinates relative to `origin`.
struct ScenarioFixture {
  std::function<GridFoliation(double)> build;
  double resolution = 1.0;
  std::array<double, 2> origin{0.0, 0.0};
  std::vector<NamedPoint> queries;
  bool check_every_cell = false;

  Cell cell_at(const std::array<double, 2>& p, double resolution) const;
};

struct Scenario {
  std::string name;
  std::string description;
  nlohmann::json spec;  // symbolic definition as loaded
  Expression::Constants constants;

  std::shared_ptr<const VectorFieldSystem> system;
  std::optional<FoliationSplit> split;
  Vector x0;
  double horizon = 1.0;
  double dt = 1e-3;
  std::uint64_t seed = 0;
  std::optional<MinorSelection> selection;

  std::optional<Lattice> grid;
  std::vector<double> decompose_times;

  ClosedFlow closed_flow;
  ClosedSubdet closed_subdet;
  ClosedFactors closed_factors;

  std::optional<ScenarioFixture> fixture;
  std::vector<std::string> checks;

  bool has_flow() const noexcept { return system != nullptr; }
  std::size_t dim() const noexcept { return system ? system->dim() : 2; }
  std::size_t noise_count() const noexcept { return system ? system->noise_count() : 0; }
  MinorSelection default_selection() const;
};

// Builds a scenario from its symbolic JSON form:
// {name, description, dim, vertical, variables?, constants?, drift: [..],
//  diffusion?: [[..], ..], x0, horizon, dt, seed, selection?, grid?: {lo, hi,
//  counts}, decompose_times?, transition?: {axis, at, shift, reflect}}.
// Fixture-only scenarios carry {fixture: GridFoliation json, queries?}.
Scenario scenario_from_json(const nlohmann::json& spec);

struct SelfCheckReport {
  double flow_error = 0.0;
  double subdet_error = 0.0;
  bool checked_flow = false;
  bool checked_subdet = false;
  bool passed = true;
};

inline constexpr double kSelfCheckTolerance = 1e-4;

// Closed forms against integration at t = 0.1 and 0.5.
SelfCheckReport self_check(const Scenario& s);

// Bundled scenarios, built once and self-checked.
const std::vector<Scenario>& registry();
std::vector<std::string> scenario_names();

// A bundled scenario rebuilt with some constants overridden (e.g. the
// Moebius traversal speed). Throws Errc::unknown_scenario.
Scenario make_scenario(std::string_view name, const Expression::Constants& overrides = {});

// Parses "2;2" or "2,3;1,3" against dimension n.
MinorSelection parse_selection(std::string_view text, std::size_t n);

// Grid foliations used by the fixtures, exposed for tests.
GridFoliation cartesian_foliation(std::size_t width, std::size_t height);
GridFoliation stepped_l_foliation(double resolution);
GridFoliation web_foliation(double resolution, double spiral, double theta_bins, double s_width);

// Relabels each label class by 4-connected component so that labels name
// connected discrete leaves.
std::vector<int> connected_relabel(std::size_t width, std::size_t height, const std::vector<std::uint8_t>& mask,
                                   const std::vector<int>& raw);

Matrix expm(const Matrix& a);

}  // namespace flowsplit
