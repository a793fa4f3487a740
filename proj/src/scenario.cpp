#include "flowsplit/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <queue>
#include <sstream>

#include "flowsplit/minor_algebra.hpp"
#include "flowsplit/sde.hpp"

namespace flowsplit {

using nlohmann::json;

namespace {

[[noreturn]] void bad_spec(const std::string& name, const std::string& what) {
  throw Error(Errc::parse_error, "scenario '" + name + "': " + what);
}

std::vector<std::size_t> parse_index_list(std::string_view text) {
  std::vector<std::size_t> out;
  std::string item;
  std::stringstream ss{std::string(text)};
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }), item.end());
    if (item.empty()) throw Error(Errc::invalid_argument, "empty index in selection");
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &pos);
    } catch (const std::exception&) {
      throw Error(Errc::invalid_argument, "bad index '" + item + "' in selection");
    }
    if (pos != item.size() || v < 1) throw Error(Errc::invalid_argument, "bad index '" + item + "' in selection");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

double rotation_angle(const Vector& from, const Vector& to) {
  return std::atan2(from[0] * to[1] - from[1] * to[0], from[0] * to[0] + from[1] * to[1]);
}

Matrix rotation(double t) { return Matrix(2, 2, {std::cos(t), -std::sin(t), std::sin(t), std::cos(t)}); }

std::pair<Matrix, Matrix> rotation_factors(double t) {
  const double c = std::cos(t), s = std::sin(t);
  return {Matrix(2, 2, {1.0, 0.0, s, c}), Matrix(2, 2, {1.0 / c, -s / c, 0.0, 1.0})};
}

Expression::Constants merge_constants(const std::string& name, Expression::Constants base,
                                      const Expression::Constants& overrides) {
  for (const auto& [k, v] : overrides) {
    auto it = base.find(k);
    if (it == base.end()) throw Error(Errc::invalid_argument, "scenario '" + name + "' has no parameter '" + k + "'");
    it->second = v;
  }
  return base;
}

json constants_json(const Expression::Constants& c) {
  json j = json::object();
  for (const auto& [k, v] : c) j[k] = v;
  return j;
}

}  // namespace

MinorSelection parse_selection(std::string_view text, std::size_t n) {
  const auto semi = text.find(';');
  if (semi == std::string_view::npos) throw Error(Errc::invalid_argument, "selection must look like \"rows;cols\"");
  auto rows = parse_index_list(text.substr(0, semi));
  auto cols = parse_index_list(text.substr(semi + 1));
  return MinorSelection(IndexSelection(std::move(rows), n), IndexSelection(std::move(cols), n));
}

FaceTransition FaceTransition::from_json(const json& j, std::size_t dim) {
  FaceTransition f;
  const auto axis = j.at("axis").get<std::size_t>();
  if (axis < 1 || axis > dim) throw Error(Errc::out_of_range, "transition axis outside [1, dim]");
  f.axis = axis - 1;
  f.at = j.value("at", 1.0);
  f.shift = j.value("shift", -1.0);
  if (!(f.shift < 0.0)) throw Error(Errc::invalid_argument, "transition shift must be negative");
  for (const auto& r : j.value("reflect", json::array())) {
    const auto i = r.at(0).get<std::size_t>();
    if (i < 1 || i > dim || i - 1 == f.axis) throw Error(Errc::out_of_range, "bad reflected coordinate");
    f.reflect.emplace_back(i - 1, r.at(1).get<double>());
  }
  return f;
}

ChartTransition FaceTransition::make() const {
  return [f = *this](Vector& p) -> std::optional<Matrix> {
    const double lo = f.at + f.shift;
    double move = 0.0;
    if (p[f.axis] >= f.at) {
      move = f.shift;
    } else if (p[f.axis] < lo) {
      move = -f.shift;
    } else {
      return std::nullopt;
    }
    p[f.axis] += move;
    Matrix jac = Matrix::identity(p.size());
    for (const auto& [i, c] : f.reflect) {
      p[i] = c - p[i];
      jac(i, i) = -1.0;
    }
    return jac;
  };
}

Cell ScenarioFixture::cell_at(const std::array<double, 2>& p, double res) const {
  const double cx = std::floor((p[0] - origin[0]) * res);
  const double cy = std::floor((p[1] - origin[1]) * res);
  if (cx < 0.0 || cy < 0.0) throw Error(Errc::out_of_range, "query point below the fixture origin");
  return {static_cast<std::size_t>(cx), static_cast<std::size_t>(cy)};
}

MinorSelection Scenario::default_selection() const {
  if (selection) return *selection;
  if (!split) throw Error(Errc::invalid_argument, "scenario '" + name + "' has no split");
  return MinorSelection::decomposability(split->n, split->k);
}

Scenario scenario_from_json(const json& spec) {
  Scenario s;
  if (!spec.is_object()) throw Error(Errc::parse_error, "scenario spec must be a JSON object");
  try {
    s.name = spec.at("name").get<std::string>();
  } catch (const json::exception&) {
    throw Error(Errc::parse_error, "scenario spec needs a string 'name'");
  }
  s.spec = spec;
  try {
    s.description = spec.value("description", std::string{});
    for (const auto& c : spec.value("checks", json::array())) s.checks.push_back(c.get<std::string>());

    if (spec.contains("fixture")) {
      GridFoliation g = GridFoliation::from_json(spec.at("fixture"));
      ScenarioFixture fx;
      fx.resolution = g.resolution();
      for (const auto& q : spec.value("queries", json::array())) {
        const auto cell = q.at("cell").get<std::array<double, 2>>();
        fx.queries.push_back({q.at("name").get<std::string>(),
                              {(cell[0] + 0.5) / fx.resolution, (cell[1] + 0.5) / fx.resolution}});
      }
      fx.check_every_cell = spec.value("check_every_cell", fx.queries.empty());
      fx.build = [g](double res) {
        if (res != g.resolution()) throw Error(Errc::invalid_argument, "stored fixture has a fixed resolution");
        return g;
      };
      s.fixture = std::move(fx);
      if (std::find(s.checks.begin(), s.checks.end(), "attainability") == s.checks.end()) s.checks.push_back("attainability");
      if (!spec.contains("drift")) return s;
    }

    const auto n = spec.at("dim").get<std::size_t>();
    if (n == 0) bad_spec(s.name, "dim must be positive");
    const auto k = spec.value("vertical", std::size_t{1});
    s.split = FoliationSplit(n, k);
    const auto vars = spec.contains("variables") ? spec.at("variables").get<std::vector<std::string>>() : coordinate_names(n);
    if (vars.size() != n) bad_spec(s.name, "variables list must have dim entries");
    const json constants = spec.value("constants", json::object());
    for (const auto& [key, val] : constants.items()) s.constants[key] = val.get<double>();

    auto field = [&](const json& comps) {
      const auto texts = comps.get<std::vector<std::string>>();
      if (texts.size() != n) bad_spec(s.name, "every field needs dim components");
      std::vector<Expression> exprs;
      for (const auto& t : texts) exprs.push_back(Expression::parse(t, vars, s.constants));
      return expression_field(std::move(exprs));
    };
    std::vector<VectorField> fields;
    fields.push_back(field(spec.at("drift")));
    for (const auto& d : spec.value("diffusion", json::array())) fields.push_back(field(d));

    s.x0 = spec.at("x0").get<Vector>();
    if (s.x0.size() != n) bad_spec(s.name, "x0 must have dim entries");
    s.horizon = spec.value("horizon", 1.0);
    s.dt = spec.value("dt", 1e-3);
    s.seed = spec.value("seed", std::uint64_t{0});
    if (!(s.dt > 0.0)) bad_spec(s.name, "dt must be positive");
    if (!(s.horizon >= s.dt)) bad_spec(s.name, "horizon must be at least dt");
    if (spec.contains("selection")) s.selection = parse_selection(spec.at("selection").get<std::string>(), n);

    std::vector<Vector> probes{s.x0};
    if (spec.contains("grid")) {
      const json& g = spec.at("grid");
      s.grid = Lattice(g.at("lo").get<Vector>(), g.at("hi").get<Vector>(), g.at("counts").get<std::vector<std::size_t>>());
      if (s.grid->dim() != n) bad_spec(s.name, "grid dimension must equal dim");
      probes.push_back(s.grid->lo());
      probes.push_back(s.grid->hi());
    }
    for (const auto& p : spec.value("check_points", json::array())) probes.push_back(p.get<Vector>());
    if (spec.contains("decompose_times")) {
      s.decompose_times = spec.at("decompose_times").get<std::vector<double>>();
    } else if (spec.contains("t_decompose")) {
      s.decompose_times = {spec.at("t_decompose").get<double>()};
    }
    auto sys = std::make_shared<VectorFieldSystem>(n, std::move(fields), probes);
    if (spec.contains("transition")) sys->set_transition(FaceTransition::from_json(spec.at("transition"), n).make());
    s.system = std::move(sys);
  } catch (const json::exception& e) {
    bad_spec(s.name, e.what());
  }
  return s;
}

SelfCheckReport self_check(const Scenario& s) {
  SelfCheckReport rep;
  if (!s.has_flow() || (!s.closed_flow && !s.closed_subdet)) return rep;
  constexpr double dt = 1e-4;
  constexpr std::size_t checkpoints[] = {1000, 5000};  // t = 0.1, 0.5
  const BrownianPath path = sample_brownian(s.seed, s.noise_count(), dt, checkpoints[1]);
  const LinearizedTrajectory traj = integrate_linearized(*s.system, s.x0, path);
  if (traj.explosion_step) {
    rep.passed = false;
    rep.flow_error = rep.subdet_error = std::numeric_limits<double>::infinity();
    return rep;
  }
  const MinorSelection sel = s.default_selection();
  for (std::size_t step : checkpoints) {
    const double t = traj.times[step];
    const std::vector<double> w = path.value_at(step);
    if (s.closed_flow) {
      rep.checked_flow = true;
      const Vector x = s.closed_flow(t, w, s.x0);
      for (std::size_t i = 0; i < x.size(); ++i) rep.flow_error = std::max(rep.flow_error, std::abs(x[i] - traj.points[step][i]));
    }
    if (s.closed_subdet) {
      rep.checked_subdet = true;
      const double g = minor_det(traj.linearizations[step], sel.rows, sel.cols);
      rep.subdet_error = std::max(rep.subdet_error, std::abs(g - s.closed_subdet(t, w, s.x0)));
    }
  }
  rep.passed = rep.flow_error <= kSelfCheckTolerance && rep.subdet_error <= kSelfCheckTolerance;
  return rep;
}

std::vector<int> connected_relabel(std::size_t width, std::size_t height, const std::vector<std::uint8_t>& mask,
                                   const std::vector<int>& raw) {
  const std::size_t n = width * height;
  std::vector<int> out(n, -1);
  int next = 0;
  for (std::size_t start = 0; start < n; ++start) {
    if (!mask[start] || out[start] >= 0) continue;
    std::queue<std::size_t> q;
    q.push(start);
    out[start] = next;
    while (!q.empty()) {
      const std::size_t i = q.front();
      q.pop();
      const std::size_t x = i % width, y = i / width;
      std::size_t nb[4];
      std::size_t cnt = 0;
      if (x > 0) nb[cnt++] = i - 1;
      if (x + 1 < width) nb[cnt++] = i + 1;
      if (y > 0) nb[cnt++] = i - width;
      if (y + 1 < height) nb[cnt++] = i + width;
      for (std::size_t c = 0; c < cnt; ++c) {
        const std::size_t j = nb[c];
        if (mask[j] && out[j] < 0 && raw[j] == raw[i]) {
          out[j] = next;
          q.push(j);
        }
      }
    }
    ++next;
  }
  return out;
}

GridFoliation cartesian_foliation(std::size_t width, std::size_t height) {
  std::vector<std::uint8_t> mask(width * height, 1);
  std::vector<int> h(width * height), v(width * height);
  for (std::size_t i = 0; i < width * height; ++i) {
    h[i] = static_cast<int>(i / width);
    v[i] = static_cast<int>(i % width);
  }
  return GridFoliation(width, height, std::move(mask), std::move(h), std::move(v));
}

// [0,3]^2 with the top-right part removed: y<1, or x<1, or the unit step
// [1,2)x[1,2). Leaves are the row and column segments.
GridFoliation stepped_l_foliation(double resolution) {
  const auto n = static_cast<std::size_t>(std::lround(3.0 * resolution));
  if (n < 3) throw Error(Errc::invalid_argument, "L-domain resolution too small");
  std::vector<std::uint8_t> mask(n * n, 0);
  std::vector<int> rows(n * n), cols(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const double cx = (static_cast<double>(i) + 0.5) / resolution;
      const double cy = (static_cast<double>(j) + 0.5) / resolution;
      const std::size_t idx = j * n + i;
      mask[idx] = (cy < 1.0 || cx < 1.0 || (cx < 2.0 && cy < 2.0)) ? 1 : 0;
      rows[idx] = static_cast<int>(j);
      cols[idx] = static_cast<int>(i);
    }
  }
  auto h = connected_relabel(n, n, mask, rows);
  auto v = connected_relabel(n, n, mask, cols);
  return GridFoliation(n, n, std::move(mask), std::move(h), std::move(v), resolution);
}

// Annulus 1/2 <= r <= 2 in [-2,2]^2. Vertical leaves are angular wedges,
// horizontal leaves are bands of log r - a*theta.
GridFoliation web_foliation(double resolution, double spiral, double theta_bins, double s_width) {
  const auto n = static_cast<std::size_t>(std::lround(4.0 * resolution));
  if (n < 8) throw Error(Errc::invalid_argument, "web resolution too small");
  if (!(theta_bins >= 1.0) || !(s_width > 0.0)) throw Error(Errc::invalid_argument, "bad web bin sizes");
  std::vector<std::uint8_t> mask(n * n, 0);
  std::vector<int> hs(n * n, 0), vs(n * n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const double x = -2.0 + (static_cast<double>(i) + 0.5) / resolution;
      const double y = -2.0 + (static_cast<double>(j) + 0.5) / resolution;
      const double r = std::hypot(x, y);
      const std::size_t idx = j * n + i;
      if (r < 0.5 || r > 2.0) continue;
      mask[idx] = 1;
      const double th = std::atan2(y, x);
      const double s = std::log(r) - spiral * th;
      vs[idx] = static_cast<int>(std::floor((th + std::numbers::pi) / (2.0 * std::numbers::pi) * theta_bins));
      hs[idx] = static_cast<int>(std::floor((s + 8.0) / s_width));
    }
  }
  auto h = connected_relabel(n, n, mask, hs);
  auto v = connected_relabel(n, n, mask, vs);
  return GridFoliation(n, n, std::move(mask), std::move(h), std::move(v), resolution);
}

Matrix expm(const Matrix& a) {
  if (!a.square()) throw Error(Errc::dimension_mismatch, "expm of a non-square matrix");
  double norm = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double row = 0.0;
    for (double v : a.row(i)) row += std::abs(v);
    norm = std::max(norm, row);
  }
  int squarings = 0;
  while (norm > 0.25) {
    norm *= 0.5;
    ++squarings;
  }
  Matrix scaled = a;
  const double f = std::ldexp(1.0, -squarings);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) scaled(i, j) *= f;
  Matrix sum = Matrix::identity(a.rows());
  Matrix term = sum;
  for (int k = 1; k <= 20; ++k) {
    term = term * scaled;
    for (double& v : term.entries()) v /= k;
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j) sum(i, j) += term(i, j);
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

namespace {

using Builder = Scenario (*)(const Expression::Constants&);

Scenario build_rotation(const Expression::Constants& over) {
  merge_constants("rotation", {}, over);
  json spec = {{"name", "rotation"},
               {"description", "linear rotation in the plane; decomposability minor cos t"},
               {"dim", 2},
               {"vertical", 1},
               {"drift", json::array({"-x2", "x1"})},
               {"x0", {1.0, 0.0}},
               {"horizon", 2.0},
               {"dt", 1e-4},
               {"seed", 0},
               {"grid", {{"lo", {-1.0, -1.0}}, {"hi", {1.0, 1.0}}, {"counts", {21, 21}}}},
               {"t_decompose", std::numbers::pi / 4.0},
               {"checks", {"stopping-time", "factorization", "orientation", "flow-property"}}};
  Scenario s = scenario_from_json(spec);
  s.closed_flow = [](double t, std::span<const double>, std::span<const double> x) { return rotation(t) * x; };
  s.closed_subdet = [](double t, std::span<const double>, std::span<const double>) { return std::cos(t); };
  s.closed_factors = rotation_factors;
  return s;
}

Scenario build_noisy_rotation(const Expression::Constants& over) {
  const auto c = merge_constants("noisy-rotation", {{"sigma", 0.3}}, over);
  json spec = {{"name", "noisy-rotation"},
               {"description", "rotation drift with a small rotational noise field"},
               {"dim", 2},
               {"constants", constants_json(c)},
               {"drift", json::array({"-x2", "x1"})},
               {"diffusion", json::array({json::array({"-sigma*x2", "sigma*x1"})})},
               {"x0", {1.0, 0.0}},
               {"horizon", 1.0},
               {"dt", 1e-3},
               {"seed", 7},
               {"grid", {{"lo", {-1.0, -1.0}}, {"hi", {1.0, 1.0}}, {"counts", {11, 11}}}},
               {"t_decompose", 0.5}};
  Scenario s = scenario_from_json(spec);
  const double sigma = c.at("sigma");
  s.closed_flow = [sigma](double t, std::span<const double> w, std::span<const double> x) {
    return rotation(t + sigma * w[0]) * x;
  };
  s.closed_subdet = [sigma](double t, std::span<const double> w, std::span<const double>) {
    return std::cos(t + sigma * w[0]);
  };
  return s;
}

// Linear field x' = A x written in the chart (theta, r). Rays go to rays.
Scenario build_polar_linear(const Expression::Constants& over) {
  const auto c = merge_constants(
      "polar-linear", {{"a", 0.2}, {"b", -1.0}, {"c", 0.6}, {"d", -0.3}, {"beta", 0.4}}, over);
  const std::string ar = "(a*cos(x1) + b*sin(x1))";
  const std::string cr = "(c*cos(x1) + d*sin(x1))";
  const std::string th = "-sin(x1)*" + ar + " + cos(x1)*" + cr;
  const std::string rr = "x2*(cos(x1)*" + ar + " + sin(x1)*" + cr + ")";
  json spec = {{"name", "polar-linear"},
               {"description", "linear flow in the (angle, radius) chart; vertical leaves are rays"},
               {"dim", 2},
               {"constants", constants_json(c)},
               {"drift", json::array({th, rr})},
               {"diffusion", json::array({json::array({"beta*(" + th + ")", "beta*(" + rr + ")"})})},
               {"x0", {0.3, 1.0}},
               {"horizon", 1.0},
               {"dt", 1e-3},
               {"seed", 3},
               {"grid", {{"lo", {-0.5, 0.5}}, {"hi", {0.5, 1.5}}, {"counts", {11, 11}}}},
               {"t_decompose", 0.5},
               {"checks", {"vertical-preserving"}}};
  Scenario s = scenario_from_json(spec);
  const Matrix a(2, 2, {c.at("a"), c.at("b"), c.at("c"), c.at("d")});
  const double beta = c.at("beta");
  auto propagate = [a, beta](double t, double w) {
    Matrix m = a;
    for (double& v : m.entries()) v *= t + beta * w;
    return expm(m);
  };
  s.closed_flow = [propagate](double t, std::span<const double> w, std::span<const double> x) {
    const Vector e{std::cos(x[0]), std::sin(x[0])};
    const Vector img = propagate(t, w[0]) * e;
    return Vector{x[0] + rotation_angle(e, img), x[1] * std::hypot(img[0], img[1])};
  };
  s.closed_subdet = [propagate](double t, std::span<const double> w, std::span<const double> x) {
    const Vector img = propagate(t, w[0]) * Vector{std::cos(x[0]), std::sin(x[0])};
    return std::hypot(img[0], img[1]);
  };
  return s;
}

Scenario build_shear(const Expression::Constants& over) {
  merge_constants("shear", {}, over);
  json spec = {{"name", "shear"},
               {"description", "lower rows of every Jacobian vanish; the minor stays 1"},
               {"dim", 2},
               {"drift", json::array({"cos(x2) - 0.5*x1", "0.2"})},
               {"diffusion", json::array({json::array({"0.3*sin(x1 + x2)", "0.1"})})},
               {"x0", {0.1, 0.2}},
               {"horizon", 1.0},
               {"dt", 1e-3},
               {"seed", 11},
               {"grid", {{"lo", {-0.5, -0.5}}, {"hi", {0.5, 0.5}}, {"counts", {11, 11}}}},
               {"t_decompose", 0.5},
               {"checks", {"unit-trace"}}};
  Scenario s = scenario_from_json(spec);
  s.closed_subdet = [](double, std::span<const double>, std::span<const double>) { return 1.0; };
  return s;
}

json moebius_common(const std::string& name, const Expression::Constants& c) {
  return {{"name", name},
          {"dim", 3},
          {"vertical", 1},
          {"constants", constants_json(c)},
          {"drift", json::array({"0", "speed", "0"})},
          {"horizon", 2.0},
          {"dt", 1e-3},
          {"seed", 0},
          {"decompose_times", {0.2, 0.4, 0.6, 0.7, 0.75, 0.78, 0.8, 0.82, 0.85, 0.9, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0}}};
}

// The cube [0,1]^3 with (x,1,z) glued to (1-x,0,1-z); the strip S is z = 1/2.
Scenario build_moebius(const Expression::Constants& over) {
  const auto c = merge_constants("moebius", {{"speed", 1.0}}, over);
  json spec = moebius_common("moebius", c);
  spec["description"] = "flow along a Moebius tube; the transverse orientation flips at the glued face";
  spec["x0"] = {0.3, 0.2, 0.7};
  spec["grid"] = {{"lo", {0.25, 0.15, 0.65}}, {"hi", {0.35, 0.25, 0.75}}, {"counts", {3, 3, 3}}};
  spec["transition"] = {{"axis", 2}, {"at", 1.0}, {"shift", -1.0}, {"reflect", json::array({json::array({1, 1.0}), json::array({3, 1.0})})}};
  spec["checks"] = {"moebius-quotient"};
  Scenario s = scenario_from_json(spec);
  const double speed = c.at("speed");
  s.closed_flow = [speed](double t, std::span<const double>, std::span<const double> x) {
    const double y = x[1] + speed * t;
    const double turns = std::floor(y);
    Vector out{x[0], y - turns, x[2]};
    if (std::fmod(std::abs(turns), 2.0) == 1.0) {
      out[0] = 1.0 - out[0];
      out[2] = 1.0 - out[2];
    }
    return out;
  };
  s.closed_subdet = [speed](double t, std::span<const double>, std::span<const double> x) {
    const double turns = std::floor(x[1] + speed * t);
    return std::fmod(std::abs(turns), 2.0) == 1.0 ? -1.0 : 1.0;
  };
  return s;
}

// Same tube with S removed, in coordinates (x, y, |z - 1/2|).
Scenario build_moebius_slit(const Expression::Constants& over) {
  const auto c = merge_constants("moebius-slit", {{"speed", 1.0}}, over);
  json spec = moebius_common("moebius-slit", c);
  spec["description"] = "the Moebius tube with the central strip removed; transversely orientable";
  spec["x0"] = {0.3, 0.2, 0.2};
  spec["grid"] = {{"lo", {0.25, 0.15, 0.15}}, {"hi", {0.35, 0.25, 0.25}}, {"counts", {3, 3, 3}}};
  spec["transition"] = {{"axis", 2}, {"at", 1.0}, {"shift", -1.0}, {"reflect", json::array({json::array({1, 1.0})})}};
  spec["checks"] = {"moebius-slit"};
  Scenario s = scenario_from_json(spec);
  const double speed = c.at("speed");
  s.closed_flow = [speed](double t, std::span<const double>, std::span<const double> x) {
    const double y = x[1] + speed * t;
    const double turns = std::floor(y);
    Vector out{x[0], y - turns, x[2]};
    if (std::fmod(std::abs(turns), 2.0) == 1.0) out[0] = 1.0 - out[0];
    return out;
  };
  s.closed_subdet = [](double, std::span<const double>, std::span<const double>) { return 1.0; };
  return s;
}

// Web chart (u, v) = (theta, log r - a*theta): vertical leaves are rays,
// horizontal leaves are log spirals. The flow rotates about a centre chosen
// so that x0 reaches the top of its attainable band at t = pi/2.
Scenario build_web(const Expression::Constants& over) {
  const auto c = merge_constants("web", {{"a", 0.5}, {"resolution", 8.0}, {"theta_bins", 12.0}, {"s_width", 0.6}}, over);
  const double a = c.at("a");
  const double u0 = std::numbers::pi / 4.0;
  const double v0 = std::log(std::numbers::sqrt2) - a * u0;
  const double d = std::log(2.0) - std::log(std::numbers::sqrt2);
  Expression::Constants fc{{"uc", u0 - d}, {"vc", v0}};
  json spec = {{"name", "web"},
               {"description", "web-like pair of foliations: rays and log spirals on an annulus"},
               {"dim", 2},
               {"constants", constants_json(fc)},
               {"drift", json::array({"-(x2 - vc)", "x1 - uc"})},
               {"x0", {u0, v0}},
               {"horizon", 2.0},
               {"dt", 1e-3},
               {"seed", 0},
               {"grid", {{"lo", {u0 - 0.2, v0 - 0.2}}, {"hi", {u0 + 0.2, v0 + 0.2}}, {"counts", {11, 11}}}},
               {"t_decompose", 0.5},
               {"checks", {"web-hitting", "attainability"}}};
  Scenario s = scenario_from_json(spec);
  s.constants.insert(c.begin(), c.end());
  const Vector centre{u0 - d, v0};
  s.closed_flow = [centre](double t, std::span<const double>, std::span<const double> x) {
    const Vector off = rotation(t) * Vector{x[0] - centre[0], x[1] - centre[1]};
    return Vector{centre[0] + off[0], centre[1] + off[1]};
  };
  s.closed_subdet = [](double t, std::span<const double>, std::span<const double>) { return std::cos(t); };
  s.closed_factors = rotation_factors;
  ScenarioFixture fx;
  const double theta_bins = c.at("theta_bins"), s_width = c.at("s_width");
  fx.build = [a, theta_bins, s_width](double res) { return web_foliation(res, a, theta_bins, s_width); };
  fx.resolution = c.at("resolution");
  fx.origin = {-2.0, -2.0};
  fx.queries = {{"x", {1.0, 1.0}}};
  s.fixture = std::move(fx);
  return s;
}

Scenario build_l_domain(const Expression::Constants& over) {
  const auto c = merge_constants("l-domain", {{"resolution", 4.0}}, over);
  Scenario s;
  s.name = "l-domain";
  s.description = "stepped L-shaped domain with row and column leaves";
  s.constants = c;
  s.spec = {{"name", s.name}, {"description", s.description}, {"constants", constants_json(c)}};
  ScenarioFixture fx;
  fx.build = stepped_l_foliation;
  fx.resolution = c.at("resolution");
  fx.queries = {{"x", {0.5, 0.5}}, {"z", {1.5, 1.5}}, {"y", {0.5, 2.5}}};
  s.fixture = std::move(fx);
  s.checks = {"attainability", "l-domain-caption", "refinement"};
  return s;
}

Scenario build_cartesian(const Expression::Constants& over) {
  const auto c = merge_constants("cartesian", {{"width", 6.0}, {"height", 4.0}}, over);
  Scenario s;
  s.name = "cartesian";
  s.description = "product foliation of a full rectangle";
  s.constants = c;
  s.spec = {{"name", s.name}, {"description", s.description}, {"constants", constants_json(c)}};
  ScenarioFixture fx;
  const auto w = static_cast<std::size_t>(c.at("width"));
  const auto h = static_cast<std::size_t>(c.at("height"));
  if (w < 1 || h < 1) throw Error(Errc::invalid_argument, "cartesian fixture needs positive size");
  fx.build = [w, h](double res) {
    const auto k = static_cast<std::size_t>(std::lround(res));
    return cartesian_foliation(w * k, h * k);
  };
  fx.queries = {{"centre", {0.5 * static_cast<double>(w), 0.5 * static_cast<double>(h)}}};
  fx.check_every_cell = true;
  s.fixture = std::move(fx);
  s.checks = {"attainability", "refinement"};
  return s;
}

Scenario build_nonlinear3(const Expression::Constants& over) {
  merge_constants("nonlinear3", {}, over);
  json spec = {{"name", "nonlinear3"},
               {"description", "nonlinear system in R^3 with two noises, 2x2 lower minor"},
               {"dim", 3},
               {"vertical", 2},
               {"drift", json::array({"0.3*sin(x2) - 0.2*x1", "0.2*cos(x1) + 0.1*x3", "0.2 - 0.1*x2*x3"})},
               {"diffusion", json::array({json::array({"0.2*cos(x3)", "0.15*sin(x1)", "0.1*x1"}),
                                         json::array({"0.1*x2", "0.1*sin(x3)", "0.2*cos(x1 + x2)"})})},
               {"x0", {0.5, -0.3, 0.8}},
               {"horizon", 1.0},
               {"dt", 1e-4},
               {"seed", 100},
               {"grid", {{"lo", {0.3, -0.5, 0.6}}, {"hi", {0.7, -0.1, 1.0}}, {"counts", {5, 5, 5}}}},
               {"t_decompose", 0.5},
               {"checks", {"ito-liouville-seeds"}}};
  return scenario_from_json(spec);
}

Scenario build_linear3(const Expression::Constants& over) {
  merge_constants("linear3", {}, over);
  const Matrix a(3, 3, {0.1, 0.5, -0.2, -0.3, 0.2, 0.4, 0.1, -0.1, -0.15});
  json spec = {{"name", "linear3"},
               {"description", "deterministic linear system; full determinant follows Liouville"},
               {"dim", 3},
               {"vertical", 3},
               {"drift", json::array({"0.1*x1 + 0.5*x2 - 0.2*x3", "-0.3*x1 + 0.2*x2 + 0.4*x3", "0.1*x1 - 0.1*x2 - 0.15*x3"})},
               {"x0", {1.0, 0.5, -0.5}},
               {"horizon", 1.0},
               {"dt", 1e-3},
               {"seed", 0},
               {"checks", {"liouville"}}};
  Scenario s = scenario_from_json(spec);
  s.closed_flow = [a](double t, std::span<const double>, std::span<const double> x) {
    Matrix m = a;
    for (double& v : m.entries()) v *= t;
    return expm(m) * x;
  };
  s.closed_subdet = [tr = 0.1 + 0.2 - 0.15](double t, std::span<const double>, std::span<const double>) {
    return std::exp(tr * t);
  };
  return s;
}

Scenario build_gbm(const Expression::Constants& over) {
  const auto c = merge_constants("gbm", {{"mu", 0.5}, {"sigma", 0.6}}, over);
  json spec = {{"name", "gbm"},
               {"description", "geometric Brownian motion in Stratonovich form"},
               {"dim", 1},
               {"constants", constants_json(c)},
               {"drift", json::array({"mu*x1"})},
               {"diffusion", json::array({json::array({"sigma*x1"})})},
               {"x0", json::array({1.0})},
               {"horizon", 1.0},
               {"dt", 1e-3},
               {"seed", 5},
               {"checks", {"strong-order"}}};
  Scenario s = scenario_from_json(spec);
  const double mu = c.at("mu"), sigma = c.at("sigma");
  s.closed_flow = [mu, sigma](double t, std::span<const double> w, std::span<const double> x) {
    return Vector{x[0] * std::exp(mu * t + sigma * w[0])};
  };
  s.closed_subdet = [mu, sigma](double t, std::span<const double> w, std::span<const double>) {
    return std::exp(mu * t + sigma * w[0]);
  };
  return s;
}

const std::vector<std::pair<std::string_view, Builder>>& builders() {
  static const std::vector<std::pair<std::string_view, Builder>> b = {
      {"rotation", build_rotation},         {"noisy-rotation", build_noisy_rotation},
      {"polar-linear", build_polar_linear}, {"shear", build_shear},
      {"moebius", build_moebius},           {"moebius-slit", build_moebius_slit},
      {"web", build_web},                   {"l-domain", build_l_domain},
      {"cartesian", build_cartesian},       {"nonlinear3", build_nonlinear3},
      {"linear3", build_linear3},           {"gbm", build_gbm},
  };
  return b;
}

Scenario checked(Scenario s) {
  const SelfCheckReport r = self_check(s);
  if (!r.passed) {
    throw Error(Errc::check_failed, "scenario '" + s.name + "' fails its self-check (flow error " +
                                        std::to_string(r.flow_error) + ", subdet error " + std::to_string(r.subdet_error) + ")");
  }
  return s;
}

}  // namespace

const std::vector<Scenario>& registry() {
  static const std::vector<Scenario> all = [] {
    std::vector<Scenario> v;
    for (const auto& [name, build] : builders()) v.push_back(checked(build({})));
    return v;
  }();
  return all;
}

std::vector<std::string> scenario_names() {
  std::vector<std::string> names;
  for (const auto& [name, build] : builders()) names.emplace_back(name);
  return names;
}

Scenario make_scenario(std::string_view name, const Expression::Constants& overrides) {
  for (const auto& [n, build] : builders()) {
    if (n != name) continue;
    if (overrides.empty()) {
      for (const Scenario& s : registry()) {
        if (s.name == name) return s;
      }
    }
    return checked(build(overrides));
  }
  throw Error(Errc::unknown_scenario, "unknown scenario '" + std::string(name) + "'");
}

}  // namespace flowsplit
