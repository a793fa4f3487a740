#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "flowsplit/checks.hpp"
#include "flowsplit/decomposition.hpp"
#include "flowsplit/minor_algebra.hpp"
#include "flowsplit/scenario.hpp"

using namespace flowsplit;

namespace {

// A nonlinear planar map with a positive vertical Jacobian entry on [-1,1]^2.
Vector bent(std::span<const double> p) { return {p[0] + 0.3 * std::sin(p[1]), p[1] + 0.2 * p[0] * p[0] + 0.1 * p[0]}; }

Matrix bent_jacobian(std::span<const double> p) {
  return Matrix(2, 2, {1.0, 0.3 * std::cos(p[1]), 0.4 * p[0] + 0.1, 1.0});
}

}  // namespace

TEST_CASE("lattice indexing and multilinear interpolation") {
  const Lattice g({-1.0, 0.0, 2.0}, {1.0, 2.0, 3.0}, {3, 5, 4});
  CHECK(g.size() == 60);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.flat_index(g.multi_index(i)) == i);
  CHECK(g.point(0) == Vector{-1.0, 0.0, 2.0});
  CHECK(g.point(59) == Vector{1.0, 2.0, 3.0});
  // last axis runs fastest
  CHECK(g.point(1)[2] == doctest::Approx(2.0 + 1.0 / 3.0));

  auto f = [](std::span<const double> x) { return 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1] * x[2]; };
  Vector values(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) values[i] = f(g.point(i));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    const Vector x = {-1.0 + 2.0 * u(rng), 2.0 * u(rng), 2.0 + u(rng)};
    double out = 0.0;
    Matrix jac;
    g.interpolate(values, 1, x, std::span<double>(&out, 1), &jac);
    CHECK(out == doctest::Approx(f(x)).epsilon(1e-12));
    CHECK(jac(0, 0) == doctest::Approx(2.0 + 0.5 * x[1] * x[2]).epsilon(1e-10));
  }
  CHECK_THROWS_AS(Lattice({0.0}, {1.0}, {0}), Error);
  CHECK_THROWS_AS(Lattice({0.0}, {0.0}, {3}), Error);
  CHECK_THROWS_AS(Lattice({1.0}, {0.0}, {3}), Error);
  CHECK_THROWS_AS(Lattice({0.0, 0.0}, {1.0}, {3}), Error);
}

TEST_CASE("affine fit recovers affine data exactly") {
  std::vector<Vector> pts, vals;
  for (int i = 0; i < 10; ++i) {
    const double x = 0.1 * i, y = std::sin(i);
    pts.push_back({x, y});
    vals.push_back({1.0 + 2.0 * x - y, -0.5 + 3.0 * y});
  }
  const AffineFit f = affine_fit(pts, vals);
  CHECK(f.offset[0] == doctest::Approx(1.0));
  CHECK(f.linear(0, 1) == doctest::Approx(-1.0));
  CHECK(f.linear(1, 1) == doctest::Approx(3.0));
  CHECK(f.max_residual < 1e-12);
}

TEST_CASE("rotation at pi/4 factors into the displayed shear matrices") {
  const Scenario s = make_scenario("rotation");
  const double t = std::numbers::pi / 4;
  const Lattice grid({-1.0, -1.0}, {1.0, 1.0}, {21, 21});
  const FlowDecomposition d = decompose_flow(s, t, grid, 0, 1e-4);
  CHECK(d.result.complete());
  CHECK(d.verification.passed());
  CHECK(d.result.residual <= 1e-6);
  const Matrix psi(2, 2, {1.0, 0.0, std::sin(t), std::cos(t)});
  const Matrix xi(2, 2, {1.0 / std::cos(t), -std::tan(t), 0.0, 1.0});
  CHECK(max_abs_diff(d.result.psi_fit.linear, psi) <= 1e-6);
  CHECK(max_abs_diff(d.result.xi_fit.linear, xi) <= 1e-6);
  CHECK(max_abs_diff(xi * psi, Matrix(2, 2, {std::cos(t), -std::sin(t), std::sin(t), std::cos(t)})) < 1e-12);
}

TEST_CASE("nonlinear local decomposition satisfies (a), (b), (c)") {
  const Lattice grid({-0.5, -0.5}, {0.5, 0.5}, {15, 15});
  const DiffeoSample phi = sample_map(grid, bent);
  std::vector<Matrix> jac;
  for (std::size_t i = 0; i < grid.size(); ++i) jac.push_back(bent_jacobian(grid.point(i)));
  const FoliationSplit split(2, 1);
  const DecompositionResult r = decompose_local(phi, split, jac);
  CHECK(r.complete());
  const VerificationReport v = verify_decomposition(phi, r, split, 1e-6);
  CHECK(v.passed());
  CHECK(v.checked == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    // psi keeps the horizontal coordinate and copies the vertical one of phi
    CHECK(r.psi.values[i][0] == grid.point(i)[0]);
    CHECK(r.psi.values[i][1] == phi.values[i][1]);
    // xi leaves the vertical coordinate alone
    CHECK(r.xi.values[i][1] == doctest::Approx(r.xi_points[i][1]).epsilon(1e-12));
  }
}

TEST_CASE("psi inversion round-trips and xi can be evaluated off the lattice") {
  const Lattice grid({-0.5, -0.5}, {0.5, 0.5}, {21, 21});
  const DiffeoSample phi = sample_map(grid, bent);
  const FoliationSplit split(2, 1);
  const DecompositionResult r = decompose_local(phi, split);
  for (std::size_t i : {0u, 17u, 220u, 440u}) {
    const Vector p = invert_psi(r.psi, split, r.psi.values[i]);
    CHECK(p[0] == doctest::Approx(grid.point(i)[0]).epsilon(1e-10));
    CHECK(p[1] == doctest::Approx(grid.point(i)[1]).epsilon(1e-10));
    const Vector x = r.evaluate_xi(r.xi_points[i]);
    CHECK(x[0] == doctest::Approx(phi.values[i][0]).epsilon(1e-8));
    CHECK(x[1] == doctest::Approx(phi.values[i][1]).epsilon(1e-8));
  }
}

TEST_CASE("nodes with a vanishing vertical minor are refused") {
  const Lattice grid({-1.0, -1.0}, {1.0, 1.0}, {5, 5});
  const DiffeoSample phi = sample_map(grid, [](std::span<const double> p) { return Vector{p[0], p[1] * p[1] * p[1]}; });
  std::vector<Matrix> jac;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vector p = grid.point(i);
    jac.push_back(Matrix(2, 2, {1.0, 0.0, 0.0, 3.0 * p[1] * p[1]}));
  }
  const DecompositionResult r = decompose_local(phi, FoliationSplit(2, 1), jac);
  CHECK_FALSE(r.complete());
  CHECK(r.refused.size() == 5);  // the row y = 0
  for (std::size_t i : r.refused) {
    CHECK(grid.point(i)[1] == doctest::Approx(0.0));
    CHECK(r.is_refused(i));
  }
}

TEST_CASE("orientation verdict") {
  const FoliationSplit split(2, 1);
  std::vector<JacobianSample> s;
  for (int i = 0; i <= 10; ++i) {
    const double t = 0.1 * i;
    s.push_back({t, {0.0, 0.0}, Matrix(2, 2, {1.0, 0.0, 0.0, 1.0 - t * 0.5})});
  }
  OrientationReport r = orientation_check(s, split);
  CHECK(r.preserved);
  CHECK(r.min_minor == doctest::Approx(0.5));
  s[7].jacobian(1, 1) = -0.2;
  r = orientation_check(s, split);
  CHECK_FALSE(r.preserved);
  CHECK(r.argmin == 7);
  CHECK(r.argmin_time == doctest::Approx(0.7));
}

TEST_CASE("shape errors") {
  CHECK_THROWS_AS(FoliationSplit(2, 3), Error);
  CHECK_THROWS_AS(FoliationSplit(2, 0), Error);
  const Lattice grid({0.0, 0.0}, {1.0, 1.0}, {3, 3});
  const DiffeoSample phi = sample_map(grid, bent);
  CHECK_THROWS_AS(decompose_local(phi, FoliationSplit(3, 1)), Error);
}

TEST_CASE("quotient chart loses orientation at the identified face") {
  const Scenario s = make_scenario("moebius");
  const Lattice grid = *s.grid;
  bool seen_flip = false;
  for (double t : s.decompose_times) {
    const FlowDecomposition d = decompose_flow(s, t, grid, 0, s.dt);
    const bool crossed = d.crossings > 0;
    CHECK(d.orientation.preserved == !crossed);
    if (crossed && !seen_flip) {
      seen_flip = true;
      REQUIRE(d.first_crossing);
      // x0 starts at y = 0.2 with unit speed, so it reaches the face y = 1 at t = 0.8
      CHECK(*d.first_crossing == doctest::Approx(0.8).epsilon(1e-2));
      CHECK(t >= 0.8 - 1e-12);
    }
  }
  CHECK(seen_flip);
}

TEST_CASE("slit chart decomposes at every sampled time") {
  const Scenario s = make_scenario("moebius-slit");
  for (double t : s.decompose_times) {
    const FlowDecomposition d = decompose_flow(s, t, *s.grid, 0, s.dt);
    CHECK(d.result.complete());
    CHECK(d.verification.passed());
    CHECK(d.orientation.preserved);
  }
}

TEST_CASE("noisy rotation decomposes on a shared path") {
  const Scenario s = make_scenario("noisy-rotation");
  const FlowDecomposition d = decompose_flow(s, 0.5, *s.grid, s.seed, s.dt);
  CHECK(d.result.complete());
  CHECK(d.verification.passed());
  CHECK(d.result.residual <= 1e-6);
}

TEST_CASE("identity factors trivially") {
  const Lattice grid({-1.0, -1.0}, {1.0, 1.0}, {7, 7});
  const DiffeoSample phi = sample_map(grid, [](std::span<const double> p) { return Vector(p.begin(), p.end()); });
  const FoliationSplit split(2, 1);
  const DecompositionResult r = decompose_local(phi, split);
  CHECK(r.complete());
  CHECK(r.residual <= 1e-15);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(r.psi.values[i] == grid.point(i));
    CHECK(r.xi.values[i] == grid.point(i));
  }
  CHECK(verify_decomposition(phi, r, split, 1e-12).passed());
}

TEST_CASE("linear maps that keep vertical leaves") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.5, 1.5), v(-1.0, 1.0);
  const Lattice grid({-1.0, -1.0, -1.0}, {1.0, 1.0, 1.0}, {5, 5, 5});
  const FoliationSplit split(3, 2);
  for (int rep = 0; rep < 5; ++rep) {
    // horizontal output depends on the horizontal input only; lower block near diag
    Matrix a(3, 3, {u(rng), 0.0, 0.0, v(rng), u(rng) + 1.0, 0.2 * v(rng), v(rng), 0.2 * v(rng), u(rng) + 1.0});
    const DecompositionResult r = decompose_local(sample_map(grid, [&](std::span<const double> p) { return a * p; }), split);
    CHECK(r.complete());
    CHECK(r.residual <= 1e-8);
  }
}

TEST_CASE("inverting psi") {
  const Lattice grid({-1.0, -1.0}, {1.0, 1.0}, {9, 9});
  const FoliationSplit split(2, 1);
  const DiffeoSample id = sample_map(grid, [](std::span<const double> p) { return Vector(p.begin(), p.end()); });
  const Vector q = {0.3, -0.45};
  const Vector p = invert_psi(id, split, q);
  CHECK(p[0] == q[0]);
  CHECK(p[1] == doctest::Approx(q[1]).epsilon(1e-12));
  const DiffeoSample dbl = sample_map(grid, [](std::span<const double> x) { return Vector{x[0], 2.0 * x[1]}; });
  const Vector h = invert_psi(dbl, split, std::vector<double>{0.3, 1.2});
  CHECK(h[1] == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("psi of the rotation round-trips") {
  const Scenario s = make_scenario("rotation");
  const Lattice grid({-1.0, -1.0}, {1.0, 1.0}, {11, 11});
  const FlowDecomposition d = decompose_flow(s, 0.6, grid, 0, 1e-4);
  const FoliationSplit split(2, 1);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector p = {u(rng), u(rng)};
    const Vector q = d.result.psi.evaluate(p);
    const Vector back = invert_psi(d.result.psi, split, q);
    CHECK(std::hypot(back[0] - p[0], back[1] - p[1]) <= 1e-10);
  }
}

TEST_CASE("a corrupted xi fails the reconstruction check") {
  const Lattice grid({-0.5, -0.5}, {0.5, 0.5}, {9, 9});
  const DiffeoSample phi = sample_map(grid, bent);
  const FoliationSplit split(2, 1);
  DecompositionResult r = decompose_local(phi, split);
  REQUIRE(verify_decomposition(phi, r, split, 1e-6).passed());
  r.xi.values[40][0] += 1e-3;
  const VerificationReport v = verify_decomposition(phi, r, split, 1e-6);
  CHECK_FALSE(v.passed('c'));
  CHECK(v.passed('a'));
}

TEST_CASE("rotation orientation over the horizon") {
  const Scenario s = make_scenario("rotation");
  const Lattice grid({-1.0, -1.0}, {1.0, 1.0}, {5, 5});
  CHECK(decompose_flow(s, 1.5, grid, 0, 1e-3).orientation.preserved);
  CHECK_FALSE(decompose_flow(s, 2.0, grid, 0, 1e-3).orientation.preserved);
}

TEST_CASE("factors agree where two lattices overlap") {
  const FoliationSplit split(2, 1);
  const Lattice coarse({-0.5, -0.5}, {0.5, 0.5}, {11, 11});
  const Lattice shifted({-0.3, -0.3}, {0.7, 0.7}, {11, 11});
  const DecompositionResult a = decompose_local(sample_map(coarse, bent), split);
  const DecompositionResult b = decompose_local(sample_map(shifted, bent), split);
  // both lattices have spacing 0.1; compare psi and xi at shared nodes
  std::size_t shared = 0;
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    for (std::size_t j = 0; j < shifted.size(); ++j) {
      const Vector p = coarse.point(i), q = shifted.point(j);
      if (std::hypot(p[0] - q[0], p[1] - q[1]) > 1e-12) continue;
      ++shared;
      CHECK(std::abs(a.psi.values[i][1] - b.psi.values[j][1]) <= 1e-12);
      CHECK(std::abs(a.xi.values[i][0] - b.xi.values[j][0]) <= 1e-9);
    }
  }
  CHECK(shared == 81);
}

TEST_CASE("factors vary continuously in time") {
  const Scenario s = make_scenario("rotation");
  const Lattice grid({-1.0, -1.0}, {1.0, 1.0}, {5, 5});
  const FlowDecomposition a = decompose_flow(s, 0.5, grid, 0, 1e-4);
  const FlowDecomposition b = decompose_flow(s, 0.501, grid, 0, 1e-4);
  CHECK(max_abs_diff(a.result.psi_fit.linear, b.result.psi_fit.linear) < 1e-2);
  CHECK(max_abs_diff(a.result.xi_fit.linear, b.result.xi_fit.linear) < 1e-2);
}

TEST_CASE("reconstruction holds on every bundled flow") {
  for (const Scenario& s : registry()) {
    const auto names = check_names(s);
    if (std::find(names.begin(), names.end(), "reconstruction") == names.end()) continue;
    CAPTURE(s.name);
    const CheckResult r = run_check(s, "reconstruction");
    CHECK_MESSAGE(r.passed, r.detail);
    CHECK(r.value <= 10.0 * kNewtonTolerance);
  }
}

TEST_CASE("reconstruction without a lattice is an error, not a crash") {
  const CheckResult r = run_check(make_scenario("linear3"), "reconstruction");
  CHECK_FALSE(r.passed);
  CHECK(r.detail.find("lattice") != std::string::npos);
}
