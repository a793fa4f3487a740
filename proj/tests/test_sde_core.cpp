#include <doctest.h>

#include <cmath>
#include <numeric>

#include "flowsplit/brownian.hpp"
#include "flowsplit/minor_algebra.hpp"
#include "flowsplit/scenario.hpp"
#include "flowsplit/sde.hpp"
#include "oracles.hpp"
#include "systems.hpp"

using namespace flowsplit;
using testing_support::system_of;

TEST_CASE("Brownian increments are reproducible and keyed per step") {
  const BrownianPath a = sample_brownian(42, 2, 1e-3, 500);
  const BrownianPath b = sample_brownian(42, 2, 1e-3, 500);
  const BrownianPath c = sample_brownian(43, 2, 1e-3, 500);
  const BrownianPath longer = sample_brownian(42, 2, 1e-3, 800);
  CHECK(a.increments == b.increments);
  CHECK(a.increments != c.increments);
  // a prefix of a longer path is the shorter path
  CHECK(std::equal(a.increments.begin(), a.increments.end(), longer.increments.begin()));
  CHECK(a.increments.size() == 1000);
  CHECK(CounterEngine::key(1, 2, 3) != CounterEngine::key(1, 3, 2));
}

TEST_CASE("Brownian increments have variance dt and no mean") {
  const double dt = 1e-2;
  const BrownianPath p = sample_brownian(9, 1, dt, 200000);
  const double mean = std::accumulate(p.increments.begin(), p.increments.end(), 0.0) / 200000.0;
  double var = 0.0;
  for (double v : p.increments) var += (v - mean) * (v - mean);
  var /= 200000.0;
  CHECK(std::abs(mean) < 5.0 * std::sqrt(dt / 200000.0));
  CHECK(var == doctest::Approx(dt).epsilon(0.02));
}

TEST_CASE("coarsening sums blocks and keeps the endpoint") {
  const BrownianPath p = sample_brownian(3, 2, 1e-3, 100);
  const BrownianPath q = p.coarsen(10);
  CHECK(q.steps == 10);
  CHECK(q.dt == doctest::Approx(1e-2));
  for (std::size_t r = 0; r < 2; ++r) CHECK(q.total(r) == doctest::Approx(p.total(r)).epsilon(1e-12));
  CHECK(q.value_at(3)[1] == doctest::Approx(p.value_at(30)[1]).epsilon(1e-12));
  CHECK(p.value_at(0)[0] == 0.0);
  CHECK_THROWS_AS(p.coarsen(7), Error);
}

TEST_CASE("wrong Jacobians are caught at construction") {
  std::vector<VectorField> f = {testing_support::field_of({"x2", "x1*x1"})};
  f[0].jacobian = [](std::span<const double>) { return Matrix::identity(2); };
  const std::vector<Vector> samples = {{0.3, 0.4}};
  CHECK_THROWS_AS(VectorFieldSystem(2, f, samples), Error);
}

TEST_CASE("deterministic flow converges to a high-order reference") {
  const auto sys = system_of({{"sin(x2) - 0.3*x1", "cos(x1)*0.5 + 0.1*x2"}});
  const Vector x0 = {0.4, -0.2};
  const oracle::Rhs f = [](const oracle::LVec& x) {
    return oracle::LVec{std::sin(x[1]) - 0.3L * x[0], std::cos(x[0]) * 0.5L + 0.1L * x[1]};
  };
  const oracle::LVec ref = oracle::rk4(f, {0.4L, -0.2L}, 1.0L, 2000);
  double prev = 0.0;
  for (double dt : {1e-2, 5e-3, 2.5e-3}) {
    const Vector x = flow_endpoint(sys, x0, sample_brownian(0, 0, dt, static_cast<std::size_t>(std::llround(1 / dt))));
    const double err = std::hypot(x[0] - static_cast<double>(ref[0]), x[1] - static_cast<double>(ref[1]));
    if (prev > 0.0) CHECK(prev / err > 3.5);  // second order without noise
    prev = err;
  }
  CHECK(prev < 1e-5);
}

TEST_CASE("linear system: Y_T matches the exponential oracle") {
  const auto s = make_scenario("linear3");
  const std::vector<double> a = {0.1, 0.5, -0.2, -0.3, 0.2, 0.4, 0.1, -0.1, -0.15};
  const LinearizedEndpoint e = linearized_endpoint(*s.system, s.x0, sample_brownian(0, 0, 1e-3, 1000));
  const std::vector<double> ref = oracle::exp_tA(a, 3, 1.0);
  // frozen from the oracle
  CHECK(ref[0] == doctest::Approx(1.01336463875605).epsilon(1e-12));
  CHECK(ref[4] == doctest::Approx(1.11535511742564).epsilon(1e-12));
  for (std::size_t i = 0; i < 9; ++i) CHECK(std::abs(e.y.entries()[i] - ref[i]) < 1e-5);
  const Vector x = e.y * std::span<const double>(s.x0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(e.x[i] == doctest::Approx(x[i]).epsilon(1e-12));
}

TEST_CASE("linearization matches finite differences of the flow map on a shared path") {
  const auto s = make_scenario("nonlinear3");
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const BrownianPath path = sample_brownian(seed, 2, 1e-3, 1000);
    const Matrix y = linearized_endpoint(*s.system, s.x0, path).y;
    const Matrix fd = jacobian_fd([&](std::span<const double> x) { return flow_endpoint(*s.system, x, path); }, s.x0, 1e-6);
    CHECK(max_abs_diff(y, fd) < 1e-6);
  }
}

TEST_CASE("linearized trajectory starts at the identity and records every step") {
  const auto s = make_scenario("noisy-rotation");
  const LinearizedTrajectory t = integrate_linearized(*s.system, s.x0, sample_brownian(7, 1, 1e-3, 250));
  CHECK(t.points.size() == 251);
  CHECK(t.linearizations.front() == Matrix::identity(2));
  CHECK(t.times.back() == doctest::Approx(0.25));
  CHECK_FALSE(t.explosion_step);
  // rotations keep the determinant at one
  CHECK(determinant(t.linearizations.back()) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("GBM endpoint matches the Stratonovich closed form") {
  const auto s = make_scenario("gbm");
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const BrownianPath p = sample_brownian(seed, 1, 1e-4, 10000);
    const Vector x = flow_endpoint(*s.system, s.x0, p);
    CHECK(x[0] == doctest::Approx(std::exp(0.5 + 0.6 * p.total(0))).epsilon(1e-3));
  }
}

TEST_CASE("blow-up is reported") {
  const auto sys = system_of({{"x1*x1"}});
  const Vector x0 = {1.0};
  const BrownianPath p = sample_brownian(0, 0, 1e-3, 3000);
  const Trajectory t = integrate_flow(sys, x0, p);
  REQUIRE(t.explosion_step);
  // exact blow-up at t = 1; the scheme lags by a few steps
  CHECK(t.points.size() == *t.explosion_step + 1);
  CHECK(t.times.back() == doctest::Approx(1.0).epsilon(0.01));
  CHECK_THROWS_AS(flow_endpoint(sys, x0, p), Error);
  try {
    linearized_endpoint(sys, x0, p);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::explosion);
  }
}

TEST_CASE("shape errors") {
  const auto sys = system_of({{"x2", "-x1"}});
  const Vector bad = {1.0};
  CHECK_THROWS_AS(integrate_flow(sys, bad, sample_brownian(0, 0, 1e-2, 10)), Error);
  const Vector nan = {std::nan(""), 0.0};
  CHECK_THROWS_AS(integrate_flow(sys, nan, sample_brownian(0, 0, 1e-2, 10)), Error);
  CHECK_THROWS_AS(jacobian_fd([](std::span<const double> x) { return Vector(x.begin(), x.end()); }, nan, 0.0), Error);
}

TEST_CASE("chart transitions fire and carry their Jacobian") {
  const auto s = make_scenario("moebius");
  const LinearizedTrajectory t = integrate_linearized(*s.system, s.x0, sample_brownian(0, 0, 1e-3, 2000));
  CHECK(t.transitions == 2);
  // after one crossing the lower-right entry flips sign
  const std::size_t i = 1000;
  CHECK(t.linearizations[i](2, 2) == doctest::Approx(-1.0));
  CHECK(t.linearizations.back()(2, 2) == doctest::Approx(1.0));
  for (const Vector& p : t.points) {
    CHECK(p[1] >= -1e-12);
    CHECK(p[1] < 1.0 + 1e-12);
  }
}

TEST_CASE("no noise means no increments") {
  const BrownianPath p = sample_brownian(5, 0, 1e-2, 100);
  CHECK(p.increments.empty());
  CHECK(p.horizon() == doctest::Approx(1.0));
}

TEST_CASE("sample mean of W_T over many seeds") {
  const double t = 0.5;
  const std::size_t n = 10000;
  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < n; ++seed) sum += sample_brownian(seed, 1, 0.05, 10).total(0);
  CHECK(std::abs(sum / n) < 3.0 * std::sqrt(t / n));
}

TEST_CASE("zero fields leave the state and the linearization fixed") {
  const auto sys = system_of({{"0", "0"}, {"0", "0"}});
  const Vector x0 = {0.3, -1.2};
  const LinearizedTrajectory t = integrate_linearized(sys, x0, sample_brownian(3, 1, 1e-2, 100));
  for (const Vector& p : t.points) CHECK(p == x0);
  for (const Matrix& y : t.linearizations) CHECK(y == Matrix::identity(2));
}

TEST_CASE("quarter turn of the rotation field") {
  const auto sys = system_of({{"-x2", "x1"}});
  const Vector x0 = {1.0, 0.0};
  const double dt = 1e-4;
  const auto n = static_cast<std::size_t>(std::llround(std::acos(-1.0) / 2 / dt));
  // land exactly on pi/2
  const BrownianPath p = sample_brownian(0, 0, std::acos(-1.0) / 2 / static_cast<double>(n), n);
  const Vector x = flow_endpoint(sys, x0, p);
  CHECK(std::abs(x[0]) < 1e-6);
  CHECK(std::abs(x[1] - 1.0) < 1e-6);
}

TEST_CASE("linear SDE: Y_T does not depend on the start point") {
  const auto sys = system_of({{"0.2*x1 - x2", "x1 + 0.1*x2"}, {"0.3*x2", "-0.4*x1 + 0.2*x2"}});
  const BrownianPath p = sample_brownian(21, 1, 1e-3, 1000);
  const Vector a = {1.0, 0.0}, b = {-2.0, 3.5};
  CHECK(max_abs_diff(linearized_endpoint(sys, a, p).y, linearized_endpoint(sys, b, p).y) <= 1e-8);
}

TEST_CASE("finite-difference Jacobian") {
  const Vector x = {0.7, -0.3};
  const Matrix id = jacobian_fd([](std::span<const double> v) { return Vector(v.begin(), v.end()); }, x, 1e-5);
  CHECK(max_abs_diff(id, Matrix::identity(2)) < 1e-9);
  const Matrix a(2, 2, {1.5, -2.0, 0.25, 3.0});
  const Matrix fa = jacobian_fd([&](std::span<const double> v) { return a * v; }, x, 1e-4);
  CHECK(max_abs_diff(fa, a) < 1e-9);
  const auto sys = system_of({{"-x2", "x1"}});
  const BrownianPath p = sample_brownian(0, 0, 1e-3, 1000);
  const Matrix rot = jacobian_fd([&](std::span<const double> v) { return flow_endpoint(sys, v, p); }, x, 1e-5);
  const Matrix exact(2, 2, {std::cos(1.0), -std::sin(1.0), std::sin(1.0), std::cos(1.0)});
  CHECK(max_abs_diff(rot, exact) < 1e-6);
}

TEST_CASE("variational equation agrees with finite differences") {
  const std::vector<VectorFieldSystem> systems = [] {
    std::vector<VectorFieldSystem> v;
    v.push_back(system_of({{"-x2", "x1"}}));
    v.push_back(system_of({{"0.2*x1 - x2", "x1 + 0.1*x2"}, {"0.3*x2", "-0.4*x1"}}));
    return v;
  }();
  const Vector x0 = {0.5, 0.8};
  for (const auto& sys : systems) {
    const BrownianPath p = sample_brownian(4, sys.noise_count(), 1e-3, 1000);
    const Matrix y = linearized_endpoint(sys, x0, p).y;
    const Matrix fd = jacobian_fd([&](std::span<const double> v) { return flow_endpoint(sys, v, p); }, x0, 1e-4);
    CHECK(max_abs_diff(y, fd) <= 1e-3);
  }
}

TEST_CASE("deterministic flow composes") {
  const auto sys = system_of({{"sin(x2) - 0.3*x1", "cos(x1)*0.5 + 0.1*x2"}});
  const Vector x0 = {0.4, -0.2};
  const double dt = 1e-3;
  const Vector whole = flow_endpoint(sys, x0, sample_brownian(0, 0, dt, 1500));
  const Vector mid = flow_endpoint(sys, x0, sample_brownian(0, 0, dt, 500));
  const Vector twice = flow_endpoint(sys, mid, sample_brownian(0, 0, dt, 1000));
  CHECK(std::hypot(whole[0] - twice[0], whole[1] - twice[1]) <= 1e-5);
}
