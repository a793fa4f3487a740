#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "flowsplit/brownian.hpp"
#include "flowsplit/matrix.hpp"
#include "flowsplit/vector_field.hpp"

namespace flowsplit {

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> points;
  // Index of the step whose result was non-finite; the trajectory stops before it.
  std::optional<std::size_t> explosion_step;
};

// Paired base points x_t and linearizations Y_t = D(phi_t)(x_0).
struct LinearizedTrajectory {
  std::vector<double> times;
  std::vector<Vector> points;
  std::vector<Matrix> linearizations;
  std::optional<std::size_t> explosion_step;
  // Number of chart transitions applied along the way.
  std::size_t transitions = 0;
};

// Stratonovich Heun: full-step predictor, trapezoidal corrector.
Trajectory integrate_flow(const VectorFieldSystem& sys, std::span<const double> x0, const BrownianPath& path);

// Integrates (x_t, Y_t) jointly with the same increments, Y_0 = I.
LinearizedTrajectory integrate_linearized(const VectorFieldSystem& sys, std::span<const double> x0,
                                          const BrownianPath& path);

struct LinearizedEndpoint {
  Vector x;
  Matrix y;
  std::size_t transitions = 0;
};

// Final (x_T, Y_T) without keeping the path; throws Errc::explosion.
LinearizedEndpoint linearized_endpoint(const VectorFieldSystem& sys, std::span<const double> x0,
                                       const BrownianPath& path);

// The map x0 -> x_T for a fixed path.
Vector flow_endpoint(const VectorFieldSystem& sys, std::span<const double> x0, const BrownianPath& path);

using PointMap = std::function<Vector(std::span<const double>)>;

// Central-difference Jacobian.
Matrix jacobian_fd(const PointMap& map, std::span<const double> x, double h);

}  // namespace flowsplit
