#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "flowsplit/matrix.hpp"

namespace flowsplit {

struct VectorField {
  std::function<Vector(std::span<const double>)> value;
  std::function<Matrix(std::span<const double>)> jacobian;
};

// Re-expresses a state that has left the chart in the neighbouring chart.
// Returns the Jacobian of the transition when it fired, nothing otherwise.
using ChartTransition = std::function<std::optional<Matrix>(Vector& point)>;

// Drift X_0 and diffusion fields X_1..X_m on a flat n-dimensional chart,
// driving dx = sum_r X_r(x) o dW^r with W^0 = t.
class VectorFieldSystem {
 public:
  static constexpr double kCheckStep = 1e-6;
  static constexpr double kCheckTolerance = 1e-4;

  // fields[0] is the drift. Jacobians are checked against central
  // differences at every sample point.
  VectorFieldSystem(std::size_t dim, std::vector<VectorField> fields, std::span<const Vector> sample_points);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t noise_count() const noexcept { return fields_.size() - 1; }
  std::size_t field_count() const noexcept { return fields_.size(); }

  Vector eval(std::size_t r, std::span<const double> x) const { return fields_[r].value(x); }
  Matrix jacobian(std::size_t r, std::span<const double> x) const { return fields_[r].jacobian(x); }

  const ChartTransition& transition() const noexcept { return transition_; }
  void set_transition(ChartTransition t) { transition_ = std::move(t); }

 private:
  std::size_t dim_;
  std::vector<VectorField> fields_;
  ChartTransition transition_;
};

}  // namespace flowsplit
