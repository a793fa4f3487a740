#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace flowsplit {

// Stateless-per-key 64-bit engine: each (seed, step, component) triple gets
// its own stream, so draws do not depend on consumption order.
class CounterEngine {
 public:
  using result_type = std::uint64_t;

  explicit CounterEngine(std::uint64_t key) noexcept : state_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  static std::uint64_t key(std::uint64_t seed, std::uint64_t step, std::uint64_t component) noexcept;

 private:
  std::uint64_t state_;
};

// Increments of an m-dimensional Brownian motion on the grid {0, dt, ..., steps*dt}.
struct BrownianPath {
  std::uint64_t seed = 0;
  std::size_t m = 0;
  double dt = 0.0;
  std::size_t steps = 0;
  std::vector<double> increments;  // steps x m, row-major

  std::span<const double> increment(std::size_t step) const noexcept { return {increments.data() + step * m, m}; }
  double horizon() const noexcept { return dt * static_cast<double>(steps); }
  // W at the final time for one component.
  double total(std::size_t component) const;
  // W at grid index `step` (0 <= step <= steps).
  std::vector<double> value_at(std::size_t step) const;
  // Sum consecutive blocks of `factor` increments; steps must divide evenly.
  BrownianPath coarsen(std::size_t factor) const;
};

BrownianPath sample_brownian(std::uint64_t seed, std::size_t m, double dt, std::size_t steps);

}  // namespace flowsplit
