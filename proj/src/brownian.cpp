#include "flowsplit/brownian.hpp"

#include <cmath>
#include <random>
#include <string>

#include "flowsplit/error.hpp"

namespace flowsplit {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

CounterEngine::result_type CounterEngine::operator()() noexcept {
  state_ += kGolden;
  return splitmix64(state_);
}

std::uint64_t CounterEngine::key(std::uint64_t seed, std::uint64_t step, std::uint64_t component) noexcept {
  std::uint64_t h = splitmix64(seed + kGolden);
  h = splitmix64(h ^ (step + 0x632BE59BD9B4E019ULL));
  return splitmix64(h ^ (component + 0x85157AF5ULL));
}

double BrownianPath::total(std::size_t component) const {
  if (component >= m) throw Error(Errc::out_of_range, "Brownian component out of range");
  double w = 0.0;
  for (std::size_t s = 0; s < steps; ++s) w += increments[s * m + component];
  return w;
}

std::vector<double> BrownianPath::value_at(std::size_t step) const {
  if (step > steps) throw Error(Errc::out_of_range, "Brownian grid index out of range");
  std::vector<double> w(m, 0.0);
  for (std::size_t s = 0; s < step; ++s)
    for (std::size_t r = 0; r < m; ++r) w[r] += increments[s * m + r];
  return w;
}

BrownianPath BrownianPath::coarsen(std::size_t factor) const {
  if (factor == 0 || steps % factor != 0) {
    throw Error(Errc::invalid_argument, "coarsen factor " + std::to_string(factor) + " does not divide " +
                                            std::to_string(steps) + " steps");
  }
  BrownianPath out{seed, m, dt * static_cast<double>(factor), steps / factor, {}};
  out.increments.assign(out.steps * m, 0.0);
  for (std::size_t s = 0; s < steps; ++s)
    for (std::size_t r = 0; r < m; ++r) out.increments[(s / factor) * m + r] += increments[s * m + r];
  return out;
}

BrownianPath sample_brownian(std::uint64_t seed, std::size_t m, double dt, std::size_t steps) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(Errc::invalid_argument, "Brownian step dt must be positive");
  if (steps < 1) throw Error(Errc::invalid_argument, "Brownian path needs at least one step");
  BrownianPath path{seed, m, dt, steps, std::vector<double>(steps * m)};
  const double scale = std::sqrt(dt);
  for (std::size_t s = 0; s < steps; ++s) {
    for (std::size_t r = 0; r < m; ++r) {
      CounterEngine engine(CounterEngine::key(seed, s, r));
      std::normal_distribution<double> normal(0.0, 1.0);
      path.increments[s * m + r] = scale * normal(engine);
    }
  }
  return path;
}

}  // namespace flowsplit
