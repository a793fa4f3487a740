#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flowsplit/brownian.hpp"
#include "flowsplit/error.hpp"
#include "flowsplit/matrix.hpp"

namespace flowsplit::detail {

inline bool all_finite(std::span<const double> z) {
  for (double v : z) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// Runs the Stratonovich Heun scheme on a packed state z. `rhs(z, k)` fills
// k[r] with the r-th field's contribution at z (r = 0 is the drift).
// `after_step(z)` may re-chart the state; `record(step, z)` sees every
// accepted state including the initial one. Returns the exploding step, if any.
template <class Rhs, class AfterStep, class Record>
std::optional<std::size_t> heun_run(Rhs&& rhs, Vector z, const BrownianPath& path, std::size_t field_count,
                                    AfterStep&& after_step, Record&& record) {
  if (path.m + 1 != field_count) {
    throw Error(Errc::dimension_mismatch, "Brownian path dimension " + std::to_string(path.m) +
                                              " does not match noise count " + std::to_string(field_count - 1));
  }
  const std::size_t dim = z.size();
  std::vector<Vector> k0(field_count, Vector(dim)), k1(field_count, Vector(dim));
  Vector pred(dim);
  record(std::size_t{0}, std::as_const(z));
  for (std::size_t s = 0; s < path.steps; ++s) {
    const auto dw = path.increment(s);
    auto weight = [&](std::size_t r) { return r == 0 ? path.dt : dw[r - 1]; };
    rhs(std::span<const double>(z), k0);
    pred = z;
    for (std::size_t r = 0; r < field_count; ++r) {
      const double w = weight(r);
      for (std::size_t i = 0; i < dim; ++i) pred[i] += k0[r][i] * w;
    }
    rhs(std::span<const double>(pred), k1);
    for (std::size_t r = 0; r < field_count; ++r) {
      const double w = 0.5 * weight(r);
      for (std::size_t i = 0; i < dim; ++i) z[i] += (k0[r][i] + k1[r][i]) * w;
    }
    if (!all_finite(z)) return s;
    after_step(z);
    record(s + 1, std::as_const(z));
  }
  return std::nullopt;
}

}  // namespace flowsplit::detail
