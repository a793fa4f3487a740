#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "flowsplit/matrix.hpp"

namespace flowsplit {

// Regular rectangular lattice in R^n, flattened with the last axis fastest.
class Lattice {
 public:
  Lattice() = default;
  Lattice(Vector lo, Vector hi, std::vector<std::size_t> counts);

  std::size_t dim() const noexcept { return counts_.size(); }
  std::size_t size() const noexcept { return size_; }
  const Vector& lo() const noexcept { return lo_; }
  const Vector& hi() const noexcept { return hi_; }
  const std::vector<std::size_t>& counts() const noexcept { return counts_; }
  double spacing(std::size_t axis) const noexcept { return step_[axis]; }

  std::vector<std::size_t> multi_index(std::size_t flat) const;
  std::size_t flat_index(std::span<const std::size_t> idx) const;
  Vector point(std::size_t flat) const;

  // Multilinear interpolation of `values` (one out_dim-vector per node,
  // flattened node-major). Points outside the box are extrapolated from the
  // boundary cell. When `jac` is given it receives d(out)/dx.
  void interpolate(std::span<const double> values, std::size_t out_dim, std::span<const double> x,
                   std::span<double> out, Matrix* jac = nullptr) const;

 private:
  Vector lo_;
  Vector hi_;
  Vector step_;
  std::vector<std::size_t> counts_;
  std::size_t size_ = 0;
};

}  // namespace flowsplit
