#include "flowsplit/lattice.hpp"

#include <algorithm>
#include <cmath>

namespace flowsplit {

Lattice::Lattice(Vector lo, Vector hi, std::vector<std::size_t> counts)
    : lo_(std::move(lo)), hi_(std::move(hi)), counts_(std::move(counts)) {
  if (lo_.size() != counts_.size() || hi_.size() != counts_.size() || counts_.empty()) {
    throw Error(Errc::dimension_mismatch, "lattice bounds and counts must share one dimension");
  }
  step_.resize(counts_.size());
  size_ = 1;
  for (std::size_t d = 0; d < counts_.size(); ++d) {
    if (counts_[d] == 0) throw Error(Errc::invalid_argument, "lattice needs at least one node per axis");
    if (!(hi_[d] >= lo_[d])) throw Error(Errc::invalid_argument, "lattice upper bound below lower bound");
    if (counts_[d] > 1 && !(hi_[d] > lo_[d])) throw Error(Errc::invalid_argument, "degenerate lattice axis");
    step_[d] = counts_[d] > 1 ? (hi_[d] - lo_[d]) / static_cast<double>(counts_[d] - 1) : 0.0;
    size_ *= counts_[d];
  }
}

std::vector<std::size_t> Lattice::multi_index(std::size_t flat) const {
  std::vector<std::size_t> idx(counts_.size());
  for (std::size_t d = counts_.size(); d-- > 0;) {
    idx[d] = flat % counts_[d];
    flat /= counts_[d];
  }
  return idx;
}

std::size_t Lattice::flat_index(std::span<const std::size_t> idx) const {
  std::size_t flat = 0;
  for (std::size_t d = 0; d < counts_.size(); ++d) flat = flat * counts_[d] + idx[d];
  return flat;
}

Vector Lattice::point(std::size_t flat) const {
  const auto idx = multi_index(flat);
  Vector p(counts_.size());
  for (std::size_t d = 0; d < counts_.size(); ++d) {
    // pin the last node to hi exactly
    p[d] = idx[d] + 1 == counts_[d] && counts_[d] > 1 ? hi_[d] : lo_[d] + step_[d] * static_cast<double>(idx[d]);
  }
  return p;
}

void Lattice::interpolate(std::span<const double> values, std::size_t out_dim, std::span<const double> x,
                          std::span<double> out, Matrix* jac) const {
  const std::size_t n = counts_.size();
  if (x.size() != n || out.size() != out_dim || values.size() != size_ * out_dim) {
    throw Error(Errc::dimension_mismatch, "lattice interpolation: size mismatch");
  }
  std::vector<std::size_t> base(n);
  Vector frac(n, 0.0);
  for (std::size_t d = 0; d < n; ++d) {
    if (counts_[d] == 1) continue;
    const double u = (x[d] - lo_[d]) / step_[d];
    const double cell = std::clamp(std::floor(u), 0.0, static_cast<double>(counts_[d] - 2));
    base[d] = static_cast<std::size_t>(cell);
    frac[d] = u - cell;
  }
  std::fill(out.begin(), out.end(), 0.0);
  if (jac) *jac = Matrix(out_dim, n);
  std::vector<std::size_t> corner(n);
  const std::size_t corners = std::size_t{1} << n;
  for (std::size_t c = 0; c < corners; ++c) {
    double w = 1.0;
    bool valid = true;
    for (std::size_t d = 0; d < n; ++d) {
      const bool upper = (c >> d) & 1U;
      if (counts_[d] == 1) {
        if (upper) valid = false;
        corner[d] = 0;
        continue;
      }
      corner[d] = base[d] + (upper ? 1 : 0);
      w *= upper ? frac[d] : 1.0 - frac[d];
    }
    if (!valid) continue;
    const double* v = values.data() + flat_index(corner) * out_dim;
    for (std::size_t i = 0; i < out_dim; ++i) out[i] += w * v[i];
    if (!jac) continue;
    for (std::size_t d = 0; d < n; ++d) {
      if (counts_[d] == 1) continue;
      double dw = ((c >> d) & 1U) ? 1.0 / step_[d] : -1.0 / step_[d];
      for (std::size_t e = 0; e < n; ++e) {
        if (e == d || counts_[e] == 1) continue;
        dw *= ((c >> e) & 1U) ? frac[e] : 1.0 - frac[e];
      }
      for (std::size_t i = 0; i < out_dim; ++i) (*jac)(i, d) += dw * v[i];
    }
  }
}

}  // namespace flowsplit
