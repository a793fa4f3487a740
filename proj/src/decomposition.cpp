#include "flowsplit/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flowsplit/minor_algebra.hpp"

namespace flowsplit {

FoliationSplit::FoliationSplit(std::size_t dim, std::size_t vertical) : n(dim), k(vertical) {
  if (k < 1 || k > n) throw Error(Errc::invalid_argument, "foliation split needs 1 <= k <= n");
}

Vector DiffeoSample::flat() const {
  const std::size_t m = values.empty() ? 0 : values.front().size();
  Vector f;
  f.reserve(values.size() * m);
  for (const Vector& v : values) f.insert(f.end(), v.begin(), v.end());
  return f;
}

Vector DiffeoSample::evaluate(std::span<const double> x, Matrix* jac) const {
  if (values.size() != grid.size() || values.empty()) throw Error(Errc::dimension_mismatch, "sample does not cover its lattice");
  const std::size_t m = values.front().size();
  Vector out(m);
  grid.interpolate(flat(), m, x, out, jac);
  return out;
}

Matrix DiffeoSample::node_jacobian(std::size_t node) const {
  const std::size_t n = grid.dim();
  const std::size_t m = values.front().size();
  auto idx = grid.multi_index(node);
  Matrix j(m, n);
  for (std::size_t d = 0; d < n; ++d) {
    const std::size_t c = grid.counts()[d];
    if (c < 2) continue;
    auto lo = idx;
    auto hi = idx;
    if (idx[d] > 0) --lo[d];
    if (idx[d] + 1 < c) ++hi[d];
    const double span = grid.spacing(d) * static_cast<double>(hi[d] - lo[d]);
    const Vector& a = values[grid.flat_index(lo)];
    const Vector& b = values[grid.flat_index(hi)];
    for (std::size_t i = 0; i < m; ++i) j(i, d) = (b[i] - a[i]) / span;
  }
  return j;
}

DiffeoSample sample_map(const Lattice& grid, const PointMap& map, double t) {
  DiffeoSample s{grid, {}, t};
  s.values.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Vector v = map(grid.point(i));
    for (double e : v) {
      if (!std::isfinite(e)) throw Error(Errc::invalid_argument, "sampled map value is not finite");
    }
    s.values.push_back(std::move(v));
  }
  return s;
}

AffineFit affine_fit(std::span<const Vector> points, std::span<const Vector> values) {
  if (points.size() != values.size() || points.empty()) throw Error(Errc::dimension_mismatch, "affine_fit: sizes differ");
  const std::size_t n = points.front().size();
  const std::size_t m = values.front().size();
  if (points.size() < n + 1) throw Error(Errc::invalid_argument, "affine_fit: too few points");
  // Center for conditioning, then solve the normal equations.
  Vector pc(n, 0.0), vc(m, 0.0);
  for (std::size_t s = 0; s < points.size(); ++s) {
    for (std::size_t d = 0; d < n; ++d) pc[d] += points[s][d];
    for (std::size_t i = 0; i < m; ++i) vc[i] += values[s][i];
  }
  for (double& e : pc) e /= static_cast<double>(points.size());
  for (double& e : vc) e /= static_cast<double>(points.size());
  Matrix gram(n, n);
  Matrix cross(n, m);
  for (std::size_t s = 0; s < points.size(); ++s) {
    for (std::size_t a = 0; a < n; ++a) {
      const double pa = points[s][a] - pc[a];
      for (std::size_t b = 0; b < n; ++b) gram(a, b) += pa * (points[s][b] - pc[b]);
      for (std::size_t i = 0; i < m; ++i) cross(a, i) += pa * (values[s][i] - vc[i]);
    }
  }
  AffineFit fit;
  fit.linear = Matrix(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    Vector rhs(n);
    for (std::size_t a = 0; a < n; ++a) rhs[a] = cross(a, i);
    const Vector coef = solve(gram, rhs);
    for (std::size_t a = 0; a < n; ++a) fit.linear(i, a) = coef[a];
  }
  fit.offset = vc;
  const Vector shift = fit.linear * pc;
  for (std::size_t i = 0; i < m; ++i) fit.offset[i] -= shift[i];
  for (std::size_t s = 0; s < points.size(); ++s) {
    const Vector pred = fit.linear * points[s];
    for (std::size_t i = 0; i < m; ++i) {
      fit.max_residual = std::max(fit.max_residual, std::abs(pred[i] + fit.offset[i] - values[s][i]));
    }
  }
  return fit;
}

Vector invert_psi(const DiffeoSample& psi, const FoliationSplit& split, std::span<const double> q, double tol) {
  const std::size_t n = split.n;
  const std::size_t h = split.horizontal();
  if (q.size() != n || psi.grid.dim() != n) throw Error(Errc::dimension_mismatch, "invert_psi: dimension mismatch");
  const Vector flat = psi.flat();
  Vector p(q.begin(), q.end());
  Vector image(n);
  Matrix jac;
  for (std::size_t iter = 0; iter <= kNewtonIterations; ++iter) {
    psi.grid.interpolate(flat, n, p, image, &jac);
    Vector residual(split.k);
    double err = 0.0;
    for (std::size_t i = 0; i < split.k; ++i) {
      residual[i] = image[h + i] - q[h + i];
      err = std::max(err, std::abs(residual[i]));
    }
    if (!std::isfinite(err)) break;
    if (err <= tol) return p;
    if (iter == kNewtonIterations) break;
    Matrix block(split.k, split.k);
    for (std::size_t i = 0; i < split.k; ++i)
      for (std::size_t j = 0; j < split.k; ++j) block(i, j) = jac(h + i, h + j);
    Vector delta;
    try {
      delta = solve(block, residual);
    } catch (const Error&) {
      throw NewtonFailure("invert_psi: singular vertical Jacobian", p);
    }
    for (std::size_t i = 0; i < split.k; ++i) p[h + i] -= delta[i];
  }
  throw NewtonFailure("invert_psi: Newton did not converge in 50 iterations", p);
}

bool DecompositionResult::is_refused(std::size_t node) const {
  return std::binary_search(refused.begin(), refused.end(), node);
}

Vector DecompositionResult::evaluate_xi(std::span<const double> q) const {
  const FoliationSplit split(psi.grid.dim(), k);
  const Vector p = invert_psi(psi, split, q, newton_tolerance);
  return xi.evaluate(p);
}

DecompositionResult decompose_local(const DiffeoSample& phi, const FoliationSplit& split,
                                    std::span<const Matrix> jacobians, double newton_tol) {
  const std::size_t n = split.n;
  const std::size_t h = split.horizontal();
  if (phi.grid.dim() != n) throw Error(Errc::dimension_mismatch, "sample lattice dimension differs from the split");
  if (phi.values.size() != phi.grid.size()) throw Error(Errc::dimension_mismatch, "sample does not cover its lattice");
  if (!jacobians.empty() && jacobians.size() != phi.grid.size()) {
    throw Error(Errc::dimension_mismatch, "one Jacobian per lattice node expected");
  }
  const IndexSelection lower = IndexSelection::trailing(n, split.k);

  DecompositionResult r;
  r.k = split.k;
  r.newton_tolerance = newton_tol;
  r.psi = DiffeoSample{phi.grid, {}, phi.t};
  r.xi = DiffeoSample{phi.grid, {}, phi.t};
  r.psi.values.reserve(phi.grid.size());
  r.minors.reserve(phi.grid.size());
  for (std::size_t i = 0; i < phi.grid.size(); ++i) {
    const Vector& v = phi.values[i];
    if (v.size() != n) throw Error(Errc::dimension_mismatch, "sample values have wrong dimension");
    Vector p = phi.grid.point(i);
    std::copy(v.begin() + static_cast<std::ptrdiff_t>(h), v.end(), p.begin() + static_cast<std::ptrdiff_t>(h));
    r.psi.values.push_back(std::move(p));
    const Matrix j = jacobians.empty() ? phi.node_jacobian(i) : jacobians[i];
    const double minor = minor_det(j, lower, lower);
    r.minors.push_back(minor);
    if (!(std::abs(minor) >= kMinorRefusal)) r.refused.push_back(i);
  }
  r.xi_points = r.psi.values;
  r.xi.values = phi.values;

  std::vector<Vector> fit_p, fit_xi_q, fit_xi_v;
  for (std::size_t i = 0; i < phi.grid.size(); ++i) {
    if (r.is_refused(i)) continue;
    fit_xi_q.push_back(r.xi_points[i]);
    fit_xi_v.push_back(phi.values[i]);
  }
  std::vector<Vector> nodes;
  nodes.reserve(phi.grid.size());
  for (std::size_t i = 0; i < phi.grid.size(); ++i) nodes.push_back(phi.grid.point(i));
  if (nodes.size() > n) r.psi_fit = affine_fit(nodes, r.psi.values);
  if (fit_xi_q.size() > n) {
    try {
      r.xi_fit = affine_fit(fit_xi_q, fit_xi_v);
    } catch (const Error&) {
      // image points degenerate (e.g. collapsed vertical block); leave the fit empty
    }
  }

  if (r.complete()) {
    for (std::size_t i = 0; i < phi.grid.size(); ++i) {
      const Vector back = r.evaluate_xi(r.xi_points[i]);
      for (std::size_t d = 0; d < n; ++d) r.residual = std::max(r.residual, std::abs(back[d] - phi.values[i][d]));
    }
  } else {
    r.residual = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

bool VerificationReport::passed(char check) const noexcept {
  return std::none_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.check == check; });
}

VerificationReport verify_decomposition(const DiffeoSample& phi, const DecompositionResult& result,
                                        const FoliationSplit& split, double tol) {
  const std::size_t n = split.n;
  const std::size_t h = split.horizontal();
  if (result.psi.values.size() != phi.values.size() || result.xi.values.size() != phi.values.size()) {
    throw Error(Errc::dimension_mismatch, "decomposition does not match the sample");
  }
  VerificationReport rep;
  auto note = [&](char check, std::size_t node, double mag, double& worst, double limit) {
    worst = std::max(worst, mag);
    if (mag > limit || !std::isfinite(mag)) rep.violations.push_back({check, node, mag});
  };
  for (std::size_t i = 0; i < phi.values.size(); ++i) {
    if (result.is_refused(i)) continue;
    ++rep.checked;
    const Vector p = phi.grid.point(i);
    const Vector& psi = result.psi.values[i];
    const Vector& f = phi.values[i];
    double a = 0.0, b = 0.0;
    for (std::size_t d = 0; d < h; ++d) a = std::max(a, std::abs(psi[d] - p[d]));
    for (std::size_t d = h; d < n; ++d) b = std::max(b, std::abs(psi[d] - f[d]));
    note('a', i, a, rep.max_horizontal_shift, 0.0);
    note('b', i, b, rep.max_vertical_mismatch, 0.0);

    const Vector& q = result.xi_points[i];
    const Vector& stored = result.xi.values[i];
    double cv = 0.0;
    for (std::size_t d = h; d < n; ++d) cv = std::max(cv, std::abs(stored[d] - q[d]));
    double cr = 0.0;
    try {
      const Vector back = result.evaluate_xi(psi);
      for (std::size_t d = 0; d < n; ++d) cr = std::max(cr, std::abs(back[d] - f[d]));
    } catch (const Error&) {
      cr = std::numeric_limits<double>::infinity();
    }
    note('c', i, cv, rep.max_xi_vertical_shift, tol);
    note('c', i, cr, rep.max_reconstruction, tol);
  }
  return rep;
}

OrientationReport orientation_check(std::span<const JacobianSample> samples, const FoliationSplit& split) {
  const IndexSelection lower = IndexSelection::trailing(split.n, split.k);
  OrientationReport rep;
  rep.samples = samples.size();
  rep.min_minor = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const Matrix& j = samples[s].jacobian;
    if (j.rows() != split.n || j.cols() != split.n) throw Error(Errc::dimension_mismatch, "Jacobian sample has wrong shape");
    const double m = minor_det(j, lower, lower);
    if (m < rep.min_minor) {
      rep.min_minor = m;
      rep.argmin = s;
      rep.argmin_time = samples[s].t;
    }
  }
  rep.preserved = !samples.empty() && rep.min_minor > 0.0;
  rep.note = "certificate over " + std::to_string(samples.size()) + " sampled Jacobians only";
  return rep;
}

}  // namespace flowsplit
