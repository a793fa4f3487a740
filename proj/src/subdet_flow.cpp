#include "flowsplit/subdet_flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flowsplit/minor_algebra.hpp"
#include "heun.hpp"

namespace flowsplit {

const char* to_string(SubdetMethod m) noexcept {
  switch (m) {
    case SubdetMethod::direct: return "direct";
    case SubdetMethod::ito_liouville: return "ito";
    case SubdetMethod::cauchy_binet: return "cb";
  }
  return "?";
}

std::optional<SubdetMethod> parse_subdet_method(std::string_view s) {
  if (s == "direct") return SubdetMethod::direct;
  if (s == "ito" || s == "ito_liouville") return SubdetMethod::ito_liouville;
  if (s == "cb" || s == "cauchy_binet") return SubdetMethod::cauchy_binet;
  return std::nullopt;
}

MinorSelection::MinorSelection(IndexSelection r, IndexSelection c) : rows(std::move(r)), cols(std::move(c)) {
  if (rows.size() != cols.size()) throw Error(Errc::dimension_mismatch, "minor selection: rows and cols differ in length");
  if (rows.bound() != cols.bound()) throw Error(Errc::dimension_mismatch, "minor selection: rows and cols differ in bound");
  if (rows.empty()) throw Error(Errc::invalid_argument, "minor selection must be nonempty");
}

MinorSelection MinorSelection::decomposability(std::size_t n, std::size_t k) {
  return MinorSelection(IndexSelection::trailing(n, k), IndexSelection::trailing(n, k));
}

namespace {

void check_selection(const MinorSelection& sel, std::size_t n) {
  if (sel.dim() != n) {
    throw Error(Errc::dimension_mismatch, "selection is for dimension " + std::to_string(sel.dim()) + ", system has " +
                                              std::to_string(n));
  }
}

void check_formula_system(const VectorFieldSystem& sys) {
  if (sys.transition()) {
    throw Error(Errc::invalid_argument, "formula traces are only defined within a single chart; use the direct method");
  }
}

// State: [x (n) | Y (n*n) | G].
template <class Integrand>
SubdetTrace formula_trace(SubdetMethod method, const VectorFieldSystem& sys, std::span<const double> x0,
                          const BrownianPath& path, const MinorSelection& sel, Integrand&& integrand) {
  check_formula_system(sys);
  const std::size_t n = sys.dim();
  check_selection(sel, n);
  if (x0.size() != n) throw Error(Errc::dimension_mismatch, "initial point has wrong dimension");
  Vector z(n + n * n + 1, 0.0);
  std::copy(x0.begin(), x0.end(), z.begin());
  for (std::size_t i = 0; i < n; ++i) z[n + i * n + i] = 1.0;
  z.back() = minor_det(Matrix::identity(n), sel.rows, sel.cols);

  auto rhs = [&](std::span<const double> state, std::vector<Vector>& k) {
    const auto x = state.first(n);
    const Matrix y = Matrix::unchecked(n, n, Vector(state.begin() + static_cast<std::ptrdiff_t>(n), state.begin() + static_cast<std::ptrdiff_t>(n + n * n)));
    for (std::size_t r = 0; r < sys.field_count(); ++r) {
      const Vector v = sys.eval(r, x);
      const Matrix dx = sys.jacobian(r, x);
      const Matrix dxy = dx * y;
      std::copy(v.begin(), v.end(), k[r].begin());
      std::copy(dxy.entries().begin(), dxy.entries().end(), k[r].begin() + static_cast<std::ptrdiff_t>(n));
      k[r].back() = integrand(y, dx, dxy);
    }
  };
  SubdetTrace out;
  out.method = method;
  out.times.reserve(path.steps + 1);
  out.values.reserve(path.steps + 1);
  auto record = [&](std::size_t step, const Vector& state) {
    out.times.push_back(static_cast<double>(step) * path.dt);
    out.values.push_back(state.back());
  };
  out.explosion_step = detail::heun_run(rhs, std::move(z), path, sys.field_count(), [](Vector&) {}, record);
  return out;
}

}  // namespace

SubdetTrace subdet_direct(const LinearizedTrajectory& traj, const MinorSelection& sel) {
  SubdetTrace out;
  out.method = SubdetMethod::direct;
  out.explosion_step = traj.explosion_step;
  out.times = traj.times;
  out.values.reserve(traj.linearizations.size());
  for (const Matrix& y : traj.linearizations) {
    check_selection(sel, y.rows());
    out.values.push_back(minor_det(y, sel.rows, sel.cols));
  }
  return out;
}

double row_replacement_integrand(const Matrix& y, const Matrix& my, const MinorSelection& sel) {
  double s = 0.0;
  for (std::size_t p = 0; p < sel.size(); ++p) s += minor_det(row_replace(y, my, sel.rows[p]), sel.rows, sel.cols);
  return s;
}

double cauchy_binet_integrand(const Matrix& y, const Matrix& m, const MinorSelection& sel,
                              std::span<const IndexSelection> subsets) {
  const Matrix eye = Matrix::identity(y.rows());
  double s = 0.0;
  for (std::size_t p = 0; p < sel.size(); ++p) {
    const Matrix coeff = row_replace(eye, m, sel.rows[p]);
    for (const IndexSelection& l : subsets) {
      const double c = minor_det(coeff, sel.rows, l);
      if (c == 0.0) continue;
      s += c * minor_det(y, l, sel.cols);
    }
  }
  return s;
}

SubdetTrace subdet_ito_liouville(const VectorFieldSystem& sys, std::span<const double> x0, const BrownianPath& path,
                                 const MinorSelection& sel) {
  return formula_trace(SubdetMethod::ito_liouville, sys, x0, path, sel,
                       [&](const Matrix& y, const Matrix&, const Matrix& dxy) {
                         return row_replacement_integrand(y, dxy, sel);
                       });
}

SubdetTrace subdet_cauchy_binet_form(const VectorFieldSystem& sys, std::span<const double> x0,
                                     const BrownianPath& path, const MinorSelection& sel) {
  if (binomial(sys.dim(), sel.size()) > kMaxSubsets) {
    throw Error(Errc::invalid_argument, "Cauchy-Binet expansion would need more than 10^4 subsets");
  }
  const std::vector<IndexSelection> subsets = combinations(sys.dim(), sel.size());
  return formula_trace(SubdetMethod::cauchy_binet, sys, x0, path, sel,
                       [&](const Matrix& y, const Matrix& dx, const Matrix&) {
                         return cauchy_binet_integrand(y, dx, sel, subsets);
                       });
}

SubdetTrace subdet_trace(SubdetMethod method, const VectorFieldSystem& sys, std::span<const double> x0,
                         const BrownianPath& path, const MinorSelection& sel) {
  switch (method) {
    case SubdetMethod::direct: return subdet_direct(integrate_linearized(sys, x0, path), sel);
    case SubdetMethod::ito_liouville: return subdet_ito_liouville(sys, x0, path, sel);
    case SubdetMethod::cauchy_binet: return subdet_cauchy_binet_form(sys, x0, path, sel);
  }
  throw Error(Errc::invalid_argument, "unknown subdeterminant method");
}

double max_relative_deviation(const SubdetTrace& a, const SubdetTrace& b, double t_max) {
  if (a.times.size() != b.times.size()) throw Error(Errc::dimension_mismatch, "traces have different lengths");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (a.times[i] != b.times[i]) throw Error(Errc::dimension_mismatch, "traces are on different time grids");
    if (a.times[i] > t_max) break;
    const double scale = std::max({std::abs(a.values[i]), std::abs(b.values[i]), kRelativeFloor});
    const double d = std::abs(a.values[i] - b.values[i]) / scale;
    if (!(d <= worst)) worst = std::isnan(d) ? std::numeric_limits<double>::infinity() : d;
  }
  return worst;
}

StoppingTimeEstimate estimate_stopping_time(const SubdetTrace& trace) {
  if (trace.values.empty() || trace.times.size() != trace.values.size()) {
    throw Error(Errc::invalid_argument, "stopping time needs a nonempty trace");
  }
  if (!(trace.values.front() > kZeroTolerance)) {
    throw Error(Errc::invalid_argument, "stopping time needs a positive initial value");
  }
  StoppingTimeEstimate est;
  est.initial_sign = 1;
  est.horizon = trace.times.back();
  for (std::size_t i = 1; i < trace.values.size(); ++i) {
    const double v = trace.values[i];
    if (v > kZeroTolerance) continue;
    const double t0 = trace.times[i - 1];
    const double t1 = trace.times[i];
    const double v0 = trace.values[i - 1];
    est.t_lo = t0;
    est.t_hi = t1;
    est.tau = v <= 0.0 ? t0 + (t1 - t0) * v0 / (v0 - v) : t1;
    return est;
  }
  est.t_lo = est.t_hi = est.horizon;
  return est;
}

std::vector<SufficientConditionSample> samples_from(const LinearizedTrajectory& traj, std::size_t stride) {
  if (stride == 0) stride = 1;
  std::vector<SufficientConditionSample> out;
  for (std::size_t i = 0; i < traj.points.size(); i += stride) {
    out.push_back({traj.times[i], traj.points[i], traj.linearizations[i]});
  }
  return out;
}

SufficientConditionReport check_sufficient_condition(const VectorFieldSystem& sys,
                                                     std::span<const SufficientConditionSample> samples,
                                                     std::size_t k) {
  const std::size_t n = sys.dim();
  if (k < 1 || k > n) throw Error(Errc::out_of_range, "split k outside [1, n]");
  if (binomial(n, k) > kMaxSubsets) throw Error(Errc::invalid_argument, "too many subsets for the sufficient-condition check");
  const IndexSelection lower = IndexSelection::trailing(n, k);
  std::vector<IndexSelection> others;
  for (IndexSelection& l : combinations(n, k)) {
    if (!(l == lower)) others.push_back(std::move(l));
  }
  const Matrix eye = Matrix::identity(n);
  SufficientConditionReport rep;
  rep.note = "numerical certificate over " + std::to_string(samples.size()) + " sampled states, not a proof";
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& sample = samples[s];
    if (sample.point.size() != n || sample.y.rows() != n || sample.y.cols() != n) {
      throw Error(Errc::dimension_mismatch, "sample has wrong dimension");
    }
    std::vector<double> state_minors(others.size());
    for (std::size_t li = 0; li < others.size(); ++li) state_minors[li] = minor_det(sample.y, others[li], lower);
    for (std::size_t r = 0; r < sys.field_count(); ++r) {
      const Matrix dx = sys.jacobian(r, sample.point);
      for (std::size_t i : lower) {
        const Matrix coeff = row_replace(eye, dx, i);
        for (std::size_t li = 0; li < others.size(); ++li) {
          const double term = minor_det(coeff, lower, others[li]) * state_minors[li];
          ++rep.terms;
          if (std::abs(term) > rep.max_abs || !std::isfinite(term)) {
            rep.max_abs = std::isfinite(term) ? std::abs(term) : std::numeric_limits<double>::infinity();
            rep.sample = s;
            rep.time = sample.t;
            rep.field = r;
            rep.row = i;
            rep.subset = others[li].to_string();
          }
        }
      }
    }
  }
  rep.satisfied = rep.max_abs <= rep.tolerance;
  return rep;
}

}  // namespace flowsplit
