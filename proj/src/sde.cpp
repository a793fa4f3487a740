#include "flowsplit/sde.hpp"

#include <cmath>
#include <tuple>

#include "heun.hpp"

namespace flowsplit {

namespace {

void check_start(const VectorFieldSystem& sys, std::span<const double> x0) {
  if (x0.size() != sys.dim()) throw Error(Errc::dimension_mismatch, "initial point has wrong dimension");
  if (!detail::all_finite(x0)) throw Error(Errc::invalid_argument, "initial point must be finite");
}

// State layout: [x (n) | Y (n*n row-major)].
struct LinearizedRhs {
  const VectorFieldSystem& sys;

  void operator()(std::span<const double> z, std::vector<Vector>& k) const {
    const std::size_t n = sys.dim();
    const auto x = z.first(n);
    const auto y = z.subspan(n, n * n);
    for (std::size_t r = 0; r < sys.field_count(); ++r) {
      const Vector v = sys.eval(r, x);
      const Matrix j = sys.jacobian(r, x);
      std::copy(v.begin(), v.end(), k[r].begin());
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < n; ++c) {
          double s = 0.0;
          for (std::size_t l = 0; l < n; ++l) s += j(i, l) * y[l * n + c];
          k[r][n + i * n + c] = s;
        }
      }
    }
  }
};

}  // namespace

Trajectory integrate_flow(const VectorFieldSystem& sys, std::span<const double> x0, const BrownianPath& path) {
  check_start(sys, x0);
  Trajectory out;
  out.times.reserve(path.steps + 1);
  out.points.reserve(path.steps + 1);
  auto rhs = [&](std::span<const double> z, std::vector<Vector>& k) {
    for (std::size_t r = 0; r < sys.field_count(); ++r) {
      const Vector v = sys.eval(r, z);
      std::copy(v.begin(), v.end(), k[r].begin());
    }
  };
  auto after = [&](Vector& z) {
    if (sys.transition()) sys.transition()(z);
  };
  auto record = [&](std::size_t step, const Vector& z) {
    out.times.push_back(static_cast<double>(step) * path.dt);
    out.points.push_back(z);
  };
  out.explosion_step = detail::heun_run(rhs, Vector(x0.begin(), x0.end()), path, sys.field_count(), after, record);
  return out;
}

namespace {

template <class Record>
std::pair<std::optional<std::size_t>, std::size_t> run_linearized(const VectorFieldSystem& sys,
                                                                   std::span<const double> x0,
                                                                   const BrownianPath& path, Record&& record) {
  check_start(sys, x0);
  const std::size_t n = sys.dim();
  Vector z(n + n * n, 0.0);
  std::copy(x0.begin(), x0.end(), z.begin());
  for (std::size_t i = 0; i < n; ++i) z[n + i * n + i] = 1.0;
  std::size_t transitions = 0;
  auto after = [&](Vector& state) {
    if (!sys.transition()) return;
    Vector x(state.begin(), state.begin() + static_cast<std::ptrdiff_t>(n));
    if (auto jac = sys.transition()(x)) {
      Matrix y = Matrix::unchecked(n, n, Vector(state.begin() + static_cast<std::ptrdiff_t>(n), state.end()));
      const Matrix moved = *jac * y;
      std::copy(x.begin(), x.end(), state.begin());
      std::copy(moved.entries().begin(), moved.entries().end(), state.begin() + static_cast<std::ptrdiff_t>(n));
      ++transitions;
    }
  };
  auto exploded = detail::heun_run(LinearizedRhs{sys}, std::move(z), path, sys.field_count(), after, record);
  return {exploded, transitions};
}

}  // namespace

LinearizedTrajectory integrate_linearized(const VectorFieldSystem& sys, std::span<const double> x0,
                                          const BrownianPath& path) {
  const std::size_t n = sys.dim();
  LinearizedTrajectory out;
  out.times.reserve(path.steps + 1);
  out.points.reserve(path.steps + 1);
  out.linearizations.reserve(path.steps + 1);
  auto record = [&](std::size_t step, const Vector& state) {
    out.times.push_back(static_cast<double>(step) * path.dt);
    out.points.emplace_back(state.begin(), state.begin() + static_cast<std::ptrdiff_t>(n));
    out.linearizations.push_back(Matrix::unchecked(n, n, Vector(state.begin() + static_cast<std::ptrdiff_t>(n), state.end())));
  };
  std::tie(out.explosion_step, out.transitions) = run_linearized(sys, x0, path, record);
  return out;
}

LinearizedEndpoint linearized_endpoint(const VectorFieldSystem& sys, std::span<const double> x0,
                                       const BrownianPath& path) {
  const std::size_t n = sys.dim();
  LinearizedEndpoint out;
  Vector last;
  auto record = [&](std::size_t, const Vector& state) { last = state; };
  auto [exploded, transitions] = run_linearized(sys, x0, path, record);
  if (exploded) throw Error(Errc::explosion, "linearized flow exploded at step " + std::to_string(*exploded));
  out.x.assign(last.begin(), last.begin() + static_cast<std::ptrdiff_t>(n));
  out.y = Matrix(n, n, Vector(last.begin() + static_cast<std::ptrdiff_t>(n), last.end()));
  out.transitions = transitions;
  return out;
}

Vector flow_endpoint(const VectorFieldSystem& sys, std::span<const double> x0, const BrownianPath& path) {
  Trajectory t = integrate_flow(sys, x0, path);
  if (t.explosion_step) throw Error(Errc::explosion, "flow exploded at step " + std::to_string(*t.explosion_step));
  return t.points.back();
}

Matrix jacobian_fd(const PointMap& map, std::span<const double> x, double h) {
  if (!(h > 0.0)) throw Error(Errc::invalid_argument, "finite-difference step must be positive");
  const std::size_t n = x.size();
  Vector xp(x.begin(), x.end());
  Vector xm = xp;
  Matrix j;
  for (std::size_t c = 0; c < n; ++c) {
    xp[c] = x[c] + h;
    xm[c] = x[c] - h;
    const Vector fp = map(xp);
    const Vector fm = map(xm);
    xp[c] = xm[c] = x[c];
    if (c == 0) j = Matrix(fp.size(), n);
    if (fp.size() != j.rows() || fm.size() != j.rows()) throw Error(Errc::dimension_mismatch, "map output size varies");
    for (std::size_t i = 0; i < fp.size(); ++i) {
      const double d = (fp[i] - fm[i]) / (2.0 * h);
      if (!std::isfinite(d)) throw Error(Errc::invalid_argument, "non-finite map evaluation in finite difference");
      j(i, c) = d;
    }
  }
  return j;
}

}  // namespace flowsplit
