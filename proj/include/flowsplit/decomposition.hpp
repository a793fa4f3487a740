#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowsplit/lattice.hpp"
#include "flowsplit/matrix.hpp"
#include "flowsplit/sde.hpp"

namespace flowsplit {

// Chart R^{n-k} x R^k: the first n-k coordinates are horizontal (constant on
// vertical leaves), the last k are vertical (constant on horizontal leaves).
struct FoliationSplit {
  std::size_t n = 0;
  std::size_t k = 0;

  FoliationSplit(std::size_t dim, std::size_t vertical);
  std::size_t horizontal() const noexcept { return n - k; }
};

// Values of a map sampled on a lattice at time t.
struct DiffeoSample {
  Lattice grid;
  std::vector<Vector> values;
  double t = 0.0;

  Vector evaluate(std::span<const double> x, Matrix* jac = nullptr) const;
  // Flattened node-major copy of `values`.
  Vector flat() const;
  // Jacobian at a lattice node by central differences along the lattice
  // (one-sided on the boundary).
  Matrix node_jacobian(std::size_t node) const;
};

DiffeoSample sample_map(const Lattice& grid, const PointMap& map, double t = 0.0);

struct AffineFit {
  Vector offset;
  Matrix linear;
  double max_residual = 0.0;
};

// Least-squares fit values ~ offset + linear * points.
AffineFit affine_fit(std::span<const Vector> points, std::span<const Vector> values);

inline constexpr double kMinorRefusal = 1e-9;
inline constexpr double kNewtonTolerance = 1e-12;
inline constexpr std::size_t kNewtonIterations = 50;

class NewtonFailure : public Error {
 public:
  NewtonFailure(const std::string& what, Vector last) : Error(Errc::not_converged, what), last_(std::move(last)) {}
  const Vector& last_iterate() const noexcept { return last_; }

 private:
  Vector last_;
};

struct DecompositionResult {
  // psi(p) = (p_horizontal, phi_vertical(p)) on the input lattice.
  DiffeoSample psi;
  // xi is carried on the image points psi(p); xi.values[i] = xi(psi(p_i)),
  // stored against the original lattice index i.
  std::vector<Vector> xi_points;
  DiffeoSample xi;
  std::vector<double> minors;
  std::vector<std::size_t> refused;
  double residual = 0.0;
  double newton_tolerance = kNewtonTolerance;
  std::size_t k = 0;
  AffineFit psi_fit;
  AffineFit xi_fit;

  bool complete() const noexcept { return refused.empty(); }
  bool is_refused(std::size_t node) const;
  // xi at an arbitrary chart point: invert psi by Newton, then interpolate.
  Vector evaluate_xi(std::span<const double> q) const;
};

// Factor phi = xi o psi on the sample lattice. Jacobians of phi at the nodes
// may be supplied (e.g. from linearized trajectories); otherwise they are
// taken from lattice differences.
DecompositionResult decompose_local(const DiffeoSample& phi, const FoliationSplit& split,
                                    std::span<const Matrix> jacobians = {}, double newton_tol = kNewtonTolerance);

// Solve psi(p) = q for p with p's horizontal block equal to q's.
Vector invert_psi(const DiffeoSample& psi, const FoliationSplit& split, std::span<const double> q,
                  double tol = kNewtonTolerance);

struct Violation {
  char check = '?';  // 'a', 'b' or 'c'
  std::size_t node = 0;
  double magnitude = 0.0;
};

struct VerificationReport {
  double max_horizontal_shift = 0.0;   // (a)
  double max_vertical_mismatch = 0.0;  // (b)
  double max_xi_vertical_shift = 0.0;  // (c), first half
  double max_reconstruction = 0.0;     // (c), second half
  std::vector<Violation> violations;
  std::size_t checked = 0;

  bool passed() const noexcept { return violations.empty(); }
  bool passed(char check) const noexcept;
};

VerificationReport verify_decomposition(const DiffeoSample& phi, const DecompositionResult& result,
                                        const FoliationSplit& split, double tol);

struct JacobianSample {
  double t = 0.0;
  Vector point;
  Matrix jacobian;
};

struct OrientationReport {
  double min_minor = 0.0;
  std::size_t argmin = 0;
  double argmin_time = 0.0;
  std::size_t samples = 0;
  bool preserved = false;
  std::string note;
};

// Verdict is "preserved" iff the lower-right k-minor is positive on every sample.
OrientationReport orientation_check(std::span<const JacobianSample> samples, const FoliationSplit& split);

}  // namespace flowsplit
