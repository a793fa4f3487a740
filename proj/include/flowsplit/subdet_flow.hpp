#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowsplit/brownian.hpp"
#include "flowsplit/matrix.hpp"
#include "flowsplit/sde.hpp"
#include "flowsplit/vector_field.hpp"

namespace flowsplit {

enum class SubdetMethod { direct, ito_liouville, cauchy_binet };

const char* to_string(SubdetMethod m) noexcept;
std::optional<SubdetMethod> parse_subdet_method(std::string_view s);

struct MinorSelection {
  IndexSelection rows;
  IndexSelection cols;

  MinorSelection(IndexSelection r, IndexSelection c);

  // rows = cols = {n-k+1, ..., n}
  static MinorSelection decomposability(std::size_t n, std::size_t k);

  std::size_t size() const noexcept { return rows.size(); }
  std::size_t dim() const noexcept { return rows.bound(); }
};

struct SubdetTrace {
  std::vector<double> times;
  std::vector<double> values;
  SubdetMethod method = SubdetMethod::direct;
  std::optional<std::size_t> explosion_step;
};

struct StoppingTimeEstimate {
  std::optional<double> tau;  // empty: no crossing before the horizon
  double t_lo = 0.0;
  double t_hi = 0.0;
  int initial_sign = 1;
  double horizon = 0.0;
};

inline constexpr double kZeroTolerance = 1e-9;
inline constexpr std::size_t kMaxSubsets = 10000;

SubdetTrace subdet_direct(const LinearizedTrajectory& traj, const MinorSelection& sel);

// sum_p minor[Y : M Y : i_p], where `my` is the product M*Y.
double row_replacement_integrand(const Matrix& y, const Matrix& my, const MinorSelection& sel);

// Same quantity expanded over increasing k-subsets L:
// sum_L sum_p minor^I_L[I : M : i_p] * minor^L_J(Y).
double cauchy_binet_integrand(const Matrix& y, const Matrix& m, const MinorSelection& sel,
                              std::span<const IndexSelection> subsets);

SubdetTrace subdet_ito_liouville(const VectorFieldSystem& sys, std::span<const double> x0, const BrownianPath& path,
                                 const MinorSelection& sel);

SubdetTrace subdet_cauchy_binet_form(const VectorFieldSystem& sys, std::span<const double> x0,
                                     const BrownianPath& path, const MinorSelection& sel);

SubdetTrace subdet_trace(SubdetMethod method, const VectorFieldSystem& sys, std::span<const double> x0,
                         const BrownianPath& path, const MinorSelection& sel);

inline constexpr double kRelativeFloor = 1e-3;

// max_i |a_i - b_i| / max(|a_i|, |b_i|, kRelativeFloor) over samples with
// t <= t_max. The floor keeps the measure finite where a trace crosses zero.
double max_relative_deviation(const SubdetTrace& a, const SubdetTrace& b,
                              double t_max = std::numeric_limits<double>::infinity());

// First grid time where the trace drops to kZeroTolerance or below, refined by
// linear interpolation inside the bracketing step.
StoppingTimeEstimate estimate_stopping_time(const SubdetTrace& trace);

struct SufficientConditionSample {
  double t = 0.0;
  Vector point;
  Matrix y;
};

struct SufficientConditionReport {
  double max_abs = 0.0;
  bool satisfied = true;
  double tolerance = kZeroTolerance;
  std::size_t terms = 0;
  // location of the largest term
  std::size_t sample = 0;
  double time = 0.0;
  std::size_t field = 0;
  std::size_t row = 0;
  std::string subset;
  std::string note;
};

// Evaluates every product minor^{lower}_L[I : DX_r : i] * minor^L_{lower}(Y)
// for i in the lower block and L != lower over all samples. Sampled, so a
// numerical certificate only.
SufficientConditionReport check_sufficient_condition(const VectorFieldSystem& sys,
                                                     std::span<const SufficientConditionSample> samples,
                                                     std::size_t k);

std::vector<SufficientConditionSample> samples_from(const LinearizedTrajectory& traj, std::size_t stride = 1);

}  // namespace flowsplit
