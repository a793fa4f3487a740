#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "flowsplit/decomposition.hpp"
#include "flowsplit/matrix.hpp"
#include "flowsplit/sde.hpp"
#include "flowsplit/subdet_flow.hpp"

namespace flowsplit {

const char* version() noexcept;

// 12 significant digits.
std::string format_number(double v);

// First line of every CSV: "# flowsplit <version> <kind>".
std::string csv_header(std::string_view kind);

// Writes to a sibling temp file, then renames over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

// t, x_1..x_n and optionally vec(Y) row-major.
std::string trajectory_csv(const LinearizedTrajectory& traj, bool with_linearization = true);
std::string trajectory_csv(const Trajectory& traj);

// t, value, method
std::string trace_csv(const SubdetTrace& trace);
std::string traces_csv(std::span<const SubdetTrace> traces);

nlohmann::json stopping_time_to_json(const StoppingTimeEstimate& e);

nlohmann::json sample_to_json(const DiffeoSample& s);
nlohmann::json decomposition_to_json(const DecompositionResult& r);

// One row per node: p, psi(p), xi(psi(p)), phi(p), residual.
std::string decomposition_csv(const DiffeoSample& phi, const DecompositionResult& r);

}  // namespace flowsplit
