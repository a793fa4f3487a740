#include "flowsplit/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace flowsplit {

using nlohmann::json;

const char* version() noexcept { return FLOWSPLIT_VERSION; }

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string csv_header(std::string_view kind) { return "# flowsplit " + std::string(version()) + " " + std::string(kind) + "\n"; }

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io_error, "cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(Errc::io_error, "write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(Errc::io_error, "rename to " + path.string() + " failed: " + ec.message());
  }
}

json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"entries", m.entries()}};
}

Matrix matrix_from_json(const json& j) {
  try {
    return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(), j.at("entries").get<Vector>());
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("matrix JSON: ") + e.what());
  }
}

namespace {

void append_row(std::string& out, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_number(values[i]);
  }
}

}  // namespace

std::string trajectory_csv(const LinearizedTrajectory& traj, bool with_linearization) {
  std::string out = csv_header("trajectory");
  const std::size_t n = traj.points.empty() ? 0 : traj.points.front().size();
  out += "t";
  for (std::size_t i = 1; i <= n; ++i) out += ",x" + std::to_string(i);
  if (with_linearization) {
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t j = 1; j <= n; ++j) out += ",y" + std::to_string(i) + "_" + std::to_string(j);
  }
  out += '\n';
  Vector row;
  for (std::size_t s = 0; s < traj.points.size(); ++s) {
    row.assign(1, traj.times[s]);
    row.insert(row.end(), traj.points[s].begin(), traj.points[s].end());
    if (with_linearization) row.insert(row.end(), traj.linearizations[s].entries().begin(), traj.linearizations[s].entries().end());
    append_row(out, row);
    out += '\n';
  }
  return out;
}

std::string trajectory_csv(const Trajectory& traj) {
  LinearizedTrajectory t;
  t.times = traj.times;
  t.points = traj.points;
  return trajectory_csv(t, false);
}

std::string trace_csv(const SubdetTrace& trace) { return traces_csv(std::span(&trace, 1)); }

std::string traces_csv(std::span<const SubdetTrace> traces) {
  std::string out = csv_header("subdet-trace");
  out += "t,value,method\n";
  for (const SubdetTrace& tr : traces) {
    for (std::size_t i = 0; i < tr.values.size(); ++i) {
      out += format_number(tr.times[i]);
      out += ',';
      out += format_number(tr.values[i]);
      out += ',';
      out += to_string(tr.method);
      out += '\n';
    }
  }
  return out;
}

json stopping_time_to_json(const StoppingTimeEstimate& e) {
  json j;
  j["tau"] = e.tau ? json(*e.tau) : json(nullptr);
  j["bracket"] = {e.t_lo, e.t_hi};
  j["horizon"] = e.horizon;
  j["found"] = e.tau.has_value();
  return j;
}

json sample_to_json(const DiffeoSample& s) {
  Vector flat;
  for (const Vector& v : s.values) flat.insert(flat.end(), v.begin(), v.end());
  return {{"grid", {{"lo", s.grid.lo()}, {"hi", s.grid.hi()}, {"counts", s.grid.counts()}}},
          {"t", s.t},
          {"dim", s.values.empty() ? 0 : s.values.front().size()},
          {"values", flat}};
}

json decomposition_to_json(const DecompositionResult& r) {
  json j;
  j["k"] = r.k;
  j["psi"] = sample_to_json(r.psi);
  j["xi"] = sample_to_json(r.xi);
  Vector pts;
  for (const Vector& v : r.xi_points) pts.insert(pts.end(), v.begin(), v.end());
  j["xi_points"] = pts;
  j["minors"] = r.minors;
  j["refused"] = r.refused;
  j["complete"] = r.complete();
  j["residual"] = std::isfinite(r.residual) ? json(r.residual) : json(nullptr);
  j["newton_tolerance"] = r.newton_tolerance;
  auto fit = [](const AffineFit& f) {
    if (f.linear.rows() == 0) return json(nullptr);
    return json{{"offset", f.offset}, {"linear", matrix_to_json(f.linear)}, {"max_residual", f.max_residual}};
  };
  j["psi_fit"] = fit(r.psi_fit);
  j["xi_fit"] = fit(r.xi_fit);
  return j;
}

std::string decomposition_csv(const DiffeoSample& phi, const DecompositionResult& r) {
  const std::size_t n = phi.grid.dim();
  std::string out = csv_header("decomposition");
  const char* groups[] = {"p", "psi", "xi", "phi"};
  bool first = true;
  for (const char* g : groups) {
    for (std::size_t i = 1; i <= n; ++i) {
      if (!first) out += ',';
      first = false;
      out += std::string(g) + std::to_string(i);
    }
  }
  out += ",residual,refused\n";
  Vector row;
  for (std::size_t i = 0; i < phi.values.size(); ++i) {
    const Vector p = phi.grid.point(i);
    row = p;
    row.insert(row.end(), r.psi.values[i].begin(), r.psi.values[i].end());
    double res = std::numeric_limits<double>::quiet_NaN();
    Vector back(n, std::numeric_limits<double>::quiet_NaN());
    if (!r.is_refused(i)) {
      try {
        back = r.evaluate_xi(r.psi.values[i]);
        res = 0.0;
        for (std::size_t d = 0; d < n; ++d) res = std::max(res, std::abs(back[d] - phi.values[i][d]));
      } catch (const Error&) {
      }
    }
    row.insert(row.end(), back.begin(), back.end());
    row.insert(row.end(), phi.values[i].begin(), phi.values[i].end());
    row.push_back(res);
    append_row(out, row);
    out += r.is_refused(i) ? ",1\n" : ",0\n";
  }
  return out;
}

}  // namespace flowsplit
