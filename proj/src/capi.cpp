#include "flowsplit/flowsplit.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "flowsplit/io.hpp"
#include "flowsplit/minor_algebra.hpp"
#include "flowsplit/run.hpp"
#include "flowsplit/scenario.hpp"
#include "flowsplit/subdet_flow.hpp"

using namespace flowsplit;
using nlohmann::json;

struct fs_scenario {
  Scenario s;
};

struct fs_trace {
  SubdetTrace t;
};

namespace {

thread_local std::string last_error;

fs_status fail(fs_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <class F>
fs_status guarded(F&& f) {
  try {
    last_error.clear();
    f();
    return FS_OK;
  } catch (const Error& e) {
    return fail(static_cast<fs_status>(static_cast<int>(e.code())), e.what());
  } catch (const json::exception& e) {
    return fail(FS_PARSE_ERROR, e.what());
  } catch (const std::bad_alloc&) {
    return fail(FS_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(FS_INTERNAL, e.what());
  }
}

void need(const void* p, const char* what) {
  if (!p) throw Error(Errc::invalid_argument, std::string(what) + " is null");
}

IndexSelection selection(const size_t* idx, size_t k, size_t bound) {
  need(idx, "selection");
  return IndexSelection(std::vector<std::size_t>(idx, idx + k), bound);
}

}  // namespace

extern "C" {

const char* fs_version(void) { return version(); }

const char* fs_last_error(void) { return last_error.c_str(); }

const char* fs_status_string(fs_status s) {
  if (s == FS_OK) return "ok";
  if (s == FS_INTERNAL) return "internal";
  if (s >= FS_INVALID_ARGUMENT && s <= FS_CHECK_FAILED) return to_string(static_cast<Errc>(static_cast<int>(s)));
  return "unknown";
}

size_t fs_scenario_count(void) {
  try {
    return registry().size();
  } catch (const std::exception& e) {
    last_error = e.what();
    return 0;
  }
}

const char* fs_scenario_name(size_t i) {
  try {
    const auto& r = registry();
    return i < r.size() ? r[i].name.c_str() : nullptr;
  } catch (const std::exception& e) {
    last_error = e.what();
    return nullptr;
  }
}

fs_status fs_scenario_open(const char* name, const char* params_json, fs_scenario** out) {
  return guarded([&] {
    need(name, "name");
    need(out, "out");
    *out = nullptr;
    Expression::Constants params;
    if (params_json && *params_json) {
      const json p = json::parse(params_json);
      if (!p.is_object()) throw Error(Errc::invalid_argument, "parameters must be a JSON object");
      for (const auto& [k, v] : p.items()) params[k] = v.get<double>();
    }
    *out = new fs_scenario{make_scenario(name, params)};
  });
}

fs_status fs_scenario_load_json(const char* spec_json, fs_scenario** out) {
  return guarded([&] {
    need(spec_json, "spec");
    need(out, "out");
    *out = nullptr;
    *out = new fs_scenario{scenario_from_json(json::parse(spec_json))};
  });
}

void fs_scenario_free(fs_scenario* s) { delete s; }

fs_status fs_scenario_info_get(const fs_scenario* h, fs_scenario_info* info) {
  return guarded([&] {
    need(h, "scenario");
    need(info, "info");
    const Scenario& s = h->s;
    *info = fs_scenario_info{};
    info->has_flow = s.has_flow();
    info->has_fixture = s.fixture.has_value();
    if (s.has_flow()) {
      info->dim = s.dim();
      info->vertical = s.split ? s.split->k : 0;
      info->noises = s.noise_count();
      info->horizon = s.horizon;
      info->dt = s.dt;
      info->seed = s.seed;
      info->has_transition = static_cast<bool>(s.system->transition());
    }
  });
}

fs_status fs_subdet_trace(const fs_scenario* h, fs_method method, const size_t* rows, const size_t* cols, size_t k,
                          double horizon, double dt, uint64_t seed, fs_trace** out) {
  return guarded([&] {
    need(h, "scenario");
    need(out, "out");
    *out = nullptr;
    const Scenario& s = h->s;
    if (!s.has_flow()) throw Error(Errc::invalid_argument, "scenario has no flow");
    if (method < FS_METHOD_DIRECT || method > FS_METHOD_CB) throw Error(Errc::invalid_argument, "unknown method");
    const double step = dt > 0.0 ? dt : s.dt;
    const double t = horizon > 0.0 ? horizon : s.horizon;
    if (!std::isfinite(step) || !std::isfinite(t) || t < step) {
      throw Error(Errc::invalid_argument, "need 0 < dt <= horizon");
    }
    const MinorSelection sel = (rows || cols)
                                   ? MinorSelection(selection(rows, k, s.dim()), selection(cols, k, s.dim()))
                                   : s.default_selection();
    const auto steps = static_cast<std::size_t>(std::llround(t / step));
    const BrownianPath path = sample_brownian(seed, s.noise_count(), step, steps);
    *out = new fs_trace{subdet_trace(static_cast<SubdetMethod>(method), *s.system, s.x0, path, sel)};
  });
}

size_t fs_trace_length(const fs_trace* t) { return t ? t->t.values.size() : 0; }
const double* fs_trace_times(const fs_trace* t) { return t ? t->t.times.data() : nullptr; }
const double* fs_trace_values(const fs_trace* t) { return t ? t->t.values.data() : nullptr; }
long long fs_trace_explosion_step(const fs_trace* t) {
  return t && t->t.explosion_step ? static_cast<long long>(*t->t.explosion_step) : -1;
}
void fs_trace_free(fs_trace* t) { delete t; }

fs_status fs_stopping_time_estimate(const fs_trace* t, fs_stopping_time* out) {
  return guarded([&] {
    need(t, "trace");
    need(out, "out");
    const StoppingTimeEstimate e = estimate_stopping_time(t->t);
    out->found = e.tau.has_value();
    out->tau = e.tau.value_or(std::numeric_limits<double>::quiet_NaN());
    out->t_lo = e.t_lo;
    out->t_hi = e.t_hi;
    out->horizon = e.horizon;
  });
}

fs_status fs_minor_det(const double* m, size_t n, const size_t* rows, const size_t* cols, size_t k, double* out) {
  return guarded([&] {
    need(out, "out");
    if (n > 0) need(m, "matrix");
    const Matrix a(n, n, Vector(m, m + n * n));
    if (k == 0) {
      *out = 1.0;
      return;
    }
    *out = minor_det(a, selection(rows, k, n), selection(cols, k, n));
  });
}

fs_status fs_int_det(const int64_t* m, size_t n, int64_t* out) {
  return guarded([&] {
    need(out, "out");
    if (n > 0) need(m, "matrix");
    *out = determinant(IntMatrix(n, n, std::vector<std::int64_t>(m, m + n * n)));
  });
}

fs_status fs_cauchy_binet(const double* a, const double* b, size_t l, size_t m, double* out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(out, "out");
    if (binomial(m, l) > kMaxSubsets) throw Error(Errc::out_of_range, "too many subsets");
    *out = cauchy_binet(Matrix(l, m, Vector(a, a + l * m)), Matrix(m, l, Vector(b, b + m * l)));
  });
}

fs_status fs_run(const char* config_json, char** report, int* exit_status) {
  return guarded([&] {
    need(config_json, "config");
    need(report, "report");
    need(exit_status, "exit_status");
    *report = nullptr;
    RunOutcome o;
    try {
      o = run(RunConfig::from_json(json::parse(config_json)));
    } catch (const json::exception& e) {
      o.status = kExitUsage;
      o.report = {{"status", "error"}, {"exit_status", kExitUsage}, {"error", {{"code", "parse_error"}, {"message", e.what()}}}};
    } catch (const Error& e) {
      o.status = kExitUsage;
      o.report = {{"status", "error"}, {"exit_status", kExitUsage}, {"error", {{"code", to_string(e.code())}, {"message", e.what()}}}};
    }
    const std::string text = o.report.dump();
    *report = static_cast<char*>(std::malloc(text.size() + 1));
    if (!*report) throw std::bad_alloc();
    std::memcpy(*report, text.c_str(), text.size() + 1);
    *exit_status = o.status;
  });
}

void fs_string_free(char* s) { std::free(s); }

}  // extern "C"
