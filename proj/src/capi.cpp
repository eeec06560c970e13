#include "spd/spd.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <new>
#include <optional>
#include <string>

#include "spd/errors.hpp"
#include "spd/experiments.hpp"
#include "spd/serialize.hpp"

struct spd_report {
  std::optional<spd::PiecewiseDensity> density;
  spd::Json json;
  spd_summary summary{};
};

struct spd_case {
  spd::CaseSpec spec;
};

struct spd_rows {
  std::vector<spd::ComparisonRow> rows;
};

namespace {

thread_local std::string last_error;

spd_status status_for(spd::ErrorCode code) {
  switch (code) {
    case spd::ErrorCode::invalid_argument: return SPD_ERR_INVALID_ARGUMENT;
    case spd::ErrorCode::infeasible: return SPD_ERR_INFEASIBLE;
    case spd::ErrorCode::domain: return SPD_ERR_DOMAIN;
    case spd::ErrorCode::singularity: return SPD_ERR_SINGULARITY;
    case spd::ErrorCode::negativity: return SPD_ERR_NEGATIVITY;
    case spd::ErrorCode::solver: return SPD_ERR_SOLVER;
    case spd::ErrorCode::unsupported: return SPD_ERR_UNSUPPORTED;
    case spd::ErrorCode::io: return SPD_ERR_IO;
  }
  return SPD_ERR_INTERNAL;
}

spd_status fail(spd_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

/// Runs `body`, translating exceptions into status codes.
template <class F>
spd_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return SPD_OK;
  } catch (const spd::Error& e) {
    return fail(status_for(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SPD_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SPD_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SPD_ERR_INTERNAL, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw spd::Error(spd::ErrorCode::invalid_argument, what);
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<double> moment_vector(const double* moments, std::size_t count) {
  require(moments != nullptr && count > 0, "moments must hold at least mu_0");
  return {moments, moments + count};
}

spd::RunOptions run_options(const spd_run_options* options) {
  spd::RunOptions out;
  if (!options) return out;
  require(options->solver == SPD_SOLVER_DIRECT || options->solver == SPD_SOLVER_LAMBDA, "unknown solver");
  out.route = options->solver == SPD_SOLVER_LAMBDA ? spd::SolverRoute::lambda : spd::SolverRoute::direct;
  if (options->out_dir) out.out_dir = options->out_dir;
  if (options->trace_path) out.trace_path = options->trace_path;
  out.trial_count = options->trial_count;
  out.seed = options->seed;
  out.jobs = options->jobs;
  return out;
}

}  // namespace

extern "C" {

const char* spd_version(void) { return "1.0.0"; }

const char* spd_last_error(void) { return last_error.c_str(); }

const char* spd_status_name(spd_status status) {
  switch (status) {
    case SPD_OK: return "ok";
    case SPD_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case SPD_ERR_INFEASIBLE: return "infeasible";
    case SPD_ERR_DOMAIN: return "domain";
    case SPD_ERR_SINGULARITY: return "singularity";
    case SPD_ERR_NEGATIVITY: return "negativity";
    case SPD_ERR_SOLVER: return "solver";
    case SPD_ERR_UNSUPPORTED: return "unsupported";
    case SPD_ERR_IO: return "io";
    case SPD_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void spd_free_string(char* text) { delete[] text; }

spd_status spd_solve(double a, double b, size_t n, const double* moments, size_t count, spd_solver solver,
                     spd_report** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be null");
    *out = nullptr;
    const spd::Interval iv(a, b);
    const spd::Partition partition(iv, n);
    spd::MomentSpec spec(moment_vector(moments, count), iv);
    auto report = std::make_unique<spd_report>();
    spd::opt::SolveDiagnostics diag;
    if (solver == SPD_SOLVER_DIRECT) {
      auto r = spd::solve_spd(spd::SpdProblem(partition, spec));
      report->json = spd::to_json(r);
      diag = r.diagnostics;
      report->density = std::move(r.density);
    } else {
      require(solver == SPD_SOLVER_LAMBDA, "unknown solver");
      auto fit = spd::fit_multipliers(spec, partition, spd::initial_multipliers(spec.order(), iv));
      diag = fit.diagnostics;
      report->json["multipliers"] = spd::to_json(fit.multipliers);
      try {
        report->density = spd::induced_density(fit.multipliers, partition);
        report->json["density"] = spd::to_json(*report->density);
        report->json["path_length"] = spd::path_length(*report->density);
      } catch (const spd::PointError& e) {
        diag.converged = false;
        diag.message = e.what();
      }
      report->json["diagnostics"] = spd::to_json(diag);
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    spd_summary& s = report->summary;
    s.path_length = report->density ? spd::path_length(*report->density) : nan;
    s.uniformity_index = report->density ? spd::uniformity_index(*report->density) : nan;
    s.peak_density = report->density ? report->density->peak() : nan;
    s.max_equality_violation = diag.max_equality_violation;
    s.kkt_stationarity_residual = diag.kkt_stationarity_residual;
    s.iterations = diag.iterations;
    s.converged = diag.converged && report->density ? 1 : 0;
    *out = report.release();
  });
}

void spd_report_free(spd_report* report) { delete report; }

spd_status spd_report_summary(const spd_report* report, spd_summary* out) {
  return guarded([&] {
    require(report && out, "report and out must not be null");
    *out = report->summary;
  });
}

spd_status spd_report_density(const spd_report* report, double* values, size_t capacity, size_t* size) {
  return guarded([&] {
    require(report && size, "report and size must not be null");
    if (!report->density) throw spd::Error(spd::ErrorCode::solver, "the solve produced no density");
    *size = report->density->size();
    require(values != nullptr || capacity == 0, "values must not be null when capacity > 0");
    const auto v = report->density->values();
    std::copy_n(v.begin(), std::min(capacity, v.size()), values);
  });
}

spd_status spd_report_json(const spd_report* report, char** json) {
  return guarded([&] {
    require(report && json, "report and json must not be null");
    *json = copy_string(report->json.dump(2));
  });
}

spd_status spd_report_density_csv(const spd_report* report, char** csv) {
  return guarded([&] {
    require(report && csv, "report and csv must not be null");
    if (!report->density) throw spd::Error(spd::ErrorCode::solver, "the solve produced no density");
    *csv = copy_string(spd::density_to_csv(*report->density));
  });
}

spd_status spd_reference_json(double a, double b, const double* moments, size_t count, char** json) {
  return guarded([&] {
    require(json != nullptr, "json must not be null");
    const spd::Interval iv(a, b);
    const auto ref = spd::match_reference(iv, spd::MomentSpec(moment_vector(moments, count), iv));
    auto j = spd::to_json(ref);
    j["path_length"] = spd::reference_path_length(ref);
    *json = copy_string(j.dump(2));
  });
}

spd_status spd_reference_path_length(double a, double b, const double* moments, size_t count, double* length) {
  return guarded([&] {
    require(length != nullptr, "length must not be null");
    const spd::Interval iv(a, b);
    *length = spd::reference_path_length(spd::match_reference(iv, spd::MomentSpec(moment_vector(moments, count), iv)));
  });
}

void spd_run_options_init(spd_run_options* options) {
  if (!options) return;
  *options = spd_run_options{SPD_SOLVER_DIRECT, nullptr, nullptr, 0, 0, 1};
}

size_t spd_preset_count(void) { return spd::preset_names().size(); }

const char* spd_preset_name(size_t index) {
  static const auto names = spd::preset_names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

spd_status spd_case_create(const char* name, double a, double b, const double* moments, size_t count, size_t n,
                           spd_case** out) {
  return guarded([&] {
    require(name && out, "name and out must not be null");
    *out = nullptr;
    const spd::Interval iv(a, b);
    *out = new spd_case{spd::make_case(name, iv, spd::MomentSpec(moment_vector(moments, count), iv), n)};
  });
}

spd_status spd_case_preset(const char* name, spd_case** out) {
  return guarded([&] {
    require(name && out, "name and out must not be null");
    *out = nullptr;
    *out = new spd_case{spd::preset_case(name)};
  });
}

spd_status spd_case_sweep_preset(const char* name, spd_case** out) {
  return guarded([&] {
    require(name && out, "name and out must not be null");
    *out = nullptr;
    *out = new spd_case{spd::preset_sweep(name)};
  });
}

spd_status spd_case_from_json(const char* json, spd_case** out) {
  return guarded([&] {
    require(json && out, "json and out must not be null");
    *out = nullptr;
    spd::Json j;
    try {
      j = spd::Json::parse(json);
    } catch (const nlohmann::json::exception& e) {
      throw spd::Error(spd::ErrorCode::io, std::string("malformed JSON: ") + e.what());
    }
    *out = new spd_case{spd::case_from_json(j)};
  });
}

spd_status spd_case_to_json(const spd_case* spec, char** json) {
  return guarded([&] {
    require(spec && json, "case and json must not be null");
    *json = copy_string(spd::to_json(spec->spec).dump(2));
  });
}

spd_status spd_case_interval(const spd_case* spec, double* a, double* b) {
  return guarded([&] {
    require(spec && a && b, "case, a and b must not be null");
    *a = spec->spec.interval.lower();
    *b = spec->spec.interval.upper();
  });
}

spd_status spd_case_clear_sweep(spd_case* spec) {
  return guarded([&] {
    require(spec != nullptr, "case must not be null");
    spec->spec.sweep.clear();
  });
}

spd_status spd_case_add_sweep_interval(spd_case* spec, double a, double b) {
  return guarded([&] {
    require(spec != nullptr, "case must not be null");
    const spd::Interval iv(a, b);
    spec->spec.moments.require_attainable(iv);
    spec->spec.sweep.push_back(iv);
  });
}

void spd_case_free(spd_case* spec) { delete spec; }

spd_status spd_case_run(const spd_case* spec, const spd_run_options* options, spd_rows** out) {
  return guarded([&] {
    require(spec && out, "case and out must not be null");
    *out = nullptr;
    *out = new spd_rows{{spd::run_case(spec->spec, run_options(options))}};
  });
}

spd_status spd_case_sweep(const spd_case* spec, const spd_run_options* options, spd_rows** out) {
  return guarded([&] {
    require(spec && out, "case and out must not be null");
    *out = nullptr;
    *out = new spd_rows{spd::run_bound_sweep(spec->spec, run_options(options))};
  });
}

spd_status spd_rows_create(spd_rows** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be null");
    *out = new spd_rows{};
  });
}

spd_status spd_rows_append(spd_rows* dst, const spd_rows* src) {
  return guarded([&] {
    require(dst && src, "row sets must not be null");
    if (dst == src) {
      auto copy = src->rows;
      dst->rows.insert(dst->rows.end(), copy.begin(), copy.end());
    } else {
      dst->rows.insert(dst->rows.end(), src->rows.begin(), src->rows.end());
    }
  });
}

size_t spd_rows_count(const spd_rows* rows) { return rows ? rows->rows.size() : 0; }

spd_status spd_rows_get(const spd_rows* rows, size_t index, spd_row* out) {
  return guarded([&] {
    require(rows && out, "rows and out must not be null");
    if (index >= rows->rows.size()) throw spd::Error(spd::ErrorCode::invalid_argument, "row index out of range");
    const auto& r = rows->rows[index];
    *out = spd_row{r.case_name.c_str(), r.spd_path_length, r.me_path_length, r.baseline, r.difference_ratio,
                   r.spd_uniformity,    r.me_uniformity,   r.spd_peak_density, r.a,     r.b,
                   r.n,                 r.trial_min_path_length, r.converged ? 1 : 0, r.degenerate ? 1 : 0};
  });
}

spd_status spd_rows_render(const spd_rows* rows, const char* format, char** text) {
  return guarded([&] {
    require(rows && format && text, "rows, format and text must not be null");
    *text = copy_string(spd::emit_report(rows->rows, spd::report_format_from_string(format)));
  });
}

spd_status spd_rows_from_json(const char* json, spd_rows** out) {
  return guarded([&] {
    require(json && out, "json and out must not be null");
    *out = nullptr;
    *out = new spd_rows{spd::rows_from_json(json)};
  });
}

void spd_rows_free(spd_rows* rows) { delete rows; }

}  // extern "C"
