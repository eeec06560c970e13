#include "spd/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "spd/errors.hpp"

namespace spd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Json real_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double real_from(const Json& j) {
  if (j.is_null()) return kNaN;
  if (!j.is_number()) throw Error(ErrorCode::io, "expected a number in JSON input");
  return j.get<double>();
}

template <class F>
auto parse_guard(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::io, std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string density_to_csv(const PiecewiseDensity& density) {
  std::string out = "cell,midpoint,density\n";
  const auto& part = density.partition();
  for (std::size_t i = 0; i < density.size(); ++i) {
    out += std::to_string(i + 1);
    out += ',';
    out += format_real(part.midpoint(i));
    out += ',';
    out += format_real(density[i]);
    out += '\n';
  }
  return out;
}

PiecewiseDensity density_from_csv(std::string_view text, const Interval& interval) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("cell,midpoint,density", 0) != 0) {
    throw Error(ErrorCode::io, "density CSV must start with the header cell,midpoint,density");
  }
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::size_t cell = 0;
    double mid = 0.0, value = 0.0;
    if (std::sscanf(line.c_str(), "%zu,%lf,%lf", &cell, &mid, &value) != 3) {
      throw Error(ErrorCode::io, "malformed density CSV line: " + line);
    }
    if (cell != values.size() + 1) throw Error(ErrorCode::io, "density CSV cells must be numbered 1..n in order");
    values.push_back(value);
  }
  if (values.empty()) throw Error(ErrorCode::io, "density CSV has no rows");
  Partition partition(interval, values.size());
  return PiecewiseDensity(std::move(partition), std::move(values));
}

Json to_json(const PiecewiseDensity& density) {
  const auto& iv = density.interval();
  Json j;
  j["a"] = iv.lower();
  j["b"] = iv.upper();
  j["n"] = density.size();
  j["values"] = std::vector<double>(density.values().begin(), density.values().end());
  return j;
}

PiecewiseDensity density_from_json(const Json& j) {
  return parse_guard([&] {
    auto values = j.at("values").get<std::vector<double>>();
    const auto n = j.at("n").get<std::size_t>();
    if (n != values.size()) throw Error(ErrorCode::io, "density JSON: n does not match the number of values");
    return PiecewiseDensity(Partition(Interval(j.at("a").get<double>(), j.at("b").get<double>()), n),
                            std::move(values));
  });
}

Json to_json(const MultiplierVector& multipliers) {
  Json j;
  j["m"] = multipliers.order();
  j["lambdas"] = std::vector<double>(multipliers.lambdas().begin(), multipliers.lambdas().end());
  return j;
}

MultiplierVector multipliers_from_json(const Json& j) {
  return parse_guard([&] {
    auto l = j.at("lambdas").get<std::vector<double>>();
    if (j.at("m").get<int>() + 1 != static_cast<int>(l.size())) {
      throw Error(ErrorCode::io, "multiplier JSON: m does not match the number of lambdas");
    }
    return MultiplierVector(std::move(l));
  });
}

Json to_json(const opt::SolveDiagnostics& d) {
  Json j;
  j["converged"] = d.converged;
  j["iterations"] = d.iterations;
  j["inner_iterations"] = d.inner_iterations;
  j["objective_value"] = real_or_null(d.objective_value);
  j["max_equality_violation"] = real_or_null(d.max_equality_violation);
  j["kkt_stationarity_residual"] = real_or_null(d.kkt_stationarity_residual);
  j["kkt_complementarity_residual"] = real_or_null(d.kkt_complementarity_residual);
  j["min_reduced_hessian_eigenvalue"] =
      d.min_reduced_hessian_eigenvalue ? real_or_null(*d.min_reduced_hessian_eigenvalue) : Json(nullptr);
  j["final_penalty"] = real_or_null(d.final_penalty);
  j["method"] = d.method_tag;
  j["message"] = d.message;
  return j;
}

opt::SolveDiagnostics diagnostics_from_json(const Json& j) {
  return parse_guard([&] {
    opt::SolveDiagnostics d;
    d.converged = j.at("converged").get<bool>();
    d.iterations = j.at("iterations").get<int>();
    d.inner_iterations = j.at("inner_iterations").get<int>();
    d.objective_value = real_from(j.at("objective_value"));
    d.max_equality_violation = real_from(j.at("max_equality_violation"));
    d.kkt_stationarity_residual = real_from(j.at("kkt_stationarity_residual"));
    d.kkt_complementarity_residual = real_from(j.at("kkt_complementarity_residual"));
    if (!j.at("min_reduced_hessian_eigenvalue").is_null()) {
      d.min_reduced_hessian_eigenvalue = j.at("min_reduced_hessian_eigenvalue").get<double>();
    }
    d.final_penalty = real_from(j.at("final_penalty"));
    d.method_tag = j.at("method").get<std::string>();
    d.message = j.at("message").get<std::string>();
    return d;
  });
}

Json to_json(const SolveReport& report) {
  Json j;
  j["density"] = to_json(report.density);
  j["achieved_moments"] = report.achieved_moments;
  j["path_length"] = report.path_length;
  j["uniformity_index"] = report.uniformity_index;
  j["diagnostics"] = to_json(report.diagnostics);
  return j;
}

Json to_json(const ReferenceDistribution& dist) {
  Json j;
  j["kind"] = to_string(dist.kind());
  if (dist.support()) {
    j["a"] = dist.support()->lower();
    j["b"] = dist.support()->upper();
  } else {
    j["a"] = nullptr;
    j["b"] = nullptr;
  }
  j["params"] = dist.parameters();
  return j;
}

ReferenceDistribution reference_from_json(const Json& j) {
  return parse_guard([&] {
    const auto kind = reference_kind_from_string(j.at("kind").get<std::string>());
    const auto p = j.at("params").get<std::vector<double>>();
    auto need = [&](std::size_t count) {
      if (p.size() != count) throw Error(ErrorCode::io, "reference JSON: wrong number of params");
    };
    if (kind == ReferenceKind::normal) {
      need(2);
      return ReferenceDistribution::normal(p[0], p[1]);
    }
    const Interval iv(j.at("a").get<double>(), j.at("b").get<double>());
    switch (kind) {
      case ReferenceKind::uniform:
        need(0);
        return ReferenceDistribution::uniform(iv);
      case ReferenceKind::truncated_exponential:
        need(1);
        return ReferenceDistribution::truncated_exponential(iv, p[0]);
      default:
        need(2);
        return ReferenceDistribution::scaled_beta(iv, p[0], p[1]);
    }
  });
}

Json to_json(const ComparisonRow& r) {
  Json j;
  j["case"] = r.case_name;
  j["spd_path_length"] = real_or_null(r.spd_path_length);
  j["me_path_length"] = real_or_null(r.me_path_length);
  j["baseline"] = real_or_null(r.baseline);
  j["difference_ratio"] = real_or_null(r.difference_ratio);
  j["spd_uniformity"] = real_or_null(r.spd_uniformity);
  j["me_uniformity"] = real_or_null(r.me_uniformity);
  j["spd_peak_density"] = real_or_null(r.spd_peak_density);
  j["a"] = r.a;
  j["b"] = r.b;
  j["n"] = r.n;
  j["trial_min_path_length"] = real_or_null(r.trial_min_path_length);
  j["converged"] = r.converged;
  j["degenerate"] = r.degenerate;
  return j;
}

ComparisonRow row_from_json(const Json& j) {
  return parse_guard([&] {
    ComparisonRow r;
    r.case_name = j.at("case").get<std::string>();
    r.spd_path_length = real_from(j.at("spd_path_length"));
    r.me_path_length = real_from(j.at("me_path_length"));
    r.baseline = real_from(j.at("baseline"));
    r.difference_ratio = real_from(j.at("difference_ratio"));
    r.spd_uniformity = real_from(j.at("spd_uniformity"));
    r.me_uniformity = real_from(j.at("me_uniformity"));
    r.spd_peak_density = real_from(j.at("spd_peak_density"));
    r.a = j.at("a").get<double>();
    r.b = j.at("b").get<double>();
    r.n = j.at("n").get<std::size_t>();
    r.trial_min_path_length = real_from(j.at("trial_min_path_length"));
    r.converged = j.at("converged").get<bool>();
    r.degenerate = j.at("degenerate").get<bool>();
    return r;
  });
}

Json to_json(const CaseSpec& spec) {
  Json j;
  j["name"] = spec.name;
  j["a"] = spec.interval.lower();
  j["b"] = spec.interval.upper();
  j["n"] = spec.n;
  j["moments"] = std::vector<double>(spec.moments.targets().begin(), spec.moments.targets().end());
  j["reference"] = to_string(spec.reference);
  Json sweep = Json::array();
  for (const auto& iv : spec.sweep) sweep.push_back({iv.lower(), iv.upper()});
  j["sweep"] = std::move(sweep);
  return j;
}

CaseSpec case_from_json(const Json& j) {
  return parse_guard([&] {
    const Interval iv(j.at("a").get<double>(), j.at("b").get<double>());
    std::vector<double> moments;
    if (j.contains("moments")) {
      moments = j.at("moments").get<std::vector<double>>();
    } else {
      // Mean/variance form, as on the command line.
      moments = {1.0};
      if (j.contains("mean")) moments.push_back(j.at("mean").get<double>());
      if (j.contains("var")) {
        if (moments.size() < 2) throw Error(ErrorCode::invalid_argument, "case JSON: var needs a mean");
        moments.push_back(j.at("var").get<double>() + moments[1] * moments[1]);
      }
    }
    const std::size_t n = j.value("n", std::size_t{400});
    CaseSpec spec = make_case(j.value("name", std::string("case")), iv, MomentSpec(std::move(moments), iv), n);
    if (j.contains("reference")) spec.reference = reference_kind_from_string(j.at("reference").get<std::string>());
    if (j.contains("sweep")) {
      for (const auto& s : j.at("sweep")) spec.sweep.emplace_back(s.at(0).get<double>(), s.at(1).get<double>());
    }
    validate_case(spec);
    return spec;
  });
}

std::string trace_csv_header() { return "outer,inner,merit,objective,penalty,max_violation\n"; }

std::string trace_csv_line(const opt::TraceRow& r) {
  return std::to_string(r.outer) + ',' + std::to_string(r.inner) + ',' + format_real(r.merit) + ',' +
         format_real(r.objective) + ',' + format_real(r.penalty) + ',' + format_real(r.max_violation) + '\n';
}

}  // namespace spd
