#pragma once

// CSV and JSON forms of the library's value types. Reals are written with
// 17 significant digits so that values round-trip exactly.

#include <string>
#include <string_view>

#include <json.hpp>

#include "spd/density.hpp"
#include "spd/direct_solver.hpp"
#include "spd/euler_lagrange.hpp"
#include "spd/experiments.hpp"
#include "spd/optimizer.hpp"
#include "spd/reference.hpp"

namespace spd {

using Json = nlohmann::ordered_json;

/// Header `cell,midpoint,density`, cells numbered from 1.
std::string density_to_csv(const PiecewiseDensity& density);
/// The CSV carries midpoints only, so the interval is supplied by the caller.
PiecewiseDensity density_from_csv(std::string_view text, const Interval& interval);

Json to_json(const PiecewiseDensity& density);
PiecewiseDensity density_from_json(const Json& j);

Json to_json(const MultiplierVector& multipliers);
MultiplierVector multipliers_from_json(const Json& j);

Json to_json(const opt::SolveDiagnostics& diagnostics);
opt::SolveDiagnostics diagnostics_from_json(const Json& j);

Json to_json(const SolveReport& report);

/// `{kind, a, b, params}`; a and b are null for the normal.
Json to_json(const ReferenceDistribution& dist);
ReferenceDistribution reference_from_json(const Json& j);

/// Full-precision row; see emit_report for the 6-digit table form.
Json to_json(const ComparisonRow& row);
ComparisonRow row_from_json(const Json& j);

/// `{name, a, b, n, moments: [...], sweep: [[a, b], ...]}`. The reference
/// kind follows from the moment order unless `reference` is given.
Json to_json(const CaseSpec& spec);
CaseSpec case_from_json(const Json& j);

/// Trace rows as CSV lines, matching trace_csv_header().
std::string trace_csv_header();
std::string trace_csv_line(const opt::TraceRow& row);

/// %.17g
std::string format_real(double value);

}  // namespace spd
