#pragma once

// Case studies: solve an SPD, build the moment-matched maximum-entropy
// reference, compare CDF lengths, and write CSV/SVG/JSON artifacts.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spd/density.hpp"
#include "spd/direct_solver.hpp"
#include "spd/euler_lagrange.hpp"
#include "spd/optimizer.hpp"
#include "spd/reference.hpp"

namespace spd {

enum class SolverRoute { direct, lambda };

struct CaseSpec {
  std::string name;
  Interval interval;
  MomentSpec moments;
  ReferenceKind reference;
  std::size_t n = 400;
  /// Alternate supports for a bound sweep; empty means just `interval`.
  std::vector<Interval> sweep;
};

/// Builds a case whose reference kind follows from the moment order
/// (uniform, truncated exponential, scaled Beta). Validates attainability.
CaseSpec make_case(std::string name, Interval interval, MomentSpec moments, std::size_t n = 400);

/// Throws unless the reference kind matches the moment order.
void validate_case(const CaseSpec& spec);

struct ComparisonRow {
  std::string case_name;
  double spd_path_length = 0.0;
  double me_path_length = 0.0;
  double baseline = 0.0;
  /// NaN when the solve failed or the ratio is undefined.
  double difference_ratio = 0.0;
  double spd_uniformity = 0.0;
  double me_uniformity = 0.0;
  double spd_peak_density = 0.0;
  double a = 0.0;
  double b = 0.0;
  std::size_t n = 0;
  /// Shortest CDF among the random feasible trial densities (NaN if none ran).
  double trial_min_path_length = 0.0;
  bool converged = false;
  bool degenerate = false;
};

struct RatioResult {
  double value = 0.0;
  bool degenerate = false;
};

/// (me - baseline) / (spd - baseline). When both differences are below 1e-9
/// the ratio is reported as 1 with `degenerate` set; a vanishing denominator
/// alone gives NaN.
RatioResult difference_ratio(double me_path_length, double spd_path_length, double baseline);

struct RunOptions {
  SolverRoute route = SolverRoute::direct;
  opt::SolverConfig config;
  /// Artifacts are written only when this is non-empty.
  std::filesystem::path out_dir;
  /// Per-iteration merit values are appended here when non-empty.
  std::filesystem::path trace_path;
  std::size_t trial_count = 0;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

struct CaseResult {
  ComparisonRow row;
  std::optional<PiecewiseDensity> spd;
  ReferenceDistribution reference;
  opt::SolveDiagnostics diagnostics;
  std::optional<MultiplierVector> multipliers;
};

CaseResult run_case_detailed(const CaseSpec& spec, const RunOptions& options = {});
ComparisonRow run_case(const CaseSpec& spec, const RunOptions& options = {});

/// One row per sweep interval. The grid size scales with the interval
/// length so every stage keeps the base cell width, which makes peak
/// densities comparable across stages.
std::vector<CaseResult> run_bound_sweep_detailed(const CaseSpec& spec, const RunOptions& options = {});
std::vector<ComparisonRow> run_bound_sweep(const CaseSpec& spec, const RunOptions& options = {});

enum class ReportFormat { csv, json, markdown };
ReportFormat report_format_from_string(const std::string& name);

/// Deterministic table; numbers at 6 significant digits.
std::string emit_report(const std::vector<ComparisonRow>& rows, ReportFormat format);

/// Accepts the JSON written by emit_report as well as per-case and sweep
/// report files.
std::vector<ComparisonRow> rows_from_json(const std::string& text);

/// `uniform`, `texp`, `bell`, `bowl`.
CaseSpec preset_case(const std::string& name);
std::vector<std::string> preset_names();

/// `texp` (upper bounds 0.1 .. 0.8) and `bell` (supports +-0.1 .. +-0.4).
CaseSpec preset_sweep(const std::string& name);

}  // namespace spd
