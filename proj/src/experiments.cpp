#include "spd/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <mutex>
#include <sstream>

#include "spd/errors.hpp"
#include "spd/serialize.hpp"
#include "spd/svg.hpp"
#include "spd/trial_densities.hpp"

namespace spd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kDegenerateTol = 1e-9;

const char* const kColumns[] = {"case",           "spd_path_length", "me_path_length", "baseline",
                                "difference_ratio", "spd_uniformity", "me_uniformity",  "spd_peak_density",
                                "a",              "b",               "n",              "trial_min_path_length",
                                "flags"};

const char* const kPalette[] = {"#1f4e9c", "#b8312f", "#2e8540", "#8e44ad", "#d35400", "#16a085"};

ReferenceKind kind_for_order(int m) {
  switch (m) {
    case 0: return ReferenceKind::uniform;
    case 1: return ReferenceKind::truncated_exponential;
    case 2: return ReferenceKind::scaled_beta;
    default: throw Error(ErrorCode::unsupported, "cases need m <= 2 so that a maximum-entropy reference exists");
  }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::io, "failed writing " + path.string());
}

/// Serializes trace rows from concurrent solves into one CSV log.
class TraceLog {
 public:
  explicit TraceLog(const std::filesystem::path& path) {
    if (path.empty()) return;
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    out_.open(path, std::ios::app);
    if (!out_) throw Error(ErrorCode::io, "cannot open trace log " + path.string());
    if (fresh) out_ << trace_csv_header();
  }

  std::function<void(const opt::TraceRow&)> sink() {
    if (!out_.is_open()) return {};
    return [this](const opt::TraceRow& row) {
      std::lock_guard<std::mutex> lock(mutex_);
      out_ << trace_csv_line(row);
    };
  }

 private:
  std::ofstream out_;
  std::mutex mutex_;
};

std::string round6(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string flags_text(const ComparisonRow& r) {
  std::string s = r.converged ? "converged" : "failed";
  if (r.degenerate) s += ";degenerate";
  return s;
}

std::vector<std::string> row_cells(const ComparisonRow& r) {
  return {r.case_name,
          round6(r.spd_path_length),
          round6(r.me_path_length),
          round6(r.baseline),
          round6(r.difference_ratio),
          round6(r.spd_uniformity),
          round6(r.me_uniformity),
          round6(r.spd_peak_density),
          round6(r.a),
          round6(r.b),
          std::to_string(r.n),
          round6(r.trial_min_path_length),
          flags_text(r)};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

Json rounded(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::stod(round6(v));
}

std::vector<double> midpoints_of(const Partition& p) { return {p.midpoints().begin(), p.midpoints().end()}; }

PlotSeries density_series(const PiecewiseDensity& d, std::string label, bool dotted, std::string color) {
  return {std::move(label), midpoints_of(d.partition()), {d.values().begin(), d.values().end()}, dotted,
          std::move(color)};
}

struct StageArtifacts {
  std::string stem;
  bool write = false;
};

}  // namespace

CaseSpec make_case(std::string name, Interval interval, MomentSpec moments, std::size_t n) {
  CaseSpec spec{std::move(name), interval, std::move(moments), kind_for_order(0), n, {}};
  spec.reference = kind_for_order(spec.moments.order());
  validate_case(spec);
  return spec;
}

void validate_case(const CaseSpec& spec) {
  if (spec.name.empty()) throw Error(ErrorCode::invalid_argument, "case name must not be empty");
  if (spec.name.find_first_of("/\\") != std::string::npos) {
    throw Error(ErrorCode::invalid_argument, "case name must not contain path separators");
  }
  if (spec.reference != kind_for_order(spec.moments.order())) {
    throw Error(ErrorCode::invalid_argument, "reference kind " + to_string(spec.reference) +
                                                 " does not match a moment spec of order " +
                                                 std::to_string(spec.moments.order()));
  }
  if (spec.n < static_cast<std::size_t>(spec.moments.order()) + 2) {
    throw Error(ErrorCode::invalid_argument, "n must be at least m + 2");
  }
  spec.moments.require_attainable(spec.interval);
  for (const auto& iv : spec.sweep) spec.moments.require_attainable(iv);
}

RatioResult difference_ratio(double me_path_length, double spd_path_length, double baseline) {
  const double num = me_path_length - baseline;
  const double den = spd_path_length - baseline;
  if (std::abs(num) < kDegenerateTol && std::abs(den) < kDegenerateTol) return {1.0, true};
  if (!(den > kDegenerateTol)) return {kNaN, false};
  return {num / den, false};
}

namespace {

CaseResult run_stage(const CaseSpec& spec, const RunOptions& options, const opt::SolverConfig& config,
                     const StageArtifacts& artifacts) {
  const Partition partition(spec.interval, spec.n);
  const SpdProblem problem(partition, spec.moments);

  CaseResult result{ComparisonRow{}, std::nullopt, match_reference(spec.interval, spec.moments), {}, std::nullopt};
  ComparisonRow& row = result.row;
  row.case_name = artifacts.stem;
  row.a = spec.interval.lower();
  row.b = spec.interval.upper();
  row.n = spec.n;
  row.baseline = straight_line_length(spec.interval);
  row.trial_min_path_length = kNaN;

  Json solve_json;
  if (options.route == SolverRoute::direct) {
    auto report = solve_spd(problem, config);
    result.diagnostics = report.diagnostics;
    solve_json = to_json(report);
    result.spd = std::move(report.density);
  } else {
    auto fit = fit_multipliers(spec.moments, partition, initial_multipliers(spec.moments.order(), spec.interval),
                               config);
    result.diagnostics = fit.diagnostics;
    result.multipliers = fit.multipliers;
    solve_json["multipliers"] = to_json(fit.multipliers);
    solve_json["residual_objective"] = fit.residual_objective;
    try {
      result.spd = induced_density(fit.multipliers, partition);
      solve_json["density"] = to_json(*result.spd);
      solve_json["path_length"] = path_length(*result.spd);
    } catch (const PointError& e) {
      result.diagnostics.converged = false;
      result.diagnostics.message = e.what();
    }
    solve_json["diagnostics"] = to_json(result.diagnostics);
  }
  row.converged = result.diagnostics.converged && result.spd.has_value();

  row.me_path_length = reference_path_length(result.reference);
  row.me_uniformity = row.baseline / row.me_path_length;
  if (result.spd) {
    row.spd_path_length = path_length(*result.spd);
    row.spd_uniformity = uniformity_index(*result.spd);
    row.spd_peak_density = result.spd->peak();
  } else {
    row.spd_path_length = row.spd_uniformity = row.spd_peak_density = kNaN;
  }
  if (row.converged) {
    const auto ratio = difference_ratio(row.me_path_length, row.spd_path_length, row.baseline);
    row.difference_ratio = ratio.value;
    row.degenerate = ratio.degenerate;
  } else {
    row.difference_ratio = kNaN;
  }

  if (options.trial_count > 0) {
    const auto trials = sample_feasible_densities(partition, spec.moments, options.trial_count, options.seed);
    row.trial_min_path_length = std::numeric_limits<double>::infinity();
    for (const auto& t : trials) row.trial_min_path_length = std::min(row.trial_min_path_length, path_length(t));
  }

  if (artifacts.write) {
    const auto& dir = options.out_dir;
    const auto me = reference_density_on(partition, result.reference);
    if (result.spd) write_file(dir / (artifacts.stem + "_spd.csv"), density_to_csv(*result.spd));
    write_file(dir / (artifacts.stem + "_me.csv"), density_to_csv(me));

    std::vector<PlotSeries> series;
    if (result.spd) series.push_back(density_series(*result.spd, "SPD", false, kPalette[0]));
    series.push_back(density_series(me, "ME (" + to_string(result.reference.kind()) + ")", true, kPalette[1]));
    PlotOptions plot;
    plot.title = spec.name + " on [" + round6(row.a) + ", " + round6(row.b) + "]";
    plot.x_range = {row.a, row.b};
    write_file(dir / (artifacts.stem + "_overlay.svg"), render_line_plot(series, plot));

    Json report;
    report["case"] = to_json(spec);
    report["row"] = to_json(row);
    report["reference"] = to_json(result.reference);
    report["solve"] = std::move(solve_json);
    write_file(dir / (artifacts.stem + "_report.json"), report.dump(2) + "\n");
  }
  return result;
}

opt::SolverConfig traced(const RunOptions& options, TraceLog& log) {
  opt::SolverConfig cfg = options.config;
  if (auto sink = log.sink()) {
    if (cfg.trace) {
      auto user = cfg.trace;
      cfg.trace = [user, sink](const opt::TraceRow& r) {
        user(r);
        sink(r);
      };
    } else {
      cfg.trace = sink;
    }
  }
  return cfg;
}

}  // namespace

CaseResult run_case_detailed(const CaseSpec& spec, const RunOptions& options) {
  validate_case(spec);
  if (!options.out_dir.empty()) std::filesystem::create_directories(options.out_dir);
  TraceLog log(options.trace_path);
  return run_stage(spec, options, traced(options, log), {spec.name, !options.out_dir.empty()});
}

ComparisonRow run_case(const CaseSpec& spec, const RunOptions& options) {
  return run_case_detailed(spec, options).row;
}

std::vector<CaseResult> run_bound_sweep_detailed(const CaseSpec& spec, const RunOptions& options) {
  validate_case(spec);
  const std::vector<Interval> intervals = spec.sweep.empty() ? std::vector<Interval>{spec.interval} : spec.sweep;
  const bool write = !options.out_dir.empty();
  if (write) std::filesystem::create_directories(options.out_dir);
  TraceLog log(options.trace_path);
  const opt::SolverConfig cfg = traced(options, log);

  std::vector<CaseSpec> stages;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    CaseSpec s = spec;
    s.interval = intervals[i];
    s.sweep.clear();
    const double scale = intervals[i].length() / spec.interval.length();
    s.n = std::max<std::size_t>(static_cast<std::size_t>(std::llround(static_cast<double>(spec.n) * scale)),
                                static_cast<std::size_t>(spec.moments.order()) + 2);
    stages.push_back(std::move(s));
  }
  auto stem = [&](std::size_t i) { return intervals.size() == 1 ? spec.name : spec.name + "_" + std::to_string(i + 1); };
  auto run_one = [&](std::size_t i) {
    RunOptions opts = options;
    opts.seed = options.seed + i;
    return run_stage(stages[i], opts, cfg, {stem(i), write});
  };

  std::vector<std::optional<CaseResult>> slots(stages.size());
  const std::size_t jobs = std::max(1u, options.jobs);
  for (std::size_t start = 0; start < stages.size(); start += jobs) {
    const std::size_t stop = std::min(stages.size(), start + jobs);
    if (jobs == 1) {
      slots[start] = run_one(start);
      continue;
    }
    std::vector<std::future<CaseResult>> batch;
    for (std::size_t i = start; i < stop; ++i) batch.push_back(std::async(std::launch::async, run_one, i));
    for (std::size_t i = start; i < stop; ++i) slots[i] = batch[i - start].get();
  }
  std::vector<CaseResult> results;
  for (auto& s : slots) results.push_back(std::move(*s));

  if (write) {
    std::vector<PlotSeries> series;
    double x_max = spec.interval.upper(), x_min = spec.interval.lower();
    for (std::size_t i = 0; i < results.size(); ++i) {
      x_min = std::min(x_min, intervals[i].lower());
      x_max = std::max(x_max, intervals[i].upper());
      if (!results[i].spd) continue;
      series.push_back(density_series(*results[i].spd, "SPD [" + round6(intervals[i].lower()) + ", " +
                                                           round6(intervals[i].upper()) + "]",
                                      false, kPalette[i % std::size(kPalette)]));
    }
    // The unbounded maximum-entropy density for the same constraints.
    const int m = spec.moments.order();
    if (m == 1 || m == 2) {
      PlotSeries me{m == 1 ? "ME (exponential)" : "ME (normal)", {}, {}, true, "#555555"};
      const auto normal = m == 2 ? std::optional(ReferenceDistribution::normal(spec.moments.mean(), spec.moments.variance()))
                                 : std::nullopt;
      const double theta = spec.moments.mean() - x_min;
      constexpr int samples = 400;
      for (int k = 0; k <= samples; ++k) {
        const double x = x_min + (x_max - x_min) * k / samples;
        me.x.push_back(x);
        me.y.push_back(m == 2 ? normal->density(x) : std::exp(-(x - x_min) / theta) / theta);
      }
      series.push_back(std::move(me));
    }
    PlotOptions plot;
    plot.title = spec.name + " bound sweep";
    plot.x_range = {x_min, x_max};
    write_file(options.out_dir / (spec.name + "_sweep_overlay.svg"), render_line_plot(series, plot));

    Json report;
    report["case"] = to_json(spec);
    Json rows = Json::array();
    for (const auto& r : results) rows.push_back(to_json(r.row));
    report["rows"] = std::move(rows);
    write_file(options.out_dir / (spec.name + "_sweep_report.json"), report.dump(2) + "\n");
  }
  return results;
}

std::vector<ComparisonRow> run_bound_sweep(const CaseSpec& spec, const RunOptions& options) {
  std::vector<ComparisonRow> rows;
  for (auto& r : run_bound_sweep_detailed(spec, options)) rows.push_back(std::move(r.row));
  return rows;
}

ReportFormat report_format_from_string(const std::string& name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  if (name == "markdown" || name == "md") return ReportFormat::markdown;
  throw Error(ErrorCode::invalid_argument, "unknown report format '" + name + "' (csv, json, markdown)");
}

std::string emit_report(const std::vector<ComparisonRow>& rows, ReportFormat format) {
  std::string out;
  switch (format) {
    case ReportFormat::csv: {
      for (std::size_t c = 0; c < std::size(kColumns); ++c) out += (c ? "," : "") + std::string(kColumns[c]);
      out += '\n';
      for (const auto& r : rows) {
        const auto cells = row_cells(r);
        for (std::size_t c = 0; c < cells.size(); ++c) out += (c ? "," : "") + csv_field(cells[c]);
        out += '\n';
      }
      return out;
    }
    case ReportFormat::markdown: {
      out += "|";
      for (const char* c : kColumns) out += std::string(" ") + c + " |";
      out += "\n|";
      for (std::size_t c = 0; c < std::size(kColumns); ++c) out += "---|";
      out += '\n';
      for (const auto& r : rows) {
        out += "|";
        for (const auto& cell : row_cells(r)) out += " " + cell + " |";
        out += '\n';
      }
      return out;
    }
    case ReportFormat::json: {
      Json doc;
      doc["columns"] = std::vector<std::string>(std::begin(kColumns), std::end(kColumns));
      Json list = Json::array();
      for (const auto& r : rows) {
        Json j = to_json(r);
        for (const char* key : {"spd_path_length", "me_path_length", "baseline", "difference_ratio", "spd_uniformity",
                                "me_uniformity", "spd_peak_density", "a", "b", "trial_min_path_length"}) {
          j[key] = rounded(j[key].is_null() ? kNaN : j[key].get<double>());
        }
        list.push_back(std::move(j));
      }
      doc["rows"] = std::move(list);
      return doc.dump(2) + "\n";
    }
  }
  return out;
}

std::vector<ComparisonRow> rows_from_json(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::io, std::string("malformed JSON: ") + e.what());
  }
  std::vector<ComparisonRow> rows;
  if (doc.is_array()) {
    for (const auto& r : doc) rows.push_back(row_from_json(r));
  } else if (doc.is_object() && doc.contains("rows")) {
    for (const auto& r : doc.at("rows")) rows.push_back(row_from_json(r));
  } else if (doc.is_object() && doc.contains("row")) {
    rows.push_back(row_from_json(doc.at("row")));
  } else {
    throw Error(ErrorCode::io, "JSON holds no comparison rows");
  }
  return rows;
}

CaseSpec preset_case(const std::string& name) {
  if (name == "uniform") {
    const Interval iv(0.0, 1.0);
    return make_case(name, iv, MomentSpec({1.0}, iv));
  }
  if (name == "texp") {
    const Interval iv(0.0, 0.1);
    return make_case(name, iv, MomentSpec({1.0, 0.04}, iv));
  }
  if (name == "bell" || name == "bowl") {
    const Interval iv(-0.1, 0.1);
    return make_case(name, iv, MomentSpec::from_mean_variance(0.0, name == "bell" ? 0.001 : 0.005, iv));
  }
  throw Error(ErrorCode::invalid_argument, "unknown preset '" + name + "' (uniform, texp, bell, bowl)");
}

std::vector<std::string> preset_names() { return {"uniform", "texp", "bell", "bowl"}; }

CaseSpec preset_sweep(const std::string& name) {
  if (name == "texp") {
    CaseSpec spec = preset_case(name);
    for (double b : {0.1, 0.2, 0.4, 0.8}) spec.sweep.emplace_back(0.0, b);
    validate_case(spec);
    return spec;
  }
  if (name == "bell") {
    CaseSpec spec = preset_case(name);
    for (double h : {0.1, 0.2, 0.4}) spec.sweep.emplace_back(-h, h);
    validate_case(spec);
    return spec;
  }
  throw Error(ErrorCode::invalid_argument, "unknown sweep preset '" + name + "' (texp, bell)");
}

}  // namespace spd
