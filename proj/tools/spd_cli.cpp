// Command-line driver. Talks to the library only through the C interface.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "spd/spd.h"

namespace {

struct CaseDeleter {
  void operator()(spd_case* c) const { spd_case_free(c); }
};
struct RowsDeleter {
  void operator()(spd_rows* r) const { spd_rows_free(r); }
};
using CasePtr = std::unique_ptr<spd_case, CaseDeleter>;
using RowsPtr = std::unique_ptr<spd_rows, RowsDeleter>;

struct CliFailure {
  int exit_code;
  std::string message;
};

void check(spd_status status) {
  if (status != SPD_OK) throw CliFailure{1, std::string(spd_status_name(status)) + ": " + spd_last_error()};
}

std::string take(char* text) {
  std::string out(text);
  spd_free_string(text);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliFailure{1, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct RunFlags {
  std::string out_dir;
  std::string trace;
  std::string format = "markdown";
  std::string solver = "direct";
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  unsigned jobs = 1;
};

spd_run_options to_options(const RunFlags& f) {
  spd_run_options o;
  spd_run_options_init(&o);
  o.solver = f.solver == "lambda" ? SPD_SOLVER_LAMBDA : SPD_SOLVER_DIRECT;
  o.out_dir = f.out_dir.empty() ? nullptr : f.out_dir.c_str();
  o.trace_path = f.trace.empty() ? nullptr : f.trace.c_str();
  o.seed = f.seed;
  o.trial_count = f.trials;
  o.jobs = f.jobs;
  return o;
}

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--out-dir", f.out_dir, "Directory for CSV, SVG and JSON artifacts");
  cmd->add_option("--format", f.format, "Table format")->check(CLI::IsMember({"csv", "json", "markdown"}));
  cmd->add_option("--trace", f.trace, "Append per-iteration merit values to this CSV file");
  cmd->add_option("--seed", f.seed, "Seed for the random trial densities");
  cmd->add_option("--trials", f.trials, "Number of random feasible trial densities to compare against");
  cmd->add_option("--solver", f.solver, "Solver route")->check(CLI::IsMember({"direct", "lambda"}));
}

/// Prints the table and returns 3 when some row did not converge.
int print_rows(const spd_rows* rows, const std::string& format) {
  char* text = nullptr;
  check(spd_rows_render(rows, format.c_str(), &text));
  std::cout << take(text);
  int code = 0;
  for (std::size_t i = 0; i < spd_rows_count(rows); ++i) {
    spd_row row;
    check(spd_rows_get(rows, i, &row));
    if (!row.converged) {
      std::cerr << "warning: " << row.case_name << " did not converge; no difference ratio reported\n";
      code = 3;
    }
  }
  return code;
}

CasePtr case_from_file(const std::string& path) {
  spd_case* c = nullptr;
  check(spd_case_from_json(read_file(path).c_str(), &c));
  return CasePtr(c);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shortest path distributions: solve, compare with maximum-entropy references, sweep bounds"};
  app.require_subcommand(1);
  app.set_version_flag("--version", spd_version());

  // solve
  RunFlags solve_flags;
  std::string case_file, name = "case";
  std::optional<double> a, b, mean, var;
  std::size_t n = 400;
  auto* solve = app.add_subcommand("solve", "Solve one case given by flags or a JSON case file");
  solve->add_option("case", case_file, "JSON case file")->check(CLI::ExistingFile);
  solve->add_option("--name", name, "Case name used for artifact files");
  solve->add_option("--a", a, "Lower bound");
  solve->add_option("--b", b, "Upper bound");
  solve->add_option("--mean", mean, "Target mean (first raw moment)");
  solve->add_option("--var", var, "Target variance; the second raw moment is var + mean^2");
  solve->add_option("--n", n, "Number of grid cells")->check(CLI::PositiveNumber);
  add_run_flags(solve, solve_flags);

  // presets
  RunFlags preset_flags;
  std::vector<std::string> preset_list;
  auto* presets = app.add_subcommand("presets", "Run the preset cases (uniform, texp, bell, bowl)");
  presets->add_option("names", preset_list, "Subset of presets to run");
  add_run_flags(presets, preset_flags);

  // sweep
  RunFlags sweep_flags;
  std::string sweep_target;
  std::vector<double> uppers;
  auto* sweep = app.add_subcommand("sweep", "Bound sweep for a preset (texp, bell) or a JSON case with a sweep list");
  sweep->add_option("target", sweep_target, "Sweep preset name or JSON case file")->required();
  sweep->add_option("--bounds", uppers,
                    "Replace the sweep: upper bounds for one-sided cases, half-widths for symmetric ones")
      ->delimiter(',');
  sweep->add_option("--jobs", sweep_flags.jobs, "Concurrent solves")->check(CLI::PositiveNumber);
  add_run_flags(sweep, sweep_flags);

  // report
  std::string report_file, report_format = "markdown";
  auto* report = app.add_subcommand("report", "Re-render saved results (report or sweep JSON)");
  report->add_option("file", report_file, "JSON file written by a previous run")->required()->check(CLI::ExistingFile);
  report->add_option("--format", report_format, "Table format")->check(CLI::IsMember({"csv", "json", "markdown"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version come through here with a success code.
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*solve) {
      CasePtr spec;
      if (!case_file.empty()) {
        if (a || b || mean || var) throw CliFailure{2, "give either a case file or --a/--b/--mean/--var, not both"};
        spec = case_from_file(case_file);
      } else {
        if (!a || !b) throw CliFailure{2, "--a and --b are required without a case file"};
        if (var && !mean) throw CliFailure{2, "--var needs --mean"};
        std::vector<double> moments{1.0};
        if (mean) moments.push_back(*mean);
        if (var) moments.push_back(*var + *mean * *mean);
        spd_case* c = nullptr;
        check(spd_case_create(name.c_str(), *a, *b, moments.data(), moments.size(), n, &c));
        spec.reset(c);
      }
      const auto opts = to_options(solve_flags);
      spd_rows* rows = nullptr;
      check(spd_case_run(spec.get(), &opts, &rows));
      RowsPtr hold(rows);
      return print_rows(rows, solve_flags.format);
    }

    if (*presets) {
      if (preset_list.empty()) {
        for (std::size_t i = 0; i < spd_preset_count(); ++i) preset_list.emplace_back(spd_preset_name(i));
      }
      const auto opts = to_options(preset_flags);
      spd_rows* all = nullptr;
      check(spd_rows_create(&all));
      RowsPtr hold(all);
      for (const auto& p : preset_list) {
        spd_case* c = nullptr;
        check(spd_case_preset(p.c_str(), &c));
        CasePtr spec(c);
        spd_rows* rows = nullptr;
        check(spd_case_run(spec.get(), &opts, &rows));
        RowsPtr one(rows);
        check(spd_rows_append(all, rows));
      }
      return print_rows(all, preset_flags.format);
    }

    if (*sweep) {
      CasePtr spec;
      spd_case* c = nullptr;
      if (spd_case_sweep_preset(sweep_target.c_str(), &c) == SPD_OK) {
        spec.reset(c);
      } else if (std::ifstream(sweep_target).good()) {
        spec = case_from_file(sweep_target);
      } else {
        throw CliFailure{2, "unknown sweep target '" + sweep_target + "' (texp, bell or a JSON case file)"};
      }
      if (!uppers.empty()) {
        check(spd_case_clear_sweep(spec.get()));
        double lo = 0.0, hi = 0.0;
        check(spd_case_interval(spec.get(), &lo, &hi));
        const bool symmetric = std::abs(lo + hi) <= 1e-12 * std::max(1.0, hi);
        for (double u : uppers) check(spd_case_add_sweep_interval(spec.get(), symmetric ? -u : lo, u));
      }
      const auto opts = to_options(sweep_flags);
      spd_rows* rows = nullptr;
      check(spd_case_sweep(spec.get(), &opts, &rows));
      RowsPtr hold(rows);
      return print_rows(rows, sweep_flags.format);
    }

    if (*report) {
      spd_rows* rows = nullptr;
      check(spd_rows_from_json(read_file(report_file).c_str(), &rows));
      RowsPtr hold(rows);
      char* text = nullptr;
      check(spd_rows_render(rows, report_format.c_str(), &text));
      std::cout << take(text);
      return 0;
    }
  } catch (const CliFailure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.exit_code;
  }
  return 0;
}
