// Exercises the shared library through its C header only.
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "spd/spd.h"

using doctest::Approx;

namespace {

std::string take(char* text) {
  std::string s = text ? text : "";
  spd_free_string(text);
  return s;
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::strlen(spd_version()) > 0);
  CHECK(std::string(spd_status_name(SPD_OK)) == "ok");
  CHECK(std::string(spd_status_name(SPD_ERR_INFEASIBLE)) == "infeasible");
  CHECK(std::string(spd_status_name(static_cast<spd_status>(42))) == "unknown");
}

TEST_CASE("a direct solve matches the dual oracle") {
  const double mu[] = {1.0, 0.04};
  spd_report* report = nullptr;
  REQUIRE(spd_solve(0.0, 0.1, 200, mu, 2, SPD_SOLVER_DIRECT, &report) == SPD_OK);
  spd_summary s{};
  REQUIRE(spd_report_summary(report, &s) == SPD_OK);
  const auto exact = oracle::dual_spd(0.0, 0.1, 200, {1.0, 0.04});
  CHECK(s.converged == 1);
  CHECK(s.path_length == Approx(exact.length).epsilon(1e-9));
  CHECK(s.max_equality_violation <= 1e-8);
  CHECK(s.uniformity_index == Approx(std::sqrt(1.01) / s.path_length));

  size_t size = 0;
  CHECK(spd_report_density(report, nullptr, 0, &size) == SPD_OK);
  CHECK(size == 200);
  std::vector<double> values(10);
  CHECK(spd_report_density(report, values.data(), values.size(), &size) == SPD_OK);
  CHECK(size == 200);
  CHECK(values[0] == Approx(exact.f[0]).epsilon(1e-3));
  CHECK(s.peak_density >= values[0]);

  char* json = nullptr;
  REQUIRE(spd_report_json(report, &json) == SPD_OK);
  const std::string j = take(json);
  CHECK(j.find("\"path_length\"") != std::string::npos);
  char* csv = nullptr;
  REQUIRE(spd_report_density_csv(report, &csv) == SPD_OK);
  CHECK(take(csv).rfind("cell,midpoint,density\n1,", 0) == 0);
  spd_report_free(report);
}

TEST_CASE("errors map to status codes and a message") {
  spd_report* report = nullptr;
  const double bad_mean[] = {1.0, 0.2};
  CHECK(spd_solve(0.0, 0.1, 50, bad_mean, 2, SPD_SOLVER_DIRECT, &report) == SPD_ERR_INFEASIBLE);
  CHECK(report == nullptr);
  CHECK(std::string(spd_last_error()).size() > 0);

  const double ok[] = {1.0};
  CHECK(spd_solve(1.0, 0.0, 50, ok, 1, SPD_SOLVER_DIRECT, &report) == SPD_ERR_INVALID_ARGUMENT);
  CHECK(spd_solve(0.0, 1.0, 50, nullptr, 1, SPD_SOLVER_DIRECT, &report) == SPD_ERR_INVALID_ARGUMENT);
  CHECK(spd_solve(0.0, 1.0, 50, ok, 1, SPD_SOLVER_DIRECT, nullptr) == SPD_ERR_INVALID_ARGUMENT);
  const double unnormalized[] = {2.0};
  CHECK(spd_solve(0.0, 1.0, 50, unnormalized, 1, SPD_SOLVER_DIRECT, &report) == SPD_ERR_INVALID_ARGUMENT);

  spd_summary s{};
  CHECK(spd_report_summary(nullptr, &s) == SPD_ERR_INVALID_ARGUMENT);

  double length = 0.0;
  const double var_too_big[] = {1.0, 0.0, 0.02};
  CHECK(spd_reference_path_length(-0.1, 0.1, var_too_big, 3, &length) == SPD_ERR_INFEASIBLE);
  spd_case* c = nullptr;
  CHECK(spd_case_preset("cauchy", &c) == SPD_ERR_INVALID_ARGUMENT);
  CHECK(spd_case_from_json("{not json", &c) == SPD_ERR_IO);
  spd_rows* rows = nullptr;
  CHECK(spd_rows_from_json("[1, 2", &rows) == SPD_ERR_IO);

  // Freeing null handles is a no-op.
  spd_report_free(nullptr);
  spd_case_free(nullptr);
  spd_rows_free(nullptr);
  spd_free_string(nullptr);
}

TEST_CASE("the last error is per thread") {
  const double bad[] = {1.0, 0.2};
  spd_report* report = nullptr;
  REQUIRE(spd_solve(0.0, 0.1, 50, bad, 2, SPD_SOLVER_DIRECT, &report) != SPD_OK);
  const std::string here = spd_last_error();
  std::string there;
  std::thread t([&] {
    there = spd_last_error();
  });
  t.join();
  CHECK(there.empty());
  CHECK(std::string(spd_last_error()) == here);
}

TEST_CASE("reference helpers") {
  const double mu[] = {1.0, 0.0, 0.001};
  char* json = nullptr;
  REQUIRE(spd_reference_json(-0.1, 0.1, mu, 3, &json) == SPD_OK);
  const std::string j = take(json);
  CHECK(j.find("scaled_beta") != std::string::npos);
  double length = 0.0;
  REQUIRE(spd_reference_path_length(-0.1, 0.1, mu, 3, &length) == SPD_OK);
  CHECK(length == Approx(oracle::beta_arc_length(-0.1, 0.1, 4.5, 4.5)).epsilon(1e-9));
}

TEST_CASE("cases, sweeps and row sets") {
  CHECK(spd_preset_count() == 4);
  CHECK(std::string(spd_preset_name(2)) == "bell");
  CHECK(spd_preset_name(4) == nullptr);

  spd_case* c = nullptr;
  const double mu[] = {1.0, 0.04};
  REQUIRE(spd_case_create("mine", 0.0, 0.1, mu, 2, 100, &c) == SPD_OK);
  double a = -1, b = -1;
  CHECK(spd_case_interval(c, &a, &b) == SPD_OK);
  CHECK(a == 0.0);
  CHECK(b == 0.1);

  spd_run_options opts;
  spd_run_options_init(&opts);
  CHECK(opts.solver == SPD_SOLVER_DIRECT);
  CHECK(opts.jobs == 1);

  spd_rows* rows = nullptr;
  REQUIRE(spd_case_run(c, &opts, &rows) == SPD_OK);
  REQUIRE(spd_rows_count(rows) == 1);
  spd_row row{};
  REQUIRE(spd_rows_get(rows, 0, &row) == SPD_OK);
  CHECK(std::string(row.case_name) == "mine");
  CHECK(row.converged == 1);
  CHECK(row.n == 100);
  CHECK(row.difference_ratio == Approx((row.me_path_length - row.baseline) / (row.spd_path_length - row.baseline)));
  CHECK(std::isnan(row.trial_min_path_length));
  CHECK(spd_rows_get(rows, 1, &row) == SPD_ERR_INVALID_ARGUMENT);

  REQUIRE(spd_case_add_sweep_interval(c, 0.0, 0.2) == SPD_OK);
  REQUIRE(spd_case_add_sweep_interval(c, 0.0, 0.4) == SPD_OK);
  CHECK(spd_case_add_sweep_interval(c, 0.05, 0.4) == SPD_ERR_INFEASIBLE);
  spd_rows* sweep = nullptr;
  opts.jobs = 2;
  REQUIRE(spd_case_sweep(c, &opts, &sweep) == SPD_OK);
  CHECK(spd_rows_count(sweep) == 2);
  spd_row first{}, second{};
  spd_rows_get(sweep, 0, &first);
  spd_rows_get(sweep, 1, &second);
  CHECK(std::string(first.case_name) == "mine_1");
  CHECK(second.spd_peak_density > first.spd_peak_density);

  REQUIRE(spd_rows_append(rows, sweep) == SPD_OK);
  CHECK(spd_rows_count(rows) == 3);

  char* json = nullptr;
  REQUIRE(spd_rows_render(rows, "json", &json) == SPD_OK);
  const std::string j = take(json);
  spd_rows* back = nullptr;
  REQUIRE(spd_rows_from_json(j.c_str(), &back) == SPD_OK);
  CHECK(spd_rows_count(back) == 3);
  char* again = nullptr;
  REQUIRE(spd_rows_render(back, "json", &again) == SPD_OK);
  CHECK(take(again) == j);
  char* md = nullptr;
  CHECK(spd_rows_render(rows, "yaml", &md) == SPD_ERR_INVALID_ARGUMENT);

  CHECK(spd_case_clear_sweep(c) == SPD_OK);
  char* cj = nullptr;
  REQUIRE(spd_case_to_json(c, &cj) == SPD_OK);
  spd_case* copy = nullptr;
  REQUIRE(spd_case_from_json(take(cj).c_str(), &copy) == SPD_OK);
  CHECK(spd_case_interval(copy, &a, &b) == SPD_OK);
  CHECK(b == 0.1);

  spd_rows* empty = nullptr;
  REQUIRE(spd_rows_create(&empty) == SPD_OK);
  char* csv = nullptr;
  REQUIRE(spd_rows_render(empty, "csv", &csv) == SPD_OK);
  const std::string header_only = take(csv);
  CHECK(header_only.rfind("case,", 0) == 0);
  CHECK(std::count(header_only.begin(), header_only.end(), '\n') == 1);

  spd_rows_free(empty);
  spd_rows_free(back);
  spd_rows_free(sweep);
  spd_rows_free(rows);
  spd_case_free(copy);
  spd_case_free(c);
}

TEST_CASE("run options write artifacts") {
  const auto dir = std::filesystem::temp_directory_path() / "spd_test_capi_out";
  std::filesystem::remove_all(dir);
  const std::string dir_s = dir.string();
  spd_case* c = nullptr;
  REQUIRE(spd_case_preset("uniform", &c) == SPD_OK);
  spd_run_options opts;
  spd_run_options_init(&opts);
  opts.out_dir = dir_s.c_str();
  opts.trial_count = 5;
  opts.seed = 3;
  spd_rows* rows = nullptr;
  REQUIRE(spd_case_run(c, &opts, &rows) == SPD_OK);
  spd_row row{};
  spd_rows_get(rows, 0, &row);
  CHECK(row.degenerate == 1);
  CHECK(row.trial_min_path_length >= row.spd_path_length - 1e-6);
  CHECK(std::filesystem::exists(dir / "uniform_overlay.svg"));
  CHECK(std::filesystem::exists(dir / "uniform_report.json"));
  spd_rows_free(rows);
  spd_case_free(c);
  std::filesystem::remove_all(dir);
}

TEST_CASE("the lambda route through the C API") {
  const double mu[] = {1.0, 0.04};
  spd_report* report = nullptr;
  REQUIRE(spd_solve(0.0, 0.1, 200, mu, 2, SPD_SOLVER_LAMBDA, &report) == SPD_OK);
  spd_summary s{};
  REQUIRE(spd_report_summary(report, &s) == SPD_OK);
  CHECK(s.converged == 1);
  CHECK(s.path_length == Approx(oracle::dual_spd(0.0, 0.1, 200, {1.0, 0.04}).length).epsilon(1e-4));
  spd_report_free(report);
}
