#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "spd/direct_solver.hpp"
#include "spd/errors.hpp"
#include "spd/reference.hpp"
#include "spd/serialize.hpp"
#include "spd/trial_densities.hpp"

using namespace spd;
using doctest::Approx;

namespace {

struct Case {
  const char* name;
  double a, b;
  std::vector<double> mu;
};

const std::vector<Case>& cases() {
  static const std::vector<Case> all = {
      {"uniform", 0.0, 1.0, {1.0}},
      {"texp", 0.0, 0.1, {1.0, 0.04}},
      {"bell", -0.1, 0.1, {1.0, 0.0, 0.001}},
      {"bowl", -0.1, 0.1, {1.0, 0.0, 0.005}},
  };
  return all;
}

SolveReport solve(const Case& c, std::size_t n = 400) {
  const Interval iv(c.a, c.b);
  return solve_spd(SpdProblem(make_partition(iv, n), MomentSpec(c.mu, iv)));
}

double sup_distance(std::span<const double> x, std::span<const double> y) {
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d = std::max(d, std::abs(x[i] - y[i]));
  return d;
}

}  // namespace

TEST_CASE("the four reference cases match the exact discrete minimizer") {
  for (const Case& c : cases()) {
    CAPTURE(c.name);
    const SolveReport r = solve(c);
    REQUIRE(r.diagnostics.converged);
    const oracle::DualSolution exact = oracle::dual_spd(c.a, c.b, 400, c.mu);
    CHECK(exact.max_residual < 1e-12);
    CHECK(r.path_length == Approx(exact.length).epsilon(1e-9));
    // The objective is flat near the optimum, so cell values agree to the
    // square root of the length agreement.
    CHECK(sup_distance(r.density.values(), exact.f) < 1e-3 * std::max(1.0, r.density.peak()));
  }
}

TEST_CASE("a wide support pushes mass into the first cell") {
  // With mean 0.04 on [0, 0.2] the minimizer is nearly flat plus an atom at a,
  // which the grid resolves as one tall cell.
  const Case wide{"wide", 0.0, 0.2, {1.0, 0.04}};
  const SolveReport r = solve(wide, 800);
  REQUIRE(r.diagnostics.converged);
  const oracle::DualSolution exact = oracle::dual_spd(0.0, 0.2, 800, wide.mu);
  CHECK(r.path_length == Approx(exact.length).epsilon(1e-9));
  CHECK(r.density.peak() == Approx(*std::max_element(exact.f.begin(), exact.f.end())).epsilon(1e-4));
  CHECK(r.density[0] == r.density.peak());
  CHECK(r.density[0] * r.density.partition().cell_width() > 0.1);
}

TEST_CASE("reference case path lengths") {
  const SolveReport uniform = solve(cases()[0], 100);
  CHECK(uniform.path_length == Approx(std::sqrt(2.0)).epsilon(1e-10));
  CHECK(uniform.uniformity_index == Approx(1.0).epsilon(1e-10));
  for (double v : uniform.density.values()) CHECK(v == Approx(1.0).epsilon(1e-8));

  CHECK(solve(cases()[1]).path_length == Approx(1.006).epsilon(0.005 / 1.006));
  CHECK(solve(cases()[2]).path_length == Approx(1.04).epsilon(0.005 / 1.04));
  CHECK(solve(cases()[3]).path_length == Approx(1.02).epsilon(0.005 / 1.02));
}

TEST_CASE("converged reports honour the moments, the bounds and the objective") {
  for (const Case& c : cases()) {
    CAPTURE(c.name);
    const SolveReport r = solve(c, 200);
    REQUIRE(r.diagnostics.converged);
    const int m = static_cast<int>(c.mu.size()) - 1;
    REQUIRE(r.achieved_moments.size() == c.mu.size());
    for (int k = 0; k <= m; ++k) {
      CHECK(std::abs(r.achieved_moments[static_cast<std::size_t>(k)] - c.mu[static_cast<std::size_t>(k)]) <= 1e-8);
      CHECK(raw_moment(r.density, k) == Approx(r.achieved_moments[static_cast<std::size_t>(k)]).epsilon(1e-12));
    }
    for (double v : r.density.values()) CHECK(v >= 0.0);
    CHECK(r.path_length >= straight_line_length(Interval(c.a, c.b)) - 1e-9);
    CHECK(r.path_length == Approx(path_length(r.density)).epsilon(1e-14));
    CHECK(r.uniformity_index == Approx(uniformity_index(r.density)).epsilon(1e-14));
    CHECK(r.diagnostics.kkt_stationarity_residual <= 1e-5);
  }
}

TEST_CASE("problem construction validates its inputs") {
  const Interval iv(0, 0.1);
  CHECK_THROWS_AS(SpdProblem(make_partition(iv, 2), MomentSpec({1.0, 0.04}, iv)), Error);
  CHECK_NOTHROW(SpdProblem(make_partition(iv, 3), MomentSpec({1.0, 0.04}, iv)));
  try {
    SpdProblem(make_partition(iv, 50), MomentSpec({1.0, 0.2}));
    FAIL("mean outside the interval was accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::infeasible);
  }
  // Variance beyond the two-point bound mu1 (a + b) - a b - mu1^2.
  const Interval sym(-0.1, 0.1);
  CHECK_THROWS_AS(SpdProblem(make_partition(sym, 50), MomentSpec({1.0, 0.0, 0.02})), Error);
}

TEST_CASE("refinement in n is Cauchy for the m = 1 case") {
  const Interval iv(0, 0.1);
  const auto reports = refine_solve(iv, MomentSpec({1.0, 0.04}, iv), {50, 100, 200, 400});
  REQUIRE(reports.size() == 4);
  std::vector<double> lengths;
  for (const auto& r : reports) {
    CHECK(r.diagnostics.converged);
    lengths.push_back(r.path_length);
  }
  for (std::size_t i = 1; i < lengths.size(); ++i) CHECK(std::abs(lengths[i] - lengths[i - 1]) < 1e-3);
  for (std::size_t i = 2; i < lengths.size(); ++i) {
    CHECK(std::abs(lengths[i] - lengths[i - 1]) < std::abs(lengths[i - 1] - lengths[i - 2]));
  }
  CHECK(reports.back().density.size() == 400);
}

TEST_CASE("refinement keeps the uniform density") {
  const Interval iv(-1, 2);
  for (const auto& r : refine_solve(iv, MomentSpec({1.0}, iv), {7, 30, 64})) {
    CHECK(r.diagnostics.converged);
    for (double v : r.density.values()) CHECK(v == Approx(1.0 / 3.0).epsilon(1e-8));
  }
}

TEST_CASE("refinement converges pointwise for the bell case") {
  const Interval iv(-0.1, 0.1);
  const MomentSpec spec({1.0, 0.0, 0.001}, iv);
  const auto reports = refine_solve(iv, spec, {100, 200, 400});
  REQUIRE(reports.size() == 3);
  // Compare each stage on the finest grid.
  const Partition fine = make_partition(iv, 400);
  std::vector<std::vector<double>> on_fine;
  for (const auto& r : reports) on_fine.push_back(prolongate(r.density, fine));
  const double d1 = sup_distance(on_fine[0], on_fine[1]);
  const double d2 = sup_distance(on_fine[1], on_fine[2]);
  CHECK(d2 < d1);
}

TEST_CASE("prolongation copies the containing cell") {
  const Partition coarse = make_partition(Interval(0, 1), 2);
  const PiecewiseDensity d(coarse, {0.5, 1.5});
  const auto fine = prolongate(d, make_partition(Interval(0, 1), 4));
  CHECK(fine == std::vector<double>{0.5, 0.5, 1.5, 1.5});
  CHECK_THROWS_AS(prolongate(d, make_partition(Interval(0, 2), 4)), Error);
}

TEST_CASE("the solution is no longer than the reference or sampled feasible densities") {
  for (const Case& c : cases()) {
    CAPTURE(c.name);
    const Interval iv(c.a, c.b);
    const Partition p = make_partition(iv, 200);
    const MomentSpec spec(c.mu, iv);
    const SolveReport r = solve_spd(SpdProblem(p, spec));
    REQUIRE(r.diagnostics.converged);

    // The maximum-entropy density, sampled on the grid and pushed onto the
    // discrete moment constraints.
    const PiecewiseDensity me = reference_density_on(p, match_reference(iv, spec));
    const auto me_feasible = project_feasible(p, spec, std::vector<double>(me.values().begin(), me.values().end()));
    REQUIRE(me_feasible.has_value());
    CHECK(r.path_length <= path_length(*me_feasible) + 1e-6);

    const auto trials = sample_feasible_densities(p, spec, 100, 20240501);
    CHECK(trials.size() == 100);
    for (const auto& t : trials) {
      for (int k = 0; k < static_cast<int>(c.mu.size()); ++k) CHECK(raw_moment(t, k) == Approx(c.mu[static_cast<std::size_t>(k)]).epsilon(1e-8).scale(1.0));
      CHECK(r.path_length <= path_length(t) + 1e-6);
    }
  }
}

TEST_CASE("symmetric specs give symmetric densities") {
  for (const Case& c : {cases()[2], cases()[3]}) {
    CAPTURE(c.name);
    const SolveReport r = solve(c, 200);
    const auto v = r.density.values();
    double asym = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) asym = std::max(asym, std::abs(v[i] - v[v.size() - 1 - i]));
    CHECK(asym < 1e-4);
  }
  const Interval unit(0, 1);
  const SolveReport flat_mean = solve_spd(SpdProblem(make_partition(unit, 101), MomentSpec({1.0, 0.5}, unit)));
  const auto v = flat_mean.density.values();
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(v[i] - v[v.size() - 1 - i]) < 1e-4);
}

TEST_CASE("translation and reflection carry solutions onto each other") {
  const std::size_t n = 200;
  const SolveReport base = solve({"texp", 0.0, 0.1, {1.0, 0.04}}, n);

  // Shift by 1: the moments follow x -> x + 1.
  const SolveReport shifted = solve({"shifted", 1.0, 1.1, {1.0, 1.04}}, n);
  CHECK(sup_distance(base.density.values(), shifted.density.values()) < 1e-4 * base.density.peak());
  CHECK(shifted.path_length == Approx(base.path_length).epsilon(1e-8));

  // Reflect x -> 0.1 - x: mean 0.06, cells in reverse order.
  const SolveReport reflected = solve({"reflected", 0.0, 0.1, {1.0, 0.06}}, n);
  std::vector<double> back(reflected.density.values().rbegin(), reflected.density.values().rend());
  CHECK(sup_distance(base.density.values(), back) < 1e-4 * base.density.peak());
  CHECK(reflected.path_length == Approx(base.path_length).epsilon(1e-8));
}

TEST_CASE("solve_spd_from reaches the same optimum from another start") {
  const Interval iv(-0.1, 0.1);
  const Partition p = make_partition(iv, 100);
  const SpdProblem problem(p, MomentSpec({1.0, 0.0, 0.001}, iv));
  const SolveReport warm = solve_spd(problem);
  const SolveReport cold = solve_spd_from(problem, std::vector<double>(100, 5.0));
  REQUIRE(cold.diagnostics.converged);
  CHECK(cold.path_length == Approx(warm.path_length).epsilon(1e-9));
  CHECK_THROWS_AS(solve_spd_from(problem, std::vector<double>(99, 5.0)), Error);
}

TEST_CASE("the warm start is nonnegative and normalized") {
  const Interval iv(0, 0.1);
  const SpdProblem texp(make_partition(iv, 40), MomentSpec({1.0, 0.04}, iv));
  const auto w = direct_warm_start(texp);
  const PiecewiseDensity d(texp.partition(), w);
  CHECK(raw_moment(d, 0) == Approx(1.0).epsilon(1e-12));
  CHECK(raw_moment(d, 1) == Approx(0.04).epsilon(1e-10));
  // A mean close to the edge cannot be reached by a nonnegative tilt.
  const SpdProblem edge(make_partition(iv, 40), MomentSpec({1.0, 0.005}, iv));
  for (double v : direct_warm_start(edge)) CHECK(v == Approx(10.0));
}

TEST_CASE("report JSON carries the density and diagnostics") {
  const SolveReport r = solve(cases()[1], 50);
  const Json j = to_json(r);
  CHECK(j.contains("density"));
  CHECK(j["density"]["n"] == 50);
  CHECK(j["path_length"].get<double>() == r.path_length);
  CHECK(j["diagnostics"]["converged"] == true);
  const PiecewiseDensity back = density_from_json(j["density"]);
  CHECK(back.size() == 50);
  for (std::size_t i = 0; i < 50; ++i) CHECK(back[i] == r.density[i]);
}
