#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "oracles.hpp"
#include "spd/direct_solver.hpp"
#include "spd/errors.hpp"
#include "spd/optimizer.hpp"
#include "spd/serialize.hpp"
#include "spd/trial_densities.hpp"

using namespace spd;
using namespace spd::opt;
using doctest::Approx;

namespace {

/// min ||x||^2 subject to x1 + x2 = 1.
ObjectiveProblem projection_problem() {
  ObjectiveProblem p;
  p.dimension = 2;
  p.objective = [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1]; };
  p.gradient = [](std::span<const double> x, std::span<double> g) {
    g[0] = 2 * x[0];
    g[1] = 2 * x[1];
  };
  p.equalities.push_back({[](std::span<const double> x) { return x[0] + x[1] - 1.0; },
                          [](std::span<const double>, std::span<double> g) { g[0] = g[1] = 1.0; }});
  return p;
}

ObjectiveProblem arc_problem(std::size_t n) {
  ObjectiveProblem p;
  p.dimension = n;
  p.objective = [](std::span<const double> x) {
    double s = 0;
    for (double v : x) s += std::sqrt(1 + v * v);
    return s;
  };
  p.gradient = [](std::span<const double> x, std::span<double> g) {
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] / std::sqrt(1 + x[i] * x[i]);
  };
  p.lower.assign(n, 0.0);
  p.upper.assign(n, INFINITY);
  return p;
}

SpdProblem texp_problem(std::size_t n) {
  const Interval iv(0.0, 0.1);
  return SpdProblem(Partition(iv, n), MomentSpec({1.0, 0.04}, iv));
}

}  // namespace

TEST_CASE("projection onto a line, both inner methods") {
  for (auto method : {InnerMethod::projected_quasi_newton, InnerMethod::nelder_mead, InnerMethod::automatic}) {
    SolverConfig cfg;
    cfg.method = method;
    const std::vector<double> x0{0.0, 0.0};
    const auto res = minimize_auglag(projection_problem(), x0, cfg);
    CAPTURE(res.diagnostics.method_tag);
    CHECK(res.diagnostics.converged);
    CHECK(res.point[0] == Approx(0.5).epsilon(1e-6));
    CHECK(res.point[1] == Approx(0.5).epsilon(1e-6));
    CHECK(res.diagnostics.max_equality_violation <= cfg.eq_tol);
    CHECK(res.diagnostics.kkt_stationarity_residual <= cfg.kkt_tol);
    // Lagrange multiplier of the constraint is 2 * 0.5 = 1.
    CHECK(res.multipliers[0] == Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("arc-length integrand is minimized at zero under nonnegativity") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> x0(12);
    for (double& v : x0) v = u(rng);
    const auto res = minimize_auglag(arc_problem(12), x0);
    CHECK(res.diagnostics.converged);
    for (double v : res.point) CHECK(v == 0.0);
  }
}

TEST_CASE("direct SPD program through the kernel") {
  const auto problem = texp_problem(200);
  const auto op = make_direct_problem(problem);
  const auto x0 = direct_warm_start(problem);
  const auto res = minimize_auglag(op, x0);
  CHECK(res.diagnostics.converged);
  const double len = res.diagnostics.objective_value;
  CHECK(len == Approx(1.006).epsilon(0.005 / 1.006));
  const auto dual = oracle::dual_spd(0.0, 0.1, 200, {1.0, 0.04});
  CHECK(dual.max_residual < 1e-12);
  CHECK(len == Approx(dual.length).epsilon(1e-9));
  for (double v : res.point) CHECK(v >= 0.0);

  const auto kkt = kkt_residuals(op, res.point, res.multipliers);
  CHECK(kkt.stationarity <= 1e-5);
  CHECK(kkt.feasibility <= 1e-5);
  CHECK(kkt.complementarity <= 1e-5);
}

TEST_CASE("KKT residuals vanish at an unconstrained vertex") {
  ObjectiveProblem p;
  p.dimension = 3;
  p.objective = [](std::span<const double> x) {
    return (x[0] - 1) * (x[0] - 1) + 2 * (x[1] + 2) * (x[1] + 2) + 0.5 * x[2] * x[2];
  };
  const std::vector<double> vertex{1.0, -2.0, 0.0};
  const auto r = kkt_residuals(p, vertex, {});
  CHECK(r.stationarity <= 1e-6);
  CHECK(r.feasibility <= 1e-6);
  CHECK(r.complementarity <= 1e-6);
}

TEST_CASE("perturbing a converged point breaks stationarity") {
  const auto p = projection_problem();
  const auto res = minimize_auglag(p, std::vector<double>{0.0, 0.0});
  auto bumped = res.point;
  bumped[0] += 0.1;
  // Keep the point feasible so only stationarity is affected.
  bumped[1] -= 0.1;
  CHECK(kkt_residuals(p, res.point, res.multipliers).stationarity <= 1e-6);
  CHECK(kkt_residuals(p, bumped, res.multipliers).stationarity > 1e-3);
}

TEST_CASE("bound multipliers are recovered from the gradient") {
  // min (x + 1)^2 subject to x >= 0.
  ObjectiveProblem p;
  p.dimension = 1;
  p.objective = [](std::span<const double> x) { return (x[0] + 1) * (x[0] + 1); };
  p.lower = {0.0};
  // At x = 0 the bound is active with multiplier 2: complementarity holds.
  const auto at_bound = kkt_residuals(p, std::vector<double>{0.0}, {});
  CHECK(at_bound.stationarity <= 1e-6);
  CHECK(at_bound.complementarity <= 1e-6);
  // At x = 0.5 the gradient is nonzero and the bound is slack.
  const auto off = kkt_residuals(p, std::vector<double>{0.5}, {});
  CHECK(off.stationarity > 0.1);
}

TEST_CASE("merit values are nonincreasing within each outer iteration") {
  for (auto method : {InnerMethod::projected_quasi_newton, InnerMethod::nelder_mead}) {
    std::map<int, std::vector<double>> merits;
    SolverConfig cfg;
    cfg.method = method;
    cfg.trace = [&](const TraceRow& r) { merits[r.outer].push_back(r.merit); };
    if (method == InnerMethod::nelder_mead) {
      minimize_auglag(projection_problem(), std::vector<double>{0.0, 0.0}, cfg);
    } else {
      const auto problem = texp_problem(100);
      minimize_auglag(make_direct_problem(problem), direct_warm_start(problem), cfg);
    }
    REQUIRE(!merits.empty());
    for (const auto& [outer, values] : merits) {
      for (std::size_t i = 1; i < values.size(); ++i) CHECK(values[i] <= values[i - 1] + 1e-15 * std::abs(values[i - 1]));
    }
  }
}

TEST_CASE("solves are deterministic") {
  const auto problem = texp_problem(150);
  const auto op = make_direct_problem(problem);
  const auto x0 = direct_warm_start(problem);
  const auto r1 = minimize_auglag(op, x0);
  const auto r2 = minimize_auglag(op, x0);
  CHECK(r1.point == r2.point);
  CHECK(r1.multipliers == r2.multipliers);
  CHECK(r1.diagnostics.iterations == r2.diagnostics.iterations);

  SolverConfig nm;
  nm.method = InnerMethod::nelder_mead;
  const auto n1 = minimize_auglag(projection_problem(), std::vector<double>{0.3, -0.2}, nm);
  const auto n2 = minimize_auglag(projection_problem(), std::vector<double>{0.3, -0.2}, nm);
  CHECK(n1.point == n2.point);
}

TEST_CASE("analytic gradient of the path-length objective matches finite differences") {
  const auto problem = texp_problem(60);
  const auto op = make_direct_problem(problem);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.5, 40.0);
  auto fn = [&](const std::vector<double>& x) { return op.objective(x); };
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(60);
    for (double& v : x) v = u(rng);
    std::vector<double> g(60);
    op.gradient(x, g);
    const auto fd = oracle::gradient(fn, x);
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(std::abs(g[i] - fd[i]) <= 1e-6 * std::max(std::abs(fd[i]), 1e-12) + 1e-12);
    }
  }
}

TEST_CASE("small problems agree with exhaustive grid search") {
  struct Case {
    std::vector<double> c, w;
  };
  const Case cases[] = {{{1.0, 1.0}, {1.0, 2.0}},
                        {{0.5, 1.5}, {0.3, 0.7}},
                        {{1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}},
                        {{0.2, 0.3, 0.5}, {0.5, 0.25, 0.25}}};
  for (const auto& cs : cases) {
    const std::size_t d = cs.c.size();
    ObjectiveProblem p;
    p.dimension = d;
    p.objective = [c = cs.c](std::span<const double> x) {
      double s = 0;
      for (std::size_t i = 0; i < x.size(); ++i) s += c[i] * std::sqrt(1 + x[i] * x[i]);
      return s;
    };
    p.equalities.push_back({[w = cs.w](std::span<const double> x) {
                              double s = -1.0;
                              for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * x[i];
                              return s;
                            },
                            {}});
    p.lower.assign(d, 0.0);
    p.upper.assign(d, INFINITY);
    std::vector<double> x0(d, 0.0);
    x0[0] = 1.0 / cs.w[0];
    for (auto method : {InnerMethod::nelder_mead, InnerMethod::projected_quasi_newton}) {
      SolverConfig cfg;
      cfg.method = method;
      const auto res = minimize_auglag(p, x0, cfg);
      const double best = oracle::grid_min(cs.c, cs.w, 1e-3);
      CHECK(res.diagnostics.objective_value == Approx(best).epsilon(2e-3));
      CHECK(res.diagnostics.objective_value <= best + 1e-9);
    }
  }
}

TEST_CASE("infeasible constraints end unconverged with the best point") {
  ObjectiveProblem p = projection_problem();
  p.equalities.push_back({[](std::span<const double> x) { return x[0] + x[1] - 2.0; }, {}});
  SolverConfig cfg;
  cfg.max_outer = 15;
  const auto res = minimize_auglag(p, std::vector<double>{0.0, 0.0}, cfg);
  CHECK_FALSE(res.diagnostics.converged);
  CHECK(res.diagnostics.max_equality_violation > 0.1);
  CHECK(res.point[0] + res.point[1] == Approx(1.5).epsilon(1e-3));
}

TEST_CASE("non-finite objective values raise an error with the point") {
  ObjectiveProblem p;
  p.dimension = 1;
  p.objective = [](std::span<const double> x) { return x[0] > 0.5 ? NAN : -x[0]; };
  for (auto method : {InnerMethod::projected_quasi_newton, InnerMethod::nelder_mead}) {
    SolverConfig cfg;
    cfg.method = method;
    try {
      minimize_auglag(p, std::vector<double>{0.2}, cfg);
      FAIL("expected NonFiniteError");
    } catch (const NonFiniteError& e) {
      CHECK(e.code() == ErrorCode::solver);
      REQUIRE(e.point().size() == 1);
      CHECK(e.point()[0] > 0.5);
    }
  }
}

TEST_CASE("invalid inputs are rejected") {
  const auto p = projection_problem();
  CHECK_THROWS_AS(minimize_auglag(p, std::vector<double>{0.0}), Error);
  auto bounded = arc_problem(2);
  CHECK_THROWS_AS(minimize_auglag(bounded, std::vector<double>{-1.0, 0.0}), Error);
  SolverConfig bad;
  bad.eq_tol = 0.0;
  CHECK_THROWS_AS(minimize_auglag(p, std::vector<double>{0.0, 0.0}, bad), Error);
}

TEST_CASE("objective does not increase from a feasible start") {
  const auto problem = texp_problem(80);
  const auto op = make_direct_problem(problem);
  const auto start = project_feasible(problem.partition(), problem.spec(), direct_warm_start(problem), 1e-13);
  REQUIRE(start.has_value());
  const std::vector<double> x0(start->values().begin(), start->values().end());
  const auto res = minimize_auglag(op, x0);
  CHECK(res.diagnostics.objective_value <= op.objective(x0));
}

TEST_CASE("second-order check on the reduced Hessian") {
  SolverConfig cfg;
  cfg.check_second_order = true;
  const auto res = minimize_auglag(projection_problem(), std::vector<double>{0.0, 0.0}, cfg);
  REQUIRE(res.diagnostics.min_reduced_hessian_eigenvalue.has_value());
  // On the line x1 + x2 = 1 the Hessian 2I reduces to 2.
  CHECK(*res.diagnostics.min_reduced_hessian_eigenvalue == Approx(2.0).epsilon(1e-3));

  // A saddle restricted to the same line has negative curvature.
  ObjectiveProblem saddle = projection_problem();
  saddle.objective = [](std::span<const double> x) { return x[0] * x[1]; };
  saddle.gradient = {};
  const std::vector<double> pt{0.5, 0.5}, mult{0.5};
  CHECK(min_reduced_hessian_eigenvalue(saddle, pt, mult) == Approx(-1.0).epsilon(1e-3));

  const auto problem = texp_problem(60);
  const auto sol = minimize_auglag(make_direct_problem(problem), direct_warm_start(problem), cfg);
  CHECK(sol.diagnostics.converged);
  CHECK(*sol.diagnostics.min_reduced_hessian_eigenvalue >= -1e-4);
}

TEST_CASE("Nelder-Mead on Rosenbrock and with a box") {
  auto rosen = [](std::span<const double> x) {
    return 100 * (x[1] - x[0] * x[0]) * (x[1] - x[0] * x[0]) + (1 - x[0]) * (1 - x[0]);
  };
  const auto r = nelder_mead(rosen, std::vector<double>{-1.2, 1.0}, {});
  CHECK(r.point[0] == Approx(1.0).epsilon(1e-6));
  CHECK(r.point[1] == Approx(1.0).epsilon(1e-6));

  const std::vector<double> lo{2.0, -INFINITY}, hi{INFINITY, INFINITY};
  const auto boxed = nelder_mead(rosen, std::vector<double>{3.0, 3.0}, {}, lo, hi);
  CHECK(boxed.point[0] == Approx(2.0).epsilon(1e-6));
  CHECK(boxed.point[1] == Approx(4.0).epsilon(1e-5));
}

TEST_CASE("diagnostics serialize and parse back") {
  const auto res = minimize_auglag(projection_problem(), std::vector<double>{0.0, 0.0});
  const auto j = to_json(res.diagnostics);
  const auto back = diagnostics_from_json(Json::parse(j.dump()));
  CHECK(back.converged == res.diagnostics.converged);
  CHECK(back.iterations == res.diagnostics.iterations);
  CHECK(back.objective_value == res.diagnostics.objective_value);
  CHECK(back.method_tag == res.diagnostics.method_tag);
  CHECK(to_json(back).dump() == j.dump());
}
