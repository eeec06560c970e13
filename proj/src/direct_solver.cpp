#include "spd/direct_solver.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

#include "spd/errors.hpp"

namespace spd {

SpdProblem::SpdProblem(Partition partition, MomentSpec spec) : partition_(std::move(partition)), spec_(std::move(spec)) {
  spec_.require_attainable(partition_.interval());
  const auto needed = static_cast<std::size_t>(spec_.order() + 2);
  if (partition_.size() < needed) {
    throw Error(ErrorCode::invalid_argument,
                "direct solve needs n >= m + 2 cells (n=" + std::to_string(partition_.size()) + ")");
  }
}

opt::ObjectiveProblem make_direct_problem(const SpdProblem& problem) {
  const Partition& part = problem.partition();
  const std::size_t n = part.size();
  const double h = part.cell_width();

  opt::ObjectiveProblem op;
  op.dimension = n;
  op.objective = [h](std::span<const double> f) {
    double s = 0.0;
    for (double v : f) s += std::hypot(1.0, v);
    return h * s;
  };
  op.gradient = [h](std::span<const double> f, std::span<double> g) {
    for (std::size_t i = 0; i < f.size(); ++i) g[i] = h * f[i] / std::hypot(1.0, f[i]);
  };
  op.hessian_diagonal = [h](std::span<const double> f, std::span<double> d) {
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double r = std::hypot(1.0, f[i]);
      d[i] = h / (r * r * r);
    }
  };

  // Each moment row is divided by its Euclidean norm to balance the penalty.
  for (int k = 0; k <= problem.spec().order(); ++k) {
    auto w = std::make_shared<std::vector<double>>(moment_weights(part, k));
    const double norm = std::sqrt(std::inner_product(w->begin(), w->end(), w->begin(), 0.0));
    for (double& v : *w) v /= norm;
    const double target = problem.spec()[k] / norm;
    opt::Constraint c;
    c.value = [w, target](std::span<const double> f) {
      double s = 0.0;
      for (std::size_t i = 0; i < f.size(); ++i) s += (*w)[i] * f[i];
      return s - target;
    };
    c.gradient = [w](std::span<const double>, std::span<double> g) { std::copy(w->begin(), w->end(), g.begin()); };
    op.equalities.push_back(std::move(c));
  }
  op.lower.assign(n, 0.0);
  op.upper.assign(n, std::numeric_limits<double>::infinity());
  return op;
}

std::vector<double> direct_warm_start(const SpdProblem& problem) {
  const Partition& part = problem.partition();
  const Interval& iv = part.interval();
  const double len = iv.length();
  const double base = 1.0 / len;
  std::vector<double> f(part.size(), base);
  if (problem.spec().order() >= 1) {
    // f_i = 1/L + s (p_i - c) keeps mu_0 (the tilt is odd about c) and moves
    // the discrete first moment by s * sum (p_i - c) w_1i.
    const auto w1 = moment_weights(part, 1);
    double lever = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) lever += (part.midpoint(i) - iv.center()) * w1[i];
    const double slope = (problem.spec()[1] - iv.center()) / lever;
    if (std::abs(slope) * 0.5 * len <= base) {
      for (std::size_t i = 0; i < f.size(); ++i) f[i] = base + slope * (part.midpoint(i) - iv.center());
    }
  }
  return f;
}

namespace {

SolveReport make_report(const SpdProblem& problem, const opt::SolveResult& res) {
  std::vector<double> values = res.point;
  for (double& v : values) v = std::max(v, 0.0);
  PiecewiseDensity density(problem.partition(), std::move(values));
  SolveReport report{density, raw_moments(density, problem.spec().order()), path_length(density),
                     uniformity_index(density), res.diagnostics};
  // The kernel measures violation on normalized rows; the raw moments are what
  // callers compare against.
  double raw_violation = 0.0;
  for (int k = 0; k <= problem.spec().order(); ++k) {
    raw_violation = std::max(raw_violation, std::abs(report.achieved_moments[static_cast<std::size_t>(k)] - problem.spec()[k]));
  }
  report.diagnostics.max_equality_violation = std::max(report.diagnostics.max_equality_violation, raw_violation);
  report.diagnostics.method_tag = "direct/" + report.diagnostics.method_tag;
  return report;
}

}  // namespace

SolveReport solve_spd_from(const SpdProblem& problem, std::vector<double> initial, const opt::SolverConfig& config) {
  if (initial.size() != problem.partition().size()) {
    throw Error(ErrorCode::invalid_argument, "initial density has the wrong number of cells");
  }
  for (double& v : initial) v = std::max(v, 0.0);
  const auto op = make_direct_problem(problem);
  opt::SolverConfig cfg = config;
  if (cfg.method == opt::InnerMethod::automatic) cfg.method = opt::InnerMethod::projected_quasi_newton;
  const auto res = opt::minimize_auglag(op, initial, cfg);
  return make_report(problem, res);
}

SolveReport solve_spd(const SpdProblem& problem, const opt::SolverConfig& config) {
  return solve_spd_from(problem, direct_warm_start(problem), config);
}

std::vector<double> prolongate(const PiecewiseDensity& density, const Partition& target) {
  if (!(density.interval() == target.interval())) {
    throw Error(ErrorCode::invalid_argument, "prolongation requires the same interval");
  }
  const Interval& iv = target.interval();
  const double h = density.partition().cell_width();
  const std::size_t n = density.size();
  std::vector<double> out(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    auto cell = static_cast<std::size_t>(std::floor((target.midpoint(i) - iv.lower()) / h));
    out[i] = density[std::min(cell, n - 1)];
  }
  return out;
}

std::vector<SolveReport> refine_solve(const Interval& interval, const MomentSpec& spec,
                                      const std::vector<std::size_t>& n_schedule, const opt::SolverConfig& config) {
  for (std::size_t i = 1; i < n_schedule.size(); ++i) {
    if (n_schedule[i] <= n_schedule[i - 1]) throw Error(ErrorCode::invalid_argument, "n schedule must be increasing");
  }
  std::vector<SolveReport> reports;
  for (std::size_t n : n_schedule) {
    SpdProblem problem(Partition(interval, n), spec);
    if (reports.empty()) {
      reports.push_back(solve_spd(problem, config));
    } else {
      reports.push_back(solve_spd_from(problem, prolongate(reports.back().density, problem.partition()), config));
    }
  }
  return reports;
}

}  // namespace spd
