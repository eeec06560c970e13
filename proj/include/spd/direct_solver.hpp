#pragma once

// Shortest-path densities by direct minimization over the cell values:
//   minimize  h * sum_i sqrt(1 + f_i^2)
//   s.t.      <f, w_k> = mu_k  (k = 0..m),  f_i >= 0.

#include <vector>

#include "spd/density.hpp"
#include "spd/optimizer.hpp"

namespace spd {

class SpdProblem {
 public:
  /// Throws when the moment targets are not attainable on the partition's
  /// interval (m <= 2) or when n < m + 2.
  SpdProblem(Partition partition, MomentSpec spec);

  const Partition& partition() const noexcept { return partition_; }
  const MomentSpec& spec() const noexcept { return spec_; }

 private:
  Partition partition_;
  MomentSpec spec_;
};

struct SolveReport {
  PiecewiseDensity density;
  std::vector<double> achieved_moments;
  double path_length = 0.0;
  double uniformity_index = 0.0;
  opt::SolveDiagnostics diagnostics;
};

/// The kernel-level problem behind solve_spd: objective, analytic
/// gradient and Hessian diagonal, one normalized equality per moment and
/// nonnegativity bounds. Exposed for gradient checks and KKT tests.
opt::ObjectiveProblem make_direct_problem(const SpdProblem& problem);

/// Uniform density, tilted linearly to match mu_1 when that stays nonnegative.
std::vector<double> direct_warm_start(const SpdProblem& problem);

SolveReport solve_spd(const SpdProblem& problem, const opt::SolverConfig& config = {});

/// Same as solve_spd but starting from the given cell values.
SolveReport solve_spd_from(const SpdProblem& problem, std::vector<double> initial,
                           const opt::SolverConfig& config = {});

/// Piecewise-constant prolongation of a density onto a finer (or any) grid of
/// the same interval: each new cell takes the value of the old cell containing
/// its midpoint.
std::vector<double> prolongate(const PiecewiseDensity& density, const Partition& target);

/// Solves on each grid size in turn, warm-starting from the previous stage.
std::vector<SolveReport> refine_solve(const Interval& interval, const MomentSpec& spec,
                                      const std::vector<std::size_t>& n_schedule,
                                      const opt::SolverConfig& config = {});

}  // namespace spd
