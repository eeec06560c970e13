#pragma once

// Constrained minimization kernel: an augmented-Lagrangian outer loop around
// either a Nelder-Mead simplex search (small problems) or a projected
// quasi-Newton method (large, smooth problems), plus KKT verification.

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spd::opt {

using ScalarFn = std::function<double(std::span<const double>)>;
using GradientFn = std::function<void(std::span<const double>, std::span<double>)>;

/// c(x) = 0 (equality) or g(x) >= 0 (inequality). The gradient is optional;
/// central differences are used when it is empty.
struct Constraint {
  ScalarFn value;
  GradientFn gradient;
};

struct ObjectiveProblem {
  std::size_t dimension = 0;
  ScalarFn objective;
  GradientFn gradient;
  /// Diagonal of the objective Hessian. Only meaningful for separable
  /// objectives; when absent the inner solver keeps a secant scalar model.
  GradientFn hessian_diagonal;
  std::vector<Constraint> equalities;
  /// Handled with Powell-Hestenes-Rockafellar hinge terms.
  std::vector<Constraint> inequalities;
  /// Empty means unbounded; otherwise one entry per coordinate (may be +-inf).
  std::vector<double> lower;
  std::vector<double> upper;
};

enum class InnerMethod { automatic, nelder_mead, projected_quasi_newton };

/// One row per accepted inner step.
struct TraceRow {
  int outer = 0;
  int inner = 0;
  double merit = 0.0;
  double objective = 0.0;
  double penalty = 0.0;
  double max_violation = 0.0;
};

struct SolverConfig {
  double eq_tol = 1e-8;
  double kkt_tol = 1e-5;
  double objective_rtol = 1e-10;
  int max_outer = 50;
  int max_inner = 5000;
  double initial_penalty = 10.0;
  double penalty_growth = 10.0;
  double penalty_cap = 1e8;
  /// The penalty grows unless the violation shrinks by at least this factor.
  double violation_shrink = 0.25;
  /// Stationarity target for each inner solve; tighter than kkt_tol so the
  /// certificate is met with room to spare.
  double inner_tol = 1e-12;
  InnerMethod method = InnerMethod::automatic;
  /// Problems up to this dimension go to Nelder-Mead under `automatic`.
  std::size_t nelder_mead_max_dimension = 8;
  /// Initial Nelder-Mead edge lengths; empty means 5% of each |x_i|.
  std::vector<double> simplex_step;
  bool check_second_order = false;
  double second_order_tol = 1e-4;
  std::function<void(const TraceRow&)> trace;
};

struct SolveDiagnostics {
  int iterations = 0;
  int inner_iterations = 0;
  double objective_value = std::numeric_limits<double>::quiet_NaN();
  double max_equality_violation = std::numeric_limits<double>::quiet_NaN();
  double kkt_stationarity_residual = std::numeric_limits<double>::quiet_NaN();
  double kkt_complementarity_residual = std::numeric_limits<double>::quiet_NaN();
  /// Smallest eigenvalue of the reduced Hessian, when requested.
  std::optional<double> min_reduced_hessian_eigenvalue;
  double final_penalty = 0.0;
  bool converged = false;
  std::string method_tag;
  std::string message;
};

struct SolveResult {
  std::vector<double> point;
  /// Equality multipliers followed by inequality multipliers.
  std::vector<double> multipliers;
  SolveDiagnostics diagnostics;
};

SolveResult minimize_auglag(const ObjectiveProblem& problem, std::span<const double> initial,
                            const SolverConfig& config = {});

struct KktResiduals {
  double stationarity = 0.0;
  double feasibility = 0.0;
  double complementarity = 0.0;
};

/// Residuals of the first-order conditions at `point`, given equality (then
/// inequality) multipliers. Bound multipliers are recovered from the
/// Lagrangian gradient.
KktResiduals kkt_residuals(const ObjectiveProblem& problem, std::span<const double> point,
                           std::span<const double> multipliers);

/// Smallest eigenvalue of the finite-difference Hessian of the Lagrangian on
/// the null space of the active constraints (equalities and active bounds).
double min_reduced_hessian_eigenvalue(const ObjectiveProblem& problem, std::span<const double> point,
                                      std::span<const double> multipliers);

/// Objective gradient, analytic when available, otherwise central differences.
std::vector<double> objective_gradient(const ObjectiveProblem& problem, std::span<const double> point);

std::vector<double> central_difference(const ScalarFn& fn, std::span<const double> point,
                                       std::span<const double> lower = {}, std::span<const double> upper = {});

// ---------------------------------------------------------------------------
// Nelder-Mead

struct NelderMeadOptions {
  int max_evaluations = 20000;
  double f_tol = 1e-30;
  double x_rtol = 1e-15;
  /// Initial edge length per coordinate; empty means 5% of |x| (or 0.00025).
  std::vector<double> initial_step;
  int max_restarts = 20;
};

struct NelderMeadResult {
  std::vector<double> point;
  double value = 0.0;
  int evaluations = 0;
  int iterations = 0;
  bool converged = false;
};

/// Box constraints are honored by clamping trial points.
NelderMeadResult nelder_mead(const ScalarFn& fn, std::span<const double> initial, const NelderMeadOptions& options,
                             std::span<const double> lower = {}, std::span<const double> upper = {},
                             const std::function<void(int, double)>& on_iteration = {});

}  // namespace spd::opt
