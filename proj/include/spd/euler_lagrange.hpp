#pragma once

// The multiplier-parameterized density family that solves the Euler-Lagrange
// equation of the constrained arc-length functional:
//
//   f(x; lambda) = P(x) / sqrt(1 - P(x)^2),   P(x) = sum_i lambda_i x^i,
//
// feasible where 0 <= P < 1. Multipliers are fitted by least squares on the
// discretized moment residuals.

#include <vector>

#include "spd/density.hpp"
#include "spd/optimizer.hpp"

namespace spd {

/// Margin below 1 that closes the open constraint P < 1.
inline constexpr double feasibility_epsilon = 1e-6;

class MultiplierVector {
 public:
  explicit MultiplierVector(std::vector<double> lambdas);

  int order() const noexcept { return static_cast<int>(lambdas_.size()) - 1; }
  std::span<const double> lambdas() const noexcept { return lambdas_; }
  double operator[](int i) const { return lambdas_.at(static_cast<std::size_t>(i)); }

  /// P(x) by Horner's rule.
  double polynomial(double x) const;

 private:
  std::vector<double> lambdas_;
};

class ParametricDensity {
 public:
  ParametricDensity(MultiplierVector multipliers, Interval interval)
      : multipliers_(std::move(multipliers)), interval_(interval) {}

  const MultiplierVector& multipliers() const noexcept { return multipliers_; }
  const Interval& interval() const noexcept { return interval_; }

 private:
  MultiplierVector multipliers_;
  Interval interval_;
};

/// P/sqrt(1-P^2) at x. Throws a PointError (singularity) for P >= 1 and
/// (negativity) for P < 0; domain error when x is outside the interval.
double eval_parametric(const ParametricDensity& density, double x);

/// The map P -> P / sqrt(1 - P^2) and its inverse v -> v / sqrt(1 + v^2).
double density_from_polynomial(double p);
double polynomial_from_density(double v);

/// min_j min(P(p_j), 1 - eps - P(p_j)) over the midpoints; >= 0 iff feasible.
double feasibility_margin(const MultiplierVector& multipliers, const Partition& partition);

/// Cell values f(p_i; lambda). Propagates eval_parametric errors.
PiecewiseDensity induced_density(const MultiplierVector& multipliers, const Partition& partition);

/// lambda_0 giving the constant density 1/(b - a), higher multipliers zero.
MultiplierVector initial_multipliers(int order, const Interval& interval);

struct MultiplierFit {
  MultiplierVector multipliers;
  opt::SolveDiagnostics diagnostics;
  /// Sum of squared (scaled) moment residuals at the returned multipliers.
  double residual_objective = 0.0;
  /// Largest raw moment residual |<f, w_k> - mu_k|.
  double max_moment_residual = 0.0;
};

/// Least-squares fit of the multipliers to the moment targets over the
/// feasibility polytope, with Nelder-Mead as the inner search. Throws when
/// `initial` is not strictly feasible; a stalled fit comes back with
/// converged = false.
MultiplierFit fit_multipliers(const MomentSpec& spec, const Partition& partition, const MultiplierVector& initial,
                              const opt::SolverConfig& config = {});

}  // namespace spd
