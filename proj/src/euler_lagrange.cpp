#include "spd/euler_lagrange.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <sstream>

#include "spd/errors.hpp"

namespace spd {

MultiplierVector::MultiplierVector(std::vector<double> lambdas) : lambdas_(std::move(lambdas)) {
  if (lambdas_.empty()) throw Error(ErrorCode::invalid_argument, "multiplier vector needs lambda_0");
  for (double l : lambdas_) {
    if (!std::isfinite(l)) throw Error(ErrorCode::invalid_argument, "multipliers must be finite");
  }
}

double MultiplierVector::polynomial(double x) const {
  double acc = 0.0;
  for (auto it = lambdas_.rbegin(); it != lambdas_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

double density_from_polynomial(double p) { return p / std::sqrt((1.0 - p) * (1.0 + p)); }

double polynomial_from_density(double v) { return v / std::hypot(1.0, v); }

namespace {

double checked_density(double p, double x) {
  if (p >= 1.0) {
    std::ostringstream os;
    os << "density is singular at x=" << x << " (P=" << p << ")";
    throw PointError(ErrorCode::singularity, os.str(), x);
  }
  if (p < 0.0) {
    std::ostringstream os;
    os << "density is negative at x=" << x << " (P=" << p << ")";
    throw PointError(ErrorCode::negativity, os.str(), x);
  }
  return density_from_polynomial(p);
}

}  // namespace

double eval_parametric(const ParametricDensity& density, double x) {
  if (!density.interval().contains(x)) throw Error(ErrorCode::domain, "x is outside the density's interval");
  return checked_density(density.multipliers().polynomial(x), x);
}

double feasibility_margin(const MultiplierVector& multipliers, const Partition& partition) {
  double margin = std::numeric_limits<double>::infinity();
  for (double p : partition.midpoints()) {
    const double v = multipliers.polynomial(p);
    margin = std::min(margin, std::min(v, 1.0 - feasibility_epsilon - v));
  }
  return margin;
}

PiecewiseDensity induced_density(const MultiplierVector& multipliers, const Partition& partition) {
  std::vector<double> values(partition.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = partition.midpoint(i);
    values[i] = checked_density(multipliers.polynomial(x), x);
  }
  return PiecewiseDensity(partition, std::move(values));
}

MultiplierVector initial_multipliers(int order, const Interval& interval) {
  if (order < 0) throw Error(ErrorCode::invalid_argument, "order must be nonnegative");
  std::vector<double> l(static_cast<std::size_t>(order + 1), 0.0);
  l[0] = polynomial_from_density(1.0 / interval.length());
  return MultiplierVector(std::move(l));
}

MultiplierFit fit_multipliers(const MomentSpec& spec, const Partition& partition, const MultiplierVector& initial,
                              const opt::SolverConfig& config) {
  const int m = spec.order();
  if (initial.order() != m) throw Error(ErrorCode::invalid_argument, "initial multipliers must have order m");
  const double margin0 = feasibility_margin(initial, partition);
  if (!(margin0 > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "initial multipliers are outside the feasibility polytope");
  }

  const std::size_t n = partition.size();
  const auto mid = partition.midpoints();
  // powers[i][k] = p_i^k
  auto powers = std::make_shared<std::vector<std::vector<double>>>(n, std::vector<double>(static_cast<std::size_t>(m + 1)));
  for (std::size_t i = 0; i < n; ++i) {
    double v = 1.0;
    for (int k = 0; k <= m; ++k) {
      (*powers)[i][static_cast<std::size_t>(k)] = v;
      v *= mid[i];
    }
  }
  // Moment rows scaled to unit norm, as in the direct route.
  auto rows = std::make_shared<std::vector<std::vector<double>>>();
  auto targets = std::make_shared<std::vector<double>>();
  std::vector<double> row_norms;
  for (int k = 0; k <= m; ++k) {
    auto w = moment_weights(partition, k);
    const double norm = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
    for (double& v : w) v /= norm;
    rows->push_back(std::move(w));
    targets->push_back(spec[k] / norm);
    row_norms.push_back(norm);
  }

  auto poly_at = [powers, m](std::span<const double> lambda, std::size_t i) {
    double s = 0.0;
    for (int k = 0; k <= m; ++k) s += lambda[static_cast<std::size_t>(k)] * (*powers)[i][static_cast<std::size_t>(k)];
    return s;
  };

  opt::ObjectiveProblem op;
  op.dimension = static_cast<std::size_t>(m + 1);
  // P is clamped into the feasible range so the objective stays finite while
  // the hinge terms pull the multipliers back inside.
  op.objective = [=](std::span<const double> lambda) {
    std::vector<double> moments(static_cast<std::size_t>(m + 1), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double p = std::clamp(poly_at(lambda, i), 0.0, 1.0 - feasibility_epsilon);
      const double f = density_from_polynomial(p);
      for (int k = 0; k <= m; ++k) moments[static_cast<std::size_t>(k)] += f * (*rows)[static_cast<std::size_t>(k)][i];
    }
    double s = 0.0;
    for (int k = 0; k <= m; ++k) {
      const double r = moments[static_cast<std::size_t>(k)] - (*targets)[static_cast<std::size_t>(k)];
      s += r * r;
    }
    return s;
  };
  op.gradient = [=](std::span<const double> lambda, std::span<double> grad) {
    const auto dim = static_cast<std::size_t>(m + 1);
    std::vector<double> residual(dim, 0.0);
    std::vector<double> slope(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double raw = poly_at(lambda, i);
      const double p = std::clamp(raw, 0.0, 1.0 - feasibility_epsilon);
      const double f = density_from_polynomial(p);
      if (raw > 0.0 && raw < 1.0 - feasibility_epsilon) {
        const double s = (1.0 - p) * (1.0 + p);
        slope[i] = 1.0 / (s * std::sqrt(s));
      }
      for (std::size_t k = 0; k < dim; ++k) residual[k] += f * (*rows)[k][i];
    }
    for (std::size_t k = 0; k < dim; ++k) residual[k] -= (*targets)[k];
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (slope[i] == 0.0) continue;
      double weight = 0.0;
      for (std::size_t k = 0; k < dim; ++k) weight += residual[k] * (*rows)[k][i];
      for (std::size_t j = 0; j < dim; ++j) grad[j] += 2.0 * weight * slope[i] * (*powers)[i][j];
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    opt::Constraint nonneg;
    nonneg.value = [=](std::span<const double> lambda) { return poly_at(lambda, i); };
    nonneg.gradient = [powers, i](std::span<const double>, std::span<double> g) {
      std::copy((*powers)[i].begin(), (*powers)[i].end(), g.begin());
    };
    opt::Constraint below_one;
    below_one.value = [=](std::span<const double> lambda) { return 1.0 - feasibility_epsilon - poly_at(lambda, i); };
    below_one.gradient = [powers, i](std::span<const double>, std::span<double> g) {
      for (std::size_t k = 0; k < g.size(); ++k) g[k] = -(*powers)[i][k];
    };
    op.inequalities.push_back(std::move(nonneg));
    op.inequalities.push_back(std::move(below_one));
  }

  opt::SolverConfig cfg = config;
  if (cfg.method == opt::InnerMethod::automatic) cfg.method = opt::InnerMethod::nelder_mead;
  if (cfg.simplex_step.empty()) {
    const double scale = std::max(std::abs(partition.interval().lower()), std::abs(partition.interval().upper()));
    for (int k = 0; k <= m; ++k) cfg.simplex_step.push_back(0.5 * margin0 / std::pow(scale, k));
  }

  const std::vector<double> start(initial.lambdas().begin(), initial.lambdas().end());
  auto res = opt::minimize_auglag(op, start, cfg);

  // Hinge penalties can leave the point a hair outside the polytope. The
  // polytope is convex and the start is strictly inside, so walk back along
  // the segment to the last feasible point.
  std::vector<double> point = res.point;
  auto margin_at = [&](std::span<const double> lambda) {
    return feasibility_margin(MultiplierVector(std::vector<double>(lambda.begin(), lambda.end())), partition);
  };
  if (!(margin_at(point) >= 0.0)) {
    double lo = 0.0, hi = 1.0;
    std::vector<double> trial(point.size());
    for (int it = 0; it < 60; ++it) {
      const double t = 0.5 * (lo + hi);
      for (std::size_t k = 0; k < point.size(); ++k) trial[k] = start[k] + t * (res.point[k] - start[k]);
      (margin_at(trial) >= 0.0 ? lo : hi) = t;
    }
    for (std::size_t k = 0; k < point.size(); ++k) point[k] = start[k] + lo * (res.point[k] - start[k]);
    res.diagnostics.objective_value = op.objective(point);
  }

  MultiplierFit fit{MultiplierVector(point), res.diagnostics, res.diagnostics.objective_value, 0.0};
  fit.diagnostics.method_tag = "lambda/" + fit.diagnostics.method_tag;

  const double margin = feasibility_margin(fit.multipliers, partition);
  if (margin >= 0.0) {
    const auto density = induced_density(fit.multipliers, partition);
    for (int k = 0; k <= m; ++k) {
      fit.max_moment_residual = std::max(fit.max_moment_residual, std::abs(raw_moment(density, k) - spec[k]));
    }
  } else {
    fit.max_moment_residual = std::numeric_limits<double>::infinity();
  }
  fit.diagnostics.max_equality_violation = fit.max_moment_residual;
  const bool residual_ok = std::sqrt(fit.residual_objective) <= 1e-6 && fit.max_moment_residual <= 1e-6;
  if (!residual_ok || margin < 0.0) {
    fit.diagnostics.converged = false;
    std::ostringstream os;
    os << "multiplier fit stalled: residual " << std::sqrt(fit.residual_objective) << ", margin " << margin;
    fit.diagnostics.message = os.str();
  }
  return fit;
}

}  // namespace spd
