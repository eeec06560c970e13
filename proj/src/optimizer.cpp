#include "spd/optimizer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "spd/errors.hpp"

namespace spd::opt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double lower_of(const ObjectiveProblem& p, std::size_t i) { return p.lower.empty() ? -kInf : p.lower[i]; }
double upper_of(const ObjectiveProblem& p, std::size_t i) { return p.upper.empty() ? kInf : p.upper[i]; }

void project(const ObjectiveProblem& p, std::span<double> x) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower_of(p, i), upper_of(p, i));
}

double checked(double v, const char* what, std::span<const double> x) {
  if (!std::isfinite(v)) {
    throw NonFiniteError(std::string(what) + " is not finite", std::vector<double>(x.begin(), x.end()));
  }
  return v;
}

std::vector<double> constraint_gradient(const ObjectiveProblem& p, const Constraint& c, std::span<const double> x) {
  std::vector<double> g(x.size());
  if (c.gradient) {
    c.gradient(x, g);
  } else {
    g = central_difference(c.value, x, p.lower, p.upper);
  }
  return g;
}

/// Augmented Lagrangian at fixed multipliers and penalty:
///   f - sum y_e c_e + rho/2 sum c_e^2 + sum psi(g_j, z_j, rho)
/// with psi(g, z, rho) = -z g + rho/2 g^2 if z - rho g > 0, else -z^2 / (2 rho).
class AugmentedLagrangian {
 public:
  AugmentedLagrangian(const ObjectiveProblem& problem, std::span<const double> eq_mult,
                      std::span<const double> ineq_mult, double penalty)
      : p_(problem), y_(eq_mult), z_(ineq_mult), rho_(penalty) {}

  double value(std::span<const double> x) const {
    double v = checked(p_.objective(x), "objective", x);
    for (std::size_t e = 0; e < p_.equalities.size(); ++e) {
      const double c = checked(p_.equalities[e].value(x), "equality constraint", x);
      v += -y_[e] * c + 0.5 * rho_ * c * c;
    }
    for (std::size_t j = 0; j < p_.inequalities.size(); ++j) {
      const double g = checked(p_.inequalities[j].value(x), "inequality constraint", x);
      v += hinge(g, z_[j]);
    }
    return v;
  }

  double objective(std::span<const double> x) const { return p_.objective(x); }

  std::vector<double> gradient(std::span<const double> x) const {
    std::vector<double> grad = objective_gradient(p_, x);
    for (std::size_t e = 0; e < p_.equalities.size(); ++e) {
      const double c = p_.equalities[e].value(x);
      const double w = -(y_[e] - rho_ * c);
      if (w == 0.0) continue;
      const auto a = constraint_gradient(p_, p_.equalities[e], x);
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += w * a[i];
    }
    for (std::size_t j = 0; j < p_.inequalities.size(); ++j) {
      const double g = p_.inequalities[j].value(x);
      const double w = -std::max(0.0, z_[j] - rho_ * g);
      if (w == 0.0) continue;
      const auto a = constraint_gradient(p_, p_.inequalities[j], x);
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += w * a[i];
    }
    for (double g : grad) checked(g, "gradient", x);
    return grad;
  }

  /// Constraint gradients that carry curvature rho * a a^T in the model Hessian.
  std::vector<std::vector<double>> curvature_directions(std::span<const double> x) const {
    std::vector<std::vector<double>> dirs;
    for (const auto& c : p_.equalities) dirs.push_back(constraint_gradient(p_, c, x));
    for (std::size_t j = 0; j < p_.inequalities.size(); ++j) {
      if (z_[j] - rho_ * p_.inequalities[j].value(x) > 0.0) {
        dirs.push_back(constraint_gradient(p_, p_.inequalities[j], x));
      }
    }
    return dirs;
  }

  double penalty() const { return rho_; }

 private:
  double hinge(double g, double z) const {
    if (z - rho_ * g > 0.0) return -z * g + 0.5 * rho_ * g * g;
    return -z * z / (2.0 * rho_);
  }

  const ObjectiveProblem& p_;
  std::span<const double> y_;
  std::span<const double> z_;
  double rho_;
};

double max_violation(const ObjectiveProblem& p, std::span<const double> x) {
  double v = 0.0;
  for (const auto& c : p.equalities) v = std::max(v, std::abs(c.value(x)));
  for (const auto& c : p.inequalities) v = std::max(v, std::max(0.0, -c.value(x)));
  return v;
}

double max_equality_violation(const ObjectiveProblem& p, std::span<const double> x) {
  double v = 0.0;
  for (const auto& c : p.equalities) v = std::max(v, std::abs(c.value(x)));
  return v;
}

struct InnerOutcome {
  int iterations = 0;
  bool converged = false;
};

double projected_gradient_norm(const ObjectiveProblem& p, std::span<const double> x, std::span<const double> g) {
  double r = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double moved = std::clamp(x[i] - g[i], lower_of(p, i), upper_of(p, i));
    r = std::max(r, std::abs(x[i] - moved));
  }
  return r;
}

/// Projected Newton iteration (Bertsekas) on a diagonal-plus-low-rank model
/// of the augmented Lagrangian Hessian: D + rho * sum a a^T, where D is the
/// objective's Hessian diagonal when supplied and a secant scalar otherwise.
InnerOutcome projected_quasi_newton(const ObjectiveProblem& p, const AugmentedLagrangian& al, std::vector<double>& x,
                                    const SolverConfig& cfg, int outer, int& trace_counter) {
  const std::size_t n = x.size();
  InnerOutcome out;
  double merit = al.value(x);
  std::vector<double> grad = al.gradient(x);
  double secant_scale = 1.0;
  std::vector<double> diag(n);

  for (int it = 0; it < cfg.max_inner; ++it) {
    const double pg = projected_gradient_norm(p, x, grad);
    if (pg <= cfg.inner_tol) {
      out.converged = true;
      break;
    }

    if (p.hessian_diagonal) {
      p.hessian_diagonal(x, diag);
    } else {
      std::fill(diag.begin(), diag.end(), secant_scale);
    }
    const double dmax = std::max(*std::max_element(diag.begin(), diag.end()), 1e-300);
    for (double& d : diag) d = std::max(d, 1e-14 * dmax);

    // Bound-active set: near a bound and the gradient pushes outward.
    const double eps = std::min(1e-8, pg);
    std::vector<char> active(n, 0);
    std::vector<std::size_t> free_idx;
    for (std::size_t i = 0; i < n; ++i) {
      const bool at_lower = x[i] <= lower_of(p, i) + eps && grad[i] > 0.0;
      const bool at_upper = x[i] >= upper_of(p, i) - eps && grad[i] < 0.0;
      active[i] = at_lower || at_upper;
      if (!active[i]) free_idx.push_back(i);
    }

    std::vector<double> dir(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (active[i]) dir[i] = -grad[i] / diag[i];
    }
    if (!free_idx.empty()) {
      const auto curv = al.curvature_directions(x);
      const std::size_t k = curv.size();
      const double root_rho = std::sqrt(al.penalty());
      const auto nf = static_cast<Eigen::Index>(free_idx.size());
      Eigen::VectorXd dinv(nf), gf(nf);
      Eigen::MatrixXd u(nf, static_cast<Eigen::Index>(k));
      for (Eigen::Index r = 0; r < nf; ++r) {
        const std::size_t i = free_idx[static_cast<std::size_t>(r)];
        dinv[r] = 1.0 / diag[i];
        gf[r] = grad[i];
        for (std::size_t c = 0; c < k; ++c) u(r, static_cast<Eigen::Index>(c)) = root_rho * curv[c][i];
      }
      // Woodbury: (D + U U^T)^{-1} g = D^{-1} g - D^{-1} U (I + U^T D^{-1} U)^{-1} U^T D^{-1} g
      Eigen::VectorXd step = dinv.cwiseProduct(gf);
      if (k > 0) {
        const Eigen::MatrixXd du = dinv.asDiagonal() * u;
        Eigen::MatrixXd cap = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
        cap.noalias() += u.transpose() * du;
        const Eigen::VectorXd rhs = u.transpose() * step;
        step -= du * cap.ldlt().solve(rhs);
      }
      for (Eigen::Index r = 0; r < nf; ++r) dir[free_idx[static_cast<std::size_t>(r)]] = -step[r];
    }

    // Armijo backtracking along the projection arc.
    std::vector<double> trial(n);
    double t = 1.0;
    bool accepted = false;
    double trial_merit = merit;
    for (int ls = 0; ls < 80; ++ls) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + t * dir[i];
      project(p, trial);
      double decrease = 0.0;
      for (std::size_t i = 0; i < n; ++i) decrease += grad[i] * (trial[i] - x[i]);
      if (decrease >= 0.0) {
        t *= 0.5;
        continue;
      }
      trial_merit = al.value(trial);
      if (trial_merit <= merit + 1e-4 * decrease) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // No descent left at working precision.
      out.converged = pg <= 1e3 * cfg.inner_tol;
      break;
    }

    std::vector<double> new_grad = al.gradient(trial);
    if (!p.hessian_diagonal) {
      double sy = 0.0, ss = 0.0;
      const auto curv = al.curvature_directions(trial);
      for (std::size_t i = 0; i < n; ++i) {
        const double s = trial[i] - x[i];
        ss += s * s;
        sy += s * (new_grad[i] - grad[i]);
      }
      for (const auto& a : curv) {
        double as = 0.0;
        for (std::size_t i = 0; i < n; ++i) as += a[i] * (trial[i] - x[i]);
        sy -= al.penalty() * as * as;
      }
      if (ss > 0.0 && sy > 0.0) secant_scale = std::clamp(sy / ss, 1e-10, 1e10);
    }

    const double previous = merit;
    x = trial;
    merit = trial_merit;
    grad = std::move(new_grad);
    ++out.iterations;
    if (cfg.trace) {
      cfg.trace({outer, ++trace_counter, merit, al.objective(x), al.penalty(), max_violation(p, x)});
    }
    if (previous - merit <= 1e-16 * std::abs(merit) && t < 1e-10) {
      out.converged = projected_gradient_norm(p, x, grad) <= 1e3 * cfg.inner_tol;
      break;
    }
  }
  return out;
}

InnerOutcome nelder_mead_inner(const ObjectiveProblem& p, const AugmentedLagrangian& al, std::vector<double>& x,
                               const SolverConfig& cfg, const std::vector<double>& step, int outer,
                               int& trace_counter) {
  NelderMeadOptions opts;
  opts.max_evaluations = std::max(cfg.max_inner, 1) * static_cast<int>(x.size() + 2);
  opts.initial_step = step;
  auto on_iter = [&](int, double best) {
    if (cfg.trace) cfg.trace({outer, ++trace_counter, best, std::numeric_limits<double>::quiet_NaN(), al.penalty(),
                              std::numeric_limits<double>::quiet_NaN()});
  };
  const auto res = nelder_mead([&](std::span<const double> v) { return al.value(v); }, x, opts, p.lower, p.upper,
                               on_iter);
  x = res.point;
  return {res.iterations, res.converged};
}

void validate(const ObjectiveProblem& p, std::span<const double> initial, const SolverConfig& cfg) {
  if (p.dimension == 0) throw Error(ErrorCode::invalid_argument, "problem dimension must be positive");
  if (!p.objective) throw Error(ErrorCode::invalid_argument, "problem has no objective");
  if (initial.size() != p.dimension) throw Error(ErrorCode::invalid_argument, "initial point has wrong dimension");
  if ((!p.lower.empty() && p.lower.size() != p.dimension) || (!p.upper.empty() && p.upper.size() != p.dimension)) {
    throw Error(ErrorCode::invalid_argument, "bound vectors must match the problem dimension");
  }
  for (std::size_t i = 0; i < p.dimension; ++i) {
    if (initial[i] < lower_of(p, i) || initial[i] > upper_of(p, i)) {
      throw Error(ErrorCode::invalid_argument, "initial point violates the bound constraints");
    }
  }
  if (!(cfg.eq_tol > 0.0 && cfg.kkt_tol > 0.0 && cfg.inner_tol > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "solver tolerances must be positive");
  }
}

}  // namespace

std::vector<double> central_difference(const ScalarFn& fn, std::span<const double> point, std::span<const double> lower,
                                       std::span<const double> upper) {
  const std::size_t n = point.size();
  std::vector<double> x(point.begin(), point.end());
  std::vector<double> g(n);
  const double base_step = std::cbrt(std::numeric_limits<double>::epsilon());
  for (std::size_t i = 0; i < n; ++i) {
    const double h = base_step * std::max(1.0, std::abs(x[i]));
    const double lo = lower.empty() ? -kInf : lower[i];
    const double hi = upper.empty() ? kInf : upper[i];
    const double xi = x[i];
    if (xi - h < lo) {
      x[i] = xi + h;
      const double fp = fn(x);
      x[i] = xi + 2.0 * h;
      const double fpp = fn(x);
      x[i] = xi;
      const double f0 = fn(x);
      g[i] = (-3.0 * f0 + 4.0 * fp - fpp) / (2.0 * h);
    } else if (xi + h > hi) {
      x[i] = xi - h;
      const double fm = fn(x);
      x[i] = xi - 2.0 * h;
      const double fmm = fn(x);
      x[i] = xi;
      const double f0 = fn(x);
      g[i] = (3.0 * f0 - 4.0 * fm + fmm) / (2.0 * h);
    } else {
      x[i] = xi + h;
      const double fp = fn(x);
      x[i] = xi - h;
      const double fm = fn(x);
      x[i] = xi;
      g[i] = (fp - fm) / (2.0 * h);
    }
  }
  return g;
}

std::vector<double> objective_gradient(const ObjectiveProblem& problem, std::span<const double> point) {
  std::vector<double> g(point.size());
  if (problem.gradient) {
    problem.gradient(point, g);
  } else {
    g = central_difference(problem.objective, point, problem.lower, problem.upper);
  }
  return g;
}

namespace {

std::vector<double> lagrangian_gradient(const ObjectiveProblem& p, std::span<const double> x,
                                        std::span<const double> multipliers) {
  const std::size_t ne = p.equalities.size();
  auto grad = objective_gradient(p, x);
  for (std::size_t e = 0; e < ne; ++e) {
    const auto a = constraint_gradient(p, p.equalities[e], x);
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] -= multipliers[e] * a[i];
  }
  for (std::size_t j = 0; j < p.inequalities.size(); ++j) {
    const double z = multipliers[ne + j];
    if (z == 0.0) continue;
    const auto a = constraint_gradient(p, p.inequalities[j], x);
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] -= z * a[i];
  }
  return grad;
}

}  // namespace

KktResiduals kkt_residuals(const ObjectiveProblem& problem, std::span<const double> point,
                           std::span<const double> multipliers) {
  const std::size_t ne = problem.equalities.size();
  const std::size_t ni = problem.inequalities.size();
  if (multipliers.size() != ne + ni) throw Error(ErrorCode::invalid_argument, "one multiplier per constraint expected");

  const auto grad = lagrangian_gradient(problem, point, multipliers);
  KktResiduals r;
  r.stationarity = projected_gradient_norm(problem, point, grad);
  r.feasibility = max_violation(problem, point);
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double lo = lower_of(problem, i);
    const double hi = upper_of(problem, i);
    if (std::isfinite(lo)) r.complementarity = std::max(r.complementarity, std::max(0.0, grad[i]) * (point[i] - lo));
    if (std::isfinite(hi)) r.complementarity = std::max(r.complementarity, std::max(0.0, -grad[i]) * (hi - point[i]));
  }
  for (std::size_t j = 0; j < ni; ++j) {
    r.complementarity =
        std::max(r.complementarity, std::abs(multipliers[ne + j] * problem.inequalities[j].value(point)));
  }
  return r;
}

double min_reduced_hessian_eigenvalue(const ObjectiveProblem& problem, std::span<const double> point,
                                      std::span<const double> multipliers) {
  const std::size_t n = point.size();
  const std::size_t ne = problem.equalities.size();

  std::vector<std::size_t> free_idx;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = lower_of(problem, i);
    const double hi = upper_of(problem, i);
    const double tol = 1e-12 * (1.0 + std::abs(point[i]));
    if (point[i] - lo > tol && hi - point[i] > tol) free_idx.push_back(i);
  }
  if (free_idx.empty()) return kInf;
  const auto nf = static_cast<Eigen::Index>(free_idx.size());

  // Jacobian rows: equalities plus strongly active inequalities.
  std::vector<std::vector<double>> rows;
  for (const auto& c : problem.equalities) rows.push_back(constraint_gradient(problem, c, point));
  for (std::size_t j = 0; j < problem.inequalities.size(); ++j) {
    if (multipliers[ne + j] > 0.0 && std::abs(problem.inequalities[j].value(point)) <= 1e-8) {
      rows.push_back(constraint_gradient(problem, problem.inequalities[j], point));
    }
  }

  // Columns of the Hessian from differences of the Lagrangian gradient.
  std::vector<double> x(point.begin(), point.end());
  Eigen::MatrixXd hess(nf, nf);
  const double base_step = 1e-6;
  for (Eigen::Index c = 0; c < nf; ++c) {
    const std::size_t i = free_idx[static_cast<std::size_t>(c)];
    const double xi = x[i];
    const double h = base_step * std::max(1.0, std::abs(xi));
    double up_step = h, down_step = h;
    if (xi - h < lower_of(problem, i)) down_step = 0.0;
    if (xi + h > upper_of(problem, i)) up_step = 0.0;
    x[i] = xi + up_step;
    const auto gp = lagrangian_gradient(problem, x, multipliers);
    x[i] = xi - down_step;
    const auto gm = lagrangian_gradient(problem, x, multipliers);
    x[i] = xi;
    for (Eigen::Index r = 0; r < nf; ++r) {
      const std::size_t k = free_idx[static_cast<std::size_t>(r)];
      hess(r, c) = (gp[k] - gm[k]) / (up_step + down_step);
    }
  }
  const Eigen::MatrixXd sym = 0.5 * (hess + hess.transpose());

  Eigen::MatrixXd basis;
  if (rows.empty()) {
    basis = Eigen::MatrixXd::Identity(nf, nf);
  } else {
    Eigen::MatrixXd jt(nf, static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (Eigen::Index c = 0; c < nf; ++c) jt(c, static_cast<Eigen::Index>(r)) = rows[r][free_idx[static_cast<std::size_t>(c)]];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(jt);
    const Eigen::Index rank = qr.rank();
    if (rank >= nf) return kInf;
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(nf, nf);
    basis = q.rightCols(nf - rank);
  }
  const Eigen::MatrixXd reduced = basis.transpose() * sym * basis;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(reduced, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

SolveResult minimize_auglag(const ObjectiveProblem& problem, std::span<const double> initial,
                            const SolverConfig& config) {
  validate(problem, initial, config);

  const std::size_t ne = problem.equalities.size();
  const std::size_t ni = problem.inequalities.size();
  const bool use_nm = config.method == InnerMethod::nelder_mead ||
                      (config.method == InnerMethod::automatic && problem.dimension <= config.nelder_mead_max_dimension);

  SolveResult result;
  result.diagnostics.method_tag = use_nm ? "auglag/nelder-mead" : "auglag/projected-quasi-newton";
  std::vector<double> x(initial.begin(), initial.end());
  std::vector<double> y(ne, 0.0);
  std::vector<double> z(ni, 0.0);
  double rho = config.initial_penalty;

  std::vector<double> nm_step;
  if (use_nm && !config.simplex_step.empty()) {
    if (config.simplex_step.size() != x.size()) throw Error(ErrorCode::invalid_argument, "simplex_step has wrong size");
    nm_step = config.simplex_step;
  } else if (use_nm) {
    nm_step.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) nm_step[i] = x[i] != 0.0 ? 0.05 * std::abs(x[i]) : 0.00025;
  }

  double previous_violation = max_violation(problem, x);
  double previous_objective = checked(problem.objective(x), "objective", x);
  int trace_counter = 0;
  bool stop = false;
  bool inner_ok = false;

  for (int outer = 1; outer <= config.max_outer && !stop; ++outer) {
    result.diagnostics.iterations = outer;
    std::vector<double> mult(y);
    mult.insert(mult.end(), z.begin(), z.end());
    AugmentedLagrangian al(problem, std::span<const double>(y), std::span<const double>(z), rho);

    const InnerOutcome inner = use_nm ? nelder_mead_inner(problem, al, x, config, nm_step, outer, trace_counter)
                                      : projected_quasi_newton(problem, al, x, config, outer, trace_counter);
    result.diagnostics.inner_iterations += inner.iterations;
    inner_ok = inner.converged;
    if (use_nm) {
      for (std::size_t i = 0; i < x.size(); ++i) nm_step[i] = std::max(nm_step[i] * 0.1, 1e-9 * std::abs(x[i]));
    }

    for (std::size_t e = 0; e < ne; ++e) y[e] -= rho * problem.equalities[e].value(x);
    for (std::size_t j = 0; j < ni; ++j) z[j] = std::max(0.0, z[j] - rho * problem.inequalities[j].value(x));

    const double violation = max_violation(problem, x);
    const double objective = checked(problem.objective(x), "objective", x);
    std::vector<double> updated(y);
    updated.insert(updated.end(), z.begin(), z.end());
    const auto kkt = kkt_residuals(problem, x, updated);
    const double rel_change = std::abs(objective - previous_objective) / std::max(1.0, std::abs(objective));

    if (violation <= config.eq_tol && kkt.stationarity <= config.kkt_tol && rel_change <= config.objective_rtol) {
      stop = true;
    }
    if (!stop && ne + ni == 0 && inner_ok) stop = true;
    if (violation > config.violation_shrink * previous_violation) rho = std::min(rho * config.penalty_growth, config.penalty_cap);
    previous_violation = violation;
    previous_objective = objective;
  }

  result.point = x;
  result.multipliers = y;
  result.multipliers.insert(result.multipliers.end(), z.begin(), z.end());
  auto& d = result.diagnostics;
  const auto kkt = kkt_residuals(problem, x, result.multipliers);
  d.objective_value = problem.objective(x);
  d.max_equality_violation = max_equality_violation(problem, x);
  d.kkt_stationarity_residual = kkt.stationarity;
  d.kkt_complementarity_residual = kkt.complementarity;
  d.final_penalty = rho;
  const bool certificate = kkt.feasibility <= config.eq_tol && kkt.stationarity <= config.kkt_tol;
  d.converged = stop && certificate;
  if (config.check_second_order) {
    const double lam = min_reduced_hessian_eigenvalue(problem, x, result.multipliers);
    d.min_reduced_hessian_eigenvalue = lam;
    if (lam < -config.second_order_tol) d.converged = false;
  }
  std::ostringstream msg;
  if (d.converged) {
    msg << "converged after " << d.iterations << " outer iterations";
  } else if (!stop) {
    msg << "outer iteration limit reached (" << config.max_outer << "); violation " << kkt.feasibility
        << ", stationarity " << kkt.stationarity;
  } else {
    msg << "stopped without meeting the KKT certificate";
  }
  d.message = msg.str();
  return result;
}

}  // namespace spd::opt
