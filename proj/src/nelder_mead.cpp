#include <algorithm>
#include <cmath>
#include <numeric>

#include "spd/errors.hpp"
#include "spd/optimizer.hpp"

namespace spd::opt {

namespace {

using Point = std::vector<double>;

struct Simplex {
  std::vector<Point> vertices;
  std::vector<double> values;
};

void clamp_to_box(Point& x, std::span<const double> lower, std::span<const double> upper) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!lower.empty()) x[i] = std::max(x[i], lower[i]);
    if (!upper.empty()) x[i] = std::min(x[i], upper[i]);
  }
}

double simplex_extent(const Simplex& s) {
  double extent = 0.0;
  const Point& best = s.vertices.front();
  for (std::size_t j = 1; j < s.vertices.size(); ++j) {
    for (std::size_t i = 0; i < best.size(); ++i) {
      extent = std::max(extent, std::abs(s.vertices[j][i] - best[i]));
    }
  }
  return extent;
}

void sort_simplex(Simplex& s) {
  std::vector<std::size_t> order(s.values.size());
  std::iota(order.begin(), order.end(), 0);
  // stable_sort keeps tie-breaking deterministic
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return s.values[l] < s.values[r]; });
  Simplex sorted;
  for (std::size_t j : order) {
    sorted.vertices.push_back(s.vertices[j]);
    sorted.values.push_back(s.values[j]);
  }
  s = std::move(sorted);
}

}  // namespace

NelderMeadResult nelder_mead(const ScalarFn& fn, std::span<const double> initial, const NelderMeadOptions& options,
                             std::span<const double> lower, std::span<const double> upper,
                             const std::function<void(int, double)>& on_iteration) {
  const std::size_t dim = initial.size();
  if (dim == 0) throw Error(ErrorCode::invalid_argument, "Nelder-Mead needs at least one variable");

  constexpr double reflect = 1.0;
  constexpr double expand = 2.0;
  constexpr double contract = 0.5;
  constexpr double shrink = 0.5;

  NelderMeadResult result;
  auto eval = [&](const Point& x) {
    ++result.evaluations;
    const double v = fn(x);
    if (!std::isfinite(v)) throw NonFiniteError("objective is not finite during Nelder-Mead", x);
    return v;
  };

  Point start(initial.begin(), initial.end());
  clamp_to_box(start, lower, upper);
  std::vector<double> step = options.initial_step;
  if (step.empty()) {
    step.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) step[i] = start[i] != 0.0 ? 0.05 * std::abs(start[i]) : 0.00025;
  }

  const std::vector<double> base_step = step;
  result.point = start;
  result.value = eval(start);

  for (int restart = 0; restart <= options.max_restarts; ++restart) {
    Simplex s;
    s.vertices.push_back(result.point);
    s.values.push_back(result.value);
    for (std::size_t i = 0; i < dim; ++i) {
      Point v = result.point;
      v[i] += step[i];
      clamp_to_box(v, lower, upper);
      if (v[i] == result.point[i]) {
        v[i] -= step[i];
        clamp_to_box(v, lower, upper);
      }
      s.values.push_back(eval(v));
      s.vertices.push_back(std::move(v));
    }

    bool local_converged = false;
    while (result.evaluations < options.max_evaluations) {
      sort_simplex(s);
      ++result.iterations;
      if (on_iteration) on_iteration(result.iterations, s.values.front());

      const double spread = s.values.back() - s.values.front();
      const double scale = 1.0 + std::accumulate(s.vertices.front().begin(), s.vertices.front().end(), 0.0,
                                                 [](double m, double v) { return std::max(m, std::abs(v)); });
      if (spread <= options.f_tol + 1e-15 * std::abs(s.values.front()) ||
          simplex_extent(s) <= options.x_rtol * scale) {
        local_converged = true;
        break;
      }

      Point centroid(dim, 0.0);
      for (std::size_t j = 0; j < dim; ++j) {
        for (std::size_t i = 0; i < dim; ++i) centroid[i] += s.vertices[j][i];
      }
      for (double& c : centroid) c /= static_cast<double>(dim);

      auto along = [&](double t) {
        Point p(dim);
        for (std::size_t i = 0; i < dim; ++i) p[i] = centroid[i] + t * (centroid[i] - s.vertices.back()[i]);
        clamp_to_box(p, lower, upper);
        return p;
      };

      Point xr = along(reflect);
      const double fr = eval(xr);
      if (fr < s.values.front()) {
        Point xe = along(expand);
        const double fe = eval(xe);
        if (fe < fr) {
          s.vertices.back() = std::move(xe);
          s.values.back() = fe;
        } else {
          s.vertices.back() = std::move(xr);
          s.values.back() = fr;
        }
        continue;
      }
      if (fr < s.values[dim - 1]) {
        s.vertices.back() = std::move(xr);
        s.values.back() = fr;
        continue;
      }
      const bool outside = fr < s.values.back();
      Point xc = along(outside ? contract : -contract);
      const double fc = eval(xc);
      if (fc < std::min(fr, s.values.back())) {
        s.vertices.back() = std::move(xc);
        s.values.back() = fc;
        continue;
      }
      for (std::size_t j = 1; j <= dim; ++j) {
        for (std::size_t i = 0; i < dim; ++i) {
          s.vertices[j][i] = s.vertices[0][i] + shrink * (s.vertices[j][i] - s.vertices[0][i]);
        }
        clamp_to_box(s.vertices[j], lower, upper);
        s.values[j] = eval(s.vertices[j]);
      }
    }
    sort_simplex(s);

    const double previous = result.value;
    if (s.values.front() <= result.value) {
      result.point = s.vertices.front();
      result.value = s.values.front();
    }
    if (!local_converged) break;
    // A restart that cannot improve on the previous optimum confirms it.
    if (restart > 0 && !(result.value < previous)) {
      result.converged = true;
      break;
    }
    for (std::size_t i = 0; i < dim; ++i) step[i] = base_step[i] * std::pow(0.3, restart + 1);
    if (restart == options.max_restarts) result.converged = true;
  }
  return result;
}

}  // namespace spd::opt
