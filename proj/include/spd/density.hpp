#pragma once

// Grid construction, piecewise-constant densities and the functionals the
// solvers work with: raw moments, CDF, arc length of the CDF and the
// uniformity index.

#include <cstddef>
#include <span>
#include <vector>

namespace spd {

/// Closed, finite interval [a, b] with a < b.
class Interval {
 public:
  Interval(double a, double b);

  double lower() const noexcept { return a_; }
  double upper() const noexcept { return b_; }
  double length() const noexcept { return b_ - a_; }
  double center() const noexcept { return 0.5 * (a_ + b_); }
  bool contains(double x) const noexcept { return x >= a_ && x <= b_; }

  friend bool operator==(const Interval&, const Interval&) = default;

 private:
  double a_;
  double b_;
};

/// n equal cells of an interval. Cell i (0-based here, 1-based in files)
/// spans [boundary(i), boundary(i+1)] and has midpoint a + (2i+1)h/2.
class Partition {
 public:
  Partition(Interval interval, std::size_t n);

  const Interval& interval() const noexcept { return interval_; }
  std::size_t size() const noexcept { return midpoints_.size(); }
  double cell_width() const noexcept { return width_; }
  std::span<const double> midpoints() const noexcept { return midpoints_; }
  double midpoint(std::size_t i) const { return midpoints_.at(i); }

  /// x_i = a + i (b - a) / n for i = 0..n; x_n is exactly b.
  double boundary(std::size_t i) const;

  friend bool operator==(const Partition& l, const Partition& r) {
    return l.interval_ == r.interval_ && l.size() == r.size();
  }

 private:
  Interval interval_;
  double width_;
  std::vector<double> midpoints_;
};

Partition make_partition(Interval interval, std::size_t n);

/// Exact integrals of z^k over each cell: (x_i^{k+1} - x_{i-1}^{k+1}) / (k+1).
std::vector<double> moment_weights(const Partition& partition, int k);

/// Nonnegative, finite density values, one per cell.
class PiecewiseDensity {
 public:
  PiecewiseDensity(Partition partition, std::vector<double> values);

  const Partition& partition() const noexcept { return partition_; }
  const Interval& interval() const noexcept { return partition_.interval(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const noexcept { return values_.size(); }
  double peak() const;

 private:
  Partition partition_;
  std::vector<double> values_;
};

/// Constant density 1/(b - a).
PiecewiseDensity uniform_density(const Partition& partition);

double raw_moment(const PiecewiseDensity& density, int k);
std::vector<double> raw_moments(const PiecewiseDensity& density, int max_order);

/// delta_n * sum_i sqrt(1 + f_i^2), the arc length of the piecewise-linear CDF.
double path_length(const PiecewiseDensity& density);

/// sqrt(1 + (b - a)^2): CDF length of the uniform distribution.
double straight_line_length(const Interval& interval);

/// sqrt(1 + (b - a)^2) / (1 + b - a): the index of a point mass.
double uniformity_lower_bound(const Interval& interval);

double uniformity_index(const PiecewiseDensity& density);

/// Piecewise-linear CDF. Throws ErrorCode::domain outside [a, b].
double cdf(const PiecewiseDensity& density, double x);

/// Absolute tolerance on the zeroth moment for a density to count as normalized.
inline constexpr double normalization_tolerance = 1e-8;

/// Target raw moments mu_0..mu_m with mu_0 = 1.
class MomentSpec {
 public:
  /// Validates mu_0 == 1 and, for m <= 2, strict attainability on `support`:
  /// a < mu_1 < b and mu_1^2 < mu_2 < mu_1 (a + b) - a b.
  MomentSpec(std::vector<double> targets, const Interval& support);

  /// Validates mu_0 == 1 only; attainability is checked later against an interval.
  explicit MomentSpec(std::vector<double> targets);

  /// Builds mu_0..mu_2 from a mean and a variance (mu_2 = var + mean^2).
  static MomentSpec from_mean_variance(double mean, double variance, const Interval& support);

  int order() const noexcept { return static_cast<int>(targets_.size()) - 1; }
  std::span<const double> targets() const noexcept { return targets_; }
  double operator[](int k) const { return targets_.at(static_cast<std::size_t>(k)); }

  /// Throws ErrorCode::infeasible when the targets cannot be met by a
  /// density on `support` (checked for m <= 2 only).
  void require_attainable(const Interval& support) const;

  double mean() const;
  double variance() const;

 private:
  std::vector<double> targets_;
};

}  // namespace spd
