#include "spd/density.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spd/errors.hpp"

namespace spd {

Interval::Interval(double a, double b) : a_(a), b_(b) {
  if (!std::isfinite(a) || !std::isfinite(b)) {
    throw Error(ErrorCode::invalid_argument, "interval bounds must be finite");
  }
  if (!(a < b)) {
    throw Error(ErrorCode::invalid_argument,
                "interval requires a < b (got a=" + std::to_string(a) + ", b=" + std::to_string(b) + ")");
  }
}

Partition::Partition(Interval interval, std::size_t n) : interval_(interval), width_(0.0) {
  if (n == 0) throw Error(ErrorCode::invalid_argument, "partition needs at least one cell");
  width_ = interval_.length() / static_cast<double>(n);
  midpoints_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    midpoints_[i] = 0.5 * (boundary(i) + boundary(i + 1));
  }
}

double Partition::boundary(std::size_t i) const {
  const std::size_t n = midpoints_.size();
  if (i > n) throw Error(ErrorCode::invalid_argument, "boundary index out of range");
  if (i == n) return interval_.upper();
  return interval_.lower() + interval_.length() * static_cast<double>(i) / static_cast<double>(n);
}

Partition make_partition(Interval interval, std::size_t n) { return Partition(interval, n); }

std::vector<double> moment_weights(const Partition& partition, int k) {
  if (k < 0) throw Error(ErrorCode::invalid_argument, "moment order must be nonnegative");
  const std::size_t n = partition.size();
  std::vector<double> w(n);
  // (u^{k+1} - l^{k+1})/(k+1) = (u - l) * sum_j u^j l^{k-j} / (k+1), free of cancellation.
  for (std::size_t i = 0; i < n; ++i) {
    const double l = partition.boundary(i);
    const double u = partition.boundary(i + 1);
    double acc = 0.0;
    double up = 1.0;
    for (int j = 0; j <= k; ++j) {
      acc += up * std::pow(l, k - j);
      up *= u;
    }
    w[i] = (u - l) * acc / static_cast<double>(k + 1);
  }
  return w;
}

PiecewiseDensity::PiecewiseDensity(Partition partition, std::vector<double> values)
    : partition_(std::move(partition)), values_(std::move(values)) {
  if (values_.size() != partition_.size()) {
    throw Error(ErrorCode::invalid_argument, "density needs one value per cell");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw Error(ErrorCode::invalid_argument, "density value in cell " + std::to_string(i + 1) + " is not finite");
    }
    if (values_[i] < 0.0) {
      throw Error(ErrorCode::negativity, "density value in cell " + std::to_string(i + 1) + " is negative");
    }
  }
}

double PiecewiseDensity::peak() const { return *std::max_element(values_.begin(), values_.end()); }

PiecewiseDensity uniform_density(const Partition& partition) {
  return PiecewiseDensity(partition, std::vector<double>(partition.size(), 1.0 / partition.interval().length()));
}

double raw_moment(const PiecewiseDensity& density, int k) {
  const auto w = moment_weights(density.partition(), k);
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) sum += density[i] * w[i];
  return sum;
}

std::vector<double> raw_moments(const PiecewiseDensity& density, int max_order) {
  std::vector<double> out;
  for (int k = 0; k <= max_order; ++k) out.push_back(raw_moment(density, k));
  return out;
}

double path_length(const PiecewiseDensity& density) {
  double sum = 0.0;
  for (double f : density.values()) sum += std::hypot(1.0, f);
  return density.partition().cell_width() * sum;
}

double straight_line_length(const Interval& interval) { return std::hypot(1.0, interval.length()); }

double uniformity_lower_bound(const Interval& interval) {
  return straight_line_length(interval) / (1.0 + interval.length());
}

double uniformity_index(const PiecewiseDensity& density) {
  return straight_line_length(density.interval()) / path_length(density);
}

double cdf(const PiecewiseDensity& density, double x) {
  const Interval& iv = density.interval();
  if (!iv.contains(x)) throw Error(ErrorCode::domain, "cdf argument outside the support");
  const Partition& p = density.partition();
  const double h = p.cell_width();
  const std::size_t n = p.size();
  auto cell = static_cast<std::size_t>(std::floor((x - iv.lower()) / h));
  cell = std::min(cell, n - 1);
  double mass = 0.0;
  for (std::size_t i = 0; i < cell; ++i) mass += density[i] * h;
  const double left = p.boundary(cell);
  return mass + density[cell] * std::max(0.0, x - left);
}

MomentSpec::MomentSpec(std::vector<double> targets) : targets_(std::move(targets)) {
  if (targets_.empty()) throw Error(ErrorCode::invalid_argument, "moment spec needs at least mu_0");
  if (targets_.front() != 1.0) throw Error(ErrorCode::invalid_argument, "mu_0 must equal 1");
  for (double t : targets_) {
    if (!std::isfinite(t)) throw Error(ErrorCode::invalid_argument, "moment targets must be finite");
  }
}

MomentSpec::MomentSpec(std::vector<double> targets, const Interval& support) : MomentSpec(std::move(targets)) {
  require_attainable(support);
}

MomentSpec MomentSpec::from_mean_variance(double mean, double variance, const Interval& support) {
  return MomentSpec({1.0, mean, variance + mean * mean}, support);
}

void MomentSpec::require_attainable(const Interval& support) const {
  const double a = support.lower();
  const double b = support.upper();
  if (order() >= 1) {
    const double m1 = targets_[1];
    if (!(m1 > a && m1 < b)) {
      throw Error(ErrorCode::infeasible, "mean " + std::to_string(m1) + " is not strictly inside the support");
    }
    if (order() >= 2) {
      const double m2 = targets_[2];
      const double hi = m1 * (a + b) - a * b;
      if (!(m2 > m1 * m1 && m2 < hi)) {
        throw Error(ErrorCode::infeasible, "second moment " + std::to_string(m2) + " is outside (" +
                                               std::to_string(m1 * m1) + ", " + std::to_string(hi) + ")");
      }
    }
  }
}

double MomentSpec::mean() const {
  if (order() < 1) throw Error(ErrorCode::invalid_argument, "moment spec has no mean");
  return targets_[1];
}

double MomentSpec::variance() const {
  if (order() < 2) throw Error(ErrorCode::invalid_argument, "moment spec has no second moment");
  return targets_[2] - targets_[1] * targets_[1];
}

}  // namespace spd
