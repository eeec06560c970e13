#pragma once

// Moment-matched maximum-entropy references: uniform, truncated exponential,
// Beta scaled to an interval, and the unbounded normal (density only).

#include <optional>
#include <string>
#include <vector>

#include "spd/density.hpp"

namespace spd {

enum class ReferenceKind { uniform, truncated_exponential, scaled_beta, normal };

std::string to_string(ReferenceKind kind);
ReferenceKind reference_kind_from_string(const std::string& name);

class ReferenceDistribution {
 public:
  static ReferenceDistribution uniform(const Interval& interval);
  /// rate > 0 decays from a, rate < 0 grows toward b, rate == 0 is uniform.
  static ReferenceDistribution truncated_exponential(const Interval& interval, double rate);
  static ReferenceDistribution scaled_beta(const Interval& interval, double alpha, double beta);
  static ReferenceDistribution normal(double mean, double variance);

  ReferenceKind kind() const noexcept { return kind_; }
  /// Empty for the normal.
  const std::optional<Interval>& support() const noexcept { return support_; }
  const std::vector<double>& parameters() const noexcept { return params_; }

  double density(double x) const;
  double mean() const;
  double variance() const;

 private:
  ReferenceDistribution(ReferenceKind kind, std::optional<Interval> support, std::vector<double> params);

  ReferenceKind kind_;
  std::optional<Interval> support_;
  std::vector<double> params_;
};

/// Mean of the truncated exponential with the given rate on `interval`.
double truncated_exponential_mean(const Interval& interval, double rate);

/// Rate whose truncated exponential has the requested mean, by bisection.
ReferenceDistribution match_truncated_exponential(const Interval& interval, double mean);

/// Beta shapes from mean and variance after mapping the interval to [0, 1].
ReferenceDistribution match_scaled_beta(const Interval& interval, double mean, double variance);

/// Arc length of the reference CDF by adaptive Gauss-Kronrod quadrature.
/// Beta references are integrated in the variable x = a + (b-a) sin^2(t),
/// which removes the endpoint singularities when a shape is below 1.
double reference_path_length(const ReferenceDistribution& dist, double tolerance = 1e-10);

/// Midpoint samples of the reference density on the partition.
PiecewiseDensity reference_density_on(const Partition& partition, const ReferenceDistribution& dist);

/// Maximum-entropy reference matching a moment spec on an interval:
/// m=0 uniform, m=1 truncated exponential, m=2 scaled Beta.
ReferenceDistribution match_reference(const Interval& interval, const MomentSpec& spec);

}  // namespace spd
