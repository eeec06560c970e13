#include "spd/reference.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "spd/errors.hpp"

namespace spd {

namespace {

constexpr double kRateBracket = 1e4;
constexpr double kSeriesThreshold = 1e-4;

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

/// Beta density on [0, 1] given t and 1 - t separately to avoid cancellation.
double unit_beta_density(double t, double one_minus_t, double alpha, double beta) {
  if (t <= 0.0) return alpha < 1.0 ? std::numeric_limits<double>::infinity() : (alpha == 1.0 ? std::exp(-log_beta(alpha, beta)) : 0.0);
  if (one_minus_t <= 0.0) return beta < 1.0 ? std::numeric_limits<double>::infinity() : (beta == 1.0 ? std::exp(-log_beta(alpha, beta)) : 0.0);
  return std::exp((alpha - 1.0) * std::log(t) + (beta - 1.0) * std::log(one_minus_t) - log_beta(alpha, beta));
}

bool same_interval(const Interval& l, const Interval& r) {
  const double scale = std::max({1.0, std::abs(l.lower()), std::abs(l.upper())});
  return std::abs(l.lower() - r.lower()) <= 1e-12 * scale && std::abs(l.upper() - r.upper()) <= 1e-12 * scale;
}

}  // namespace

std::string to_string(ReferenceKind kind) {
  switch (kind) {
    case ReferenceKind::uniform: return "uniform";
    case ReferenceKind::truncated_exponential: return "truncated_exponential";
    case ReferenceKind::scaled_beta: return "scaled_beta";
    case ReferenceKind::normal: return "normal";
  }
  return "unknown";
}

ReferenceKind reference_kind_from_string(const std::string& name) {
  if (name == "uniform") return ReferenceKind::uniform;
  if (name == "truncated_exponential") return ReferenceKind::truncated_exponential;
  if (name == "scaled_beta") return ReferenceKind::scaled_beta;
  if (name == "normal") return ReferenceKind::normal;
  throw Error(ErrorCode::invalid_argument, "unknown reference kind '" + name + "'");
}

ReferenceDistribution::ReferenceDistribution(ReferenceKind kind, std::optional<Interval> support,
                                             std::vector<double> params)
    : kind_(kind), support_(std::move(support)), params_(std::move(params)) {}

ReferenceDistribution ReferenceDistribution::uniform(const Interval& interval) {
  return ReferenceDistribution(ReferenceKind::uniform, interval, {});
}

ReferenceDistribution ReferenceDistribution::truncated_exponential(const Interval& interval, double rate) {
  if (!std::isfinite(rate)) throw Error(ErrorCode::invalid_argument, "rate must be finite");
  return ReferenceDistribution(ReferenceKind::truncated_exponential, interval, {rate});
}

ReferenceDistribution ReferenceDistribution::scaled_beta(const Interval& interval, double alpha, double beta) {
  if (!(alpha > 0.0 && beta > 0.0 && std::isfinite(alpha) && std::isfinite(beta))) {
    throw Error(ErrorCode::invalid_argument, "Beta shapes must be positive and finite");
  }
  return ReferenceDistribution(ReferenceKind::scaled_beta, interval, {alpha, beta});
}

ReferenceDistribution ReferenceDistribution::normal(double mean, double variance) {
  if (!(variance > 0.0) || !std::isfinite(mean) || !std::isfinite(variance)) {
    throw Error(ErrorCode::invalid_argument, "normal needs a finite mean and positive variance");
  }
  return ReferenceDistribution(ReferenceKind::normal, std::nullopt, {mean, variance});
}

double ReferenceDistribution::density(double x) const {
  if (kind_ == ReferenceKind::normal) {
    const double mu = params_[0], var = params_[1];
    const double z = x - mu;
    return std::exp(-0.5 * z * z / var) / std::sqrt(2.0 * boost::math::constants::pi<double>() * var);
  }
  const Interval& iv = *support_;
  if (!iv.contains(x)) return 0.0;
  const double len = iv.length();
  switch (kind_) {
    case ReferenceKind::uniform:
      return 1.0 / len;
    case ReferenceKind::truncated_exponential: {
      const double r = params_[0];
      if (r == 0.0) return 1.0 / len;
      if (r > 0.0) return r * std::exp(-r * (x - iv.lower())) / -std::expm1(-r * len);
      const double s = -r;
      return s * std::exp(-s * (iv.upper() - x)) / -std::expm1(-s * len);
    }
    case ReferenceKind::scaled_beta: {
      const double t = (x - iv.lower()) / len;
      const double u = (iv.upper() - x) / len;
      return unit_beta_density(t, u, params_[0], params_[1]) / len;
    }
    default:
      break;
  }
  return 0.0;
}

double truncated_exponential_mean(const Interval& interval, double rate) {
  const double len = interval.length();
  const double u = rate * len;
  if (std::abs(u) < kSeriesThreshold) {
    return interval.lower() + len * (0.5 - u / 12.0 + u * u * u / 720.0);
  }
  return interval.lower() + 1.0 / rate - len / std::expm1(u);
}

double ReferenceDistribution::mean() const {
  switch (kind_) {
    case ReferenceKind::uniform:
      return support_->center();
    case ReferenceKind::truncated_exponential:
      return truncated_exponential_mean(*support_, params_[0]);
    case ReferenceKind::scaled_beta:
      return support_->lower() + support_->length() * params_[0] / (params_[0] + params_[1]);
    case ReferenceKind::normal:
      return params_[0];
  }
  return 0.0;
}

double ReferenceDistribution::variance() const {
  switch (kind_) {
    case ReferenceKind::uniform:
      return support_->length() * support_->length() / 12.0;
    case ReferenceKind::truncated_exponential: {
      const double len = support_->length();
      const double u = params_[0] * len;
      if (std::abs(u) < kSeriesThreshold) return len * len * (1.0 / 12.0 - u * u / 720.0);
      // 1/r^2 - L^2 e^u / (e^u - 1)^2
      return 1.0 / (params_[0] * params_[0]) - len * len / (std::expm1(u) * -std::expm1(-u));
    }
    case ReferenceKind::scaled_beta: {
      const double a = params_[0], b = params_[1], len = support_->length();
      return len * len * a * b / ((a + b) * (a + b) * (a + b + 1.0));
    }
    case ReferenceKind::normal:
      return params_[1];
  }
  return 0.0;
}

ReferenceDistribution match_truncated_exponential(const Interval& interval, double mean) {
  if (!(mean > interval.lower() && mean < interval.upper())) {
    throw Error(ErrorCode::infeasible, "truncated exponential mean must lie strictly inside the interval");
  }
  if (mean == interval.center()) return ReferenceDistribution::truncated_exponential(interval, 0.0);

  // The mean decreases monotonically in the rate.
  double lo = -kRateBracket, hi = kRateBracket;
  if (!(truncated_exponential_mean(interval, hi) <= mean && truncated_exponential_mean(interval, lo) >= mean)) {
    throw Error(ErrorCode::infeasible, "mean requires a rate outside the bisection bracket");
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (truncated_exponential_mean(interval, mid) > mean) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double rate = std::abs(truncated_exponential_mean(interval, lo) - mean) <=
                              std::abs(truncated_exponential_mean(interval, hi) - mean)
                          ? lo
                          : hi;
  return ReferenceDistribution::truncated_exponential(interval, rate);
}

ReferenceDistribution match_scaled_beta(const Interval& interval, double mean, double variance) {
  if (!(mean > interval.lower() && mean < interval.upper())) {
    throw Error(ErrorCode::infeasible, "Beta mean must lie strictly inside the interval");
  }
  const double limit = (mean - interval.lower()) * (interval.upper() - mean);
  if (!(variance > 0.0 && variance < limit)) {
    throw Error(ErrorCode::infeasible, "Beta variance must lie in (0, (mean-a)(b-mean))");
  }
  const double len = interval.length();
  const double t = (mean - interval.lower()) / len;
  const double v = variance / (len * len);
  const double common = t * (1.0 - t) / v - 1.0;
  return ReferenceDistribution::scaled_beta(interval, t * common, (1.0 - t) * common);
}

double reference_path_length(const ReferenceDistribution& dist, double tolerance) {
  using boost::math::quadrature::gauss_kronrod;
  if (dist.kind() == ReferenceKind::normal) {
    throw Error(ErrorCode::unsupported, "path length is not defined for the unbounded normal reference");
  }
  const Interval& iv = *dist.support();
  constexpr unsigned max_depth = 30;
  double error = 0.0;
  if (dist.kind() == ReferenceKind::scaled_beta) {
    const double alpha = dist.parameters()[0], beta = dist.parameters()[1];
    const double len = iv.length();
    auto integrand = [&](double theta) {
      const double s = std::sin(theta), c = std::cos(theta);
      const double jac = 2.0 * len * s * c;
      if (jac == 0.0) {
        // Limits at the endpoints: only f dx survives where f is singular.
        return 0.0;
      }
      const double f = unit_beta_density(s * s, c * c, alpha, beta) / len;
      return std::hypot(1.0, f) * jac;
    };
    return gauss_kronrod<double, 61>::integrate(integrand, 0.0, boost::math::constants::half_pi<double>(), max_depth,
                                                tolerance, &error);
  }
  auto integrand = [&](double x) { return std::hypot(1.0, dist.density(x)); };
  return gauss_kronrod<double, 61>::integrate(integrand, iv.lower(), iv.upper(), max_depth, tolerance, &error);
}

PiecewiseDensity reference_density_on(const Partition& partition, const ReferenceDistribution& dist) {
  if (dist.kind() == ReferenceKind::normal) {
    throw Error(ErrorCode::unsupported, "the normal reference has unbounded support");
  }
  if (!same_interval(partition.interval(), *dist.support())) {
    throw Error(ErrorCode::invalid_argument, "partition interval differs from the reference support");
  }
  std::vector<double> values(partition.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = dist.density(partition.midpoint(i));
  return PiecewiseDensity(partition, std::move(values));
}

ReferenceDistribution match_reference(const Interval& interval, const MomentSpec& spec) {
  switch (spec.order()) {
    case 0:
      return ReferenceDistribution::uniform(interval);
    case 1:
      return match_truncated_exponential(interval, spec.mean());
    case 2:
      return match_scaled_beta(interval, spec.mean(), spec.variance());
    default:
      throw Error(ErrorCode::unsupported, "no maximum-entropy reference is provided for m > 2");
  }
}

}  // namespace spd
