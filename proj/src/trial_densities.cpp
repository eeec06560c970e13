#include "spd/trial_densities.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "spd/errors.hpp"

namespace spd {

std::optional<PiecewiseDensity> project_feasible(const Partition& partition, const MomentSpec& spec,
                                                 std::vector<double> values, double tolerance, int max_sweeps) {
  const auto n = static_cast<Eigen::Index>(partition.size());
  const auto rows = static_cast<Eigen::Index>(spec.order() + 1);
  if (static_cast<Eigen::Index>(values.size()) != n) {
    throw Error(ErrorCode::invalid_argument, "trial density has the wrong number of cells");
  }
  Eigen::MatrixXd w(rows, n);
  Eigen::VectorXd mu(rows);
  for (Eigen::Index k = 0; k < rows; ++k) {
    const auto wk = moment_weights(partition, static_cast<int>(k));
    for (Eigen::Index i = 0; i < n; ++i) w(k, i) = wk[static_cast<std::size_t>(i)];
    mu[k] = spec[static_cast<int>(k)];
  }
  const Eigen::LDLT<Eigen::MatrixXd> gram((w * w.transpose()).eval());
  Eigen::Map<Eigen::VectorXd> f(values.data(), n);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    f -= w.transpose() * gram.solve(w * f - mu);
    f = f.cwiseMax(0.0);
    if ((w * f - mu).cwiseAbs().maxCoeff() <= tolerance) {
      return PiecewiseDensity(partition, std::move(values));
    }
  }
  return std::nullopt;
}

std::vector<PiecewiseDensity> sample_feasible_densities(const Partition& partition, const MomentSpec& spec,
                                                        std::size_t count, std::uint64_t seed, double tolerance) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> spread(0.05, 1.5);
  const double base = 1.0 / partition.interval().length();
  std::vector<PiecewiseDensity> out;
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > 20 * count + 100) {
      throw Error(ErrorCode::solver, "could not generate enough feasible trial densities");
    }
    const double sigma = spread(rng);
    std::vector<double> v(partition.size());
    for (double& x : v) x = base * std::exp(sigma * normal(rng));
    if (auto d = project_feasible(partition, spec, std::move(v), tolerance)) out.push_back(std::move(*d));
  }
  return out;
}

}  // namespace spd
