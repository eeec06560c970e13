#pragma once

// Feasible trial densities for minimality checks: random or given cell values
// pushed onto {f >= 0, <f, w_k> = mu_k} by alternating projections.

#include <cstdint>
#include <optional>
#include <vector>

#include "spd/density.hpp"

namespace spd {

/// Alternates the least-norm projection onto the moment hyperplanes with
/// clipping at zero until the moment residual is below `tolerance`.
/// Returns nullopt when `max_sweeps` is exhausted.
std::optional<PiecewiseDensity> project_feasible(const Partition& partition, const MomentSpec& spec,
                                                 std::vector<double> values, double tolerance = 1e-10,
                                                 int max_sweeps = 20000);

/// `count` feasible densities from log-normal perturbations of the uniform
/// density; deterministic for a given seed.
std::vector<PiecewiseDensity> sample_feasible_densities(const Partition& partition, const MomentSpec& spec,
                                                        std::size_t count, std::uint64_t seed,
                                                        double tolerance = 1e-10);

}  // namespace spd
