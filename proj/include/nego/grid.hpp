#pragma once

#include <cmath>

#include "nego/errors.hpp"

namespace nego {

/// Absolute tolerance for all utility comparisons. Resource amounts are exact
/// integers on the grid; only utilities are compared with slack.
inline constexpr double kUtilityTol = 1e-9;

inline constexpr int kDefaultResolution = 10000;

/// The shared resource is divided into `resolution` indivisible units, so a
/// share is an integer in [0, resolution] and the whole resource is 1.0.
/// All allocations, thresholds and query points live on this grid.
struct Grid {
    int resolution = kDefaultResolution;

    constexpr bool valid(int units) const noexcept { return units >= 0 && units <= resolution; }

    constexpr double to_real(int units) const { return static_cast<double>(units) / resolution; }

    /// Nearest grid point; rejects reals outside [0, 1].
    int snap(double x) const {
        if (!(x >= 0.0) || x > 1.0 + 0.5 / resolution)
            throw domain_error("resource amount outside [0, 1]");
        int units = static_cast<int>(std::lround(x * resolution));
        return units > resolution ? resolution : units;
    }

    constexpr bool operator==(const Grid&) const = default;
};

} // namespace nego
