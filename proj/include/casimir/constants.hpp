#pragma once

#include <numbers>

namespace casimir {

inline constexpr double kHbar = 1.054571817e-34;       // J s
inline constexpr double kSpeedOfLight = 299792458.0;  // m / s
inline constexpr double kPi = std::numbers::pi;

/// Energy per unit area between two perfect mirrors at zero temperature.
constexpr double ideal_plane_energy_per_area(double separation) {
  return -kPi * kPi * kHbar * kSpeedOfLight /
         (720.0 * separation * separation * separation);
}

}  // namespace casimir
