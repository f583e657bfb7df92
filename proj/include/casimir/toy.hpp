#pragma once

#include <vector>

#include "casimir/scatter_net.hpp"

/// Single-channel Fabry-Perot toy: two lossless mirrors (unitary 2x2 with
/// real reflection r) around a lossy gap whose one-way amplitude is
/// a exp(i omega L / c). Absorption in the gap is carried by the environment
/// ports of the translation scatterer, so the composed S-matrix is unitary.
namespace casimir::toy {

struct FabryPerot {
  double r = 0.9;           // mirror reflection amplitude, [0, 1)
  double length = 1e-6;     // gap length, m
  double attenuation = 0.9; // one-way amplitude modulus a, (0, 1]

  /// DomainError unless 0 <= r < 1, length > 0 and 0 < a <= 1.
  void validate() const;
};

/// [[r, t], [t, -r]] with t = sqrt(1 - r^2); channel 0 faces the gap.
scatter::ScatteringMatrix mirror(double r);

/// S1 * S_L * S2 at real frequency omega (rad/s). Channels: outside of
/// mirror 1, outside of mirror 2, then the two environment ports of the gap.
scatter::ScatteringMatrix cavity(const FabryPerot& fp, double omega);

/// Phase shift of the cavity relative to the same gap without mirrors,
/// (1/2) arg(det S / det S_ref), continuous in omega.
double phase_shift(const FabryPerot& fp, double omega);

/// (1/pi) d(phase_shift)/d omega from central differences of the eigenphases
/// of both S-matrices. `step` = 0 picks 1e-5 of the mode spacing pi c / L.
double dos_change(const FabryPerot& fp, double omega, double step = 0.0);

/// Single reflection channel off a perfect mirror a distance L behind the
/// reference plane: S = -exp(2 i omega L / c). Its density-of-states change
/// is L / (pi c) at every frequency.
scatter::ScatteringMatrix linear_phase_scatterer(double length, double omega);

struct BandEnergies {
  double phase_form = 0.0;  // -hbar int dw/(2 pi) phase_shift
  double dos_form = 0.0;    // int dw (hbar w / 2) dos_change
  /// (hbar / 2 pi) [w phase_shift] between the band edges. The two forms
  /// satisfy dos_form = phase_form + boundary.
  double boundary = 0.0;
  /// |phase_form + boundary - dos_form| / max(|phase_form|, |dos_form|),
  /// 0 when both vanish.
  double relative_mismatch = 0.0;
};

/// Both band-limited energies over [omega_lo, omega_hi], each integrated
/// adaptively to relative accuracy ~1e-9.
BandEnergies band_energies(const FabryPerot& fp, double omega_lo, double omega_hi);

struct ToyRow {
  double omega = 0.0;
  double phase_shift = 0.0;
  double dos_change = 0.0;
};

/// `points` equally spaced samples over [omega_lo, omega_hi] (points >= 2).
std::vector<ToyRow> tabulate(const FabryPerot& fp, double omega_lo, double omega_hi, int points);

/// Mode spacing pi c / L; the phase shift vanishes at its multiples.
double mode_spacing(const FabryPerot& fp);

}  // namespace casimir::toy
