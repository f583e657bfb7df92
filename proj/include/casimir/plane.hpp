#pragma once

#include "casimir/core.hpp"
#include "casimir/materials.hpp"

/// Plane-plane geometry: Fresnel amplitudes, propagation factors through the
/// gap medium and the energy per unit area.
namespace casimir::plane {

using materials::Complex;
using materials::MaterialModel;
using materials::Medium;

enum class Polarization { TE, TM };
enum class Axis { Imaginary, Real };

/// One plane-wave channel. `frequency` is xi (rad/s) on the imaginary axis or
/// omega (rad/s) on the real axis; q is the real transverse wave number (rad/m).
struct PlaneChannel {
  double frequency = 0.0;
  double q = 0.0;
  Polarization pol = Polarization::TE;
  Axis axis = Axis::Imaginary;

  /// DomainError unless q >= 0 and frequency > 0.
  void validate() const;
  Complex complex_frequency() const;
};

struct PlaneSystem {
  MaterialModel mat1 = MaterialModel::perfect_mirror();
  MaterialModel mat2 = MaterialModel::perfect_mirror();
  Medium medium;
  double separation = 1e-6;  // m

  /// DomainError unless separation > 0 and the medium is not a perfect mirror.
  void validate() const;
};

/// kappa = sqrt(q^2 - eps(omega) omega^2 / c^2) with Re kappa >= 0. On the
/// real axis the normal wave number is k_z = i kappa.
Complex normal_decay(const MaterialModel& m, const PlaneChannel& ch);

/// Reflection amplitude of a half-space of `mat` seen from `medium`.
/// Perfect mirrors give r_TE = -1 and r_TM = +1.
Complex fresnel_r(const MaterialModel& mat, const Medium& medium, const PlaneChannel& ch);

/// One-way propagation factor exp(-kappa_m L) = exp(i k_z L); modulus <= 1.
Complex translation_factor(const Medium& medium, const PlaneChannel& ch, double separation);

/// sum over polarizations of log(1 - r1 r2 exp(-2 kappa_m L)) at imaginary
/// frequency xi and transverse q.
double lifshitz_integrand(const PlaneSystem& sys, double xi, double q);

/// Energy per unit area (J/m^2) from the imaginary-frequency integral.
/// Throws core::NotConvergedError when the order doubling does not settle.
core::EnergyResult energy_per_area(const PlaneSystem& sys, const core::QuadratureSpec& quad = {});

/// Energy per unit area from the real-frequency integral of
/// Im log(1 - r1 r2 exp(2 i k_z L)) up to omega_max. The phase is continued
/// along omega at fixed q; `quad` drives the q integral, which stops at
/// 0.8 n omega_max / (2c). Requires damped (Drude/Lorentz with gamma > 0) or
/// non-dispersive mirrors; omega_max should sit well above the plasma edge.
core::EnergyResult energy_per_area_real_axis(const PlaneSystem& sys, double omega_max,
                                             const core::QuadratureSpec& quad = {});

/// Smooth cutoff applied to the real-frequency integrand: 1 up to
/// omega_max / 2, C-infinity decay to 0 at omega_max.
double frequency_taper(double omega, double omega_max);

/// Real-frequency integral at one transverse wave number q (rad/m) and one
/// polarization: int_0^omega_max taper(omega) Im log(1 - r1 r2 exp(2 i k_z L))
/// d omega, with the phase continued from omega = 0. Throws
/// OscillatoryFailure when the continued phase does not close or a panel
/// cannot be resolved.
double real_axis_slice(const PlaneSystem& sys, double q, Polarization pol, double omega_max);

}  // namespace casimir::plane
