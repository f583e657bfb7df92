#pragma once

#include <vector>

#include "casimir/core.hpp"
#include "casimir/materials.hpp"

/// Sphere-sphere geometry on the imaginary frequency axis, in the multipole
/// basis of vector spherical waves with the translation axis along z.
///
/// Radial functions are the modified spherical Bessel functions
/// i_l (regular) and k_l (outgoing), normalized as i_0(x) = sinh(x)/x and
/// k_0(x) = exp(-x)/x. Angular parts use orthonormal Y_lm with the
/// Condon-Shortley phase. Vector waves are M = curl(r psi) and
/// N' = i curl(M) / kappa, which keeps every matrix real on the imaginary axis.
/// For m < 0 the M-type wave carries an extra factor -1 so that the m and -m
/// blocks coincide.
///
/// Inside an m-block the channels are ordered electric (N-type, l = l0..lmax)
/// then magnetic (M-type, l = l0..lmax) with l0 = max(1, |m|).
namespace casimir::sphere {

using blockmat::ComplexMatrix;
using blockmat::Index;
using materials::MaterialModel;
using materials::Medium;

enum class MultipolePol { Electric, Magnetic };

struct MultipoleChannel {
  int l = 1;
  int m = 0;
  MultipolePol pol = MultipolePol::Electric;

  /// DomainError unless l >= 1 and |m| <= l.
  void validate() const;
};

/// Number of channels in the m-block, 2 (lmax - max(1,|m|) + 1).
Index block_size(int lmax, int m);

/// Position of `ch` inside its m-block.
Index channel_index(int lmax, const MultipoleChannel& ch);

struct SphereSystem {
  double R1 = 1e-6;  // m
  double R2 = 1e-6;  // m
  double L = 4e-6;   // centre-to-centre distance, m
  MaterialModel mat1 = MaterialModel::perfect_mirror();
  MaterialModel mat2 = MaterialModel::perfect_mirror();
  Medium medium;
  /// Multipole truncation. 0 selects default_lmax() followed by automatic
  /// doubling.
  int lmax = 0;

  /// DomainError unless radii > 0, L > R1 + R2, lmax >= 0 and the medium is
  /// vacuum.
  void validate() const;

  /// max(5, ceil(10 R_max / (L - R1 - R2)))
  int default_lmax() const;
};

/// Largest truncation reached by automatic doubling before NotConverged.
inline constexpr int kMaxAutoLmax = 64;
/// Relative energy change that stops the l_max doubling.
inline constexpr double kLmaxTol = 1e-3;

/// log i_l(x) and log k_l(x) for l = 0..n, x > 0.
std::vector<double> log_bessel_i(int n, double x);
std::vector<double> log_bessel_k(int n, double x);

struct MieAmplitudes {
  double a = 0.0;  // electric
  double b = 0.0;  // magnetic
};

/// Outgoing amplitude per unit regular amplitude at imaginary frequency xi
/// for a sphere of radius R in vacuum. Small spheres: a_1 -> (2/3) x^3
/// (eps - 1)/(eps + 2), and for a perfect mirror b_1 -> -x^3/3.
MieAmplitudes mie_amplitudes(const MaterialModel& mat, double R, double xi, int l);

/// Scalar translation coefficient: k_l(y |r - z|) Y_lm(r - z) for a source at
/// z = d e_z equals sum_lambda alpha i_lambda(y r / d) Y_lambda,m(r) with
/// y = kappa d. Requires l, lambda >= |m|.
double scalar_translation(int lambda, int l, int m, double y);

/// One m-block of the vector translation matrix carrying outgoing waves
/// about the centre at L e_z to regular waves about the origin, evaluated at
/// kappa = xi / c. Row index: regular channel, column: outgoing channel.
/// The reverse direction is P U P with P = (-1)^(l+1) on electric and
/// (-1)^l on magnetic channels.
ComplexMatrix translation_block(int lmax, int m, double xi, double L);

/// Round-trip matrix T1 U(2->1) T2 U(1->2) of one m-block, diagonally
/// rescaled so that no entry overflows. The rescaling is a similarity, so
/// the spectrum and det(1 - M) are those of the unscaled product.
ComplexMatrix round_trip_block(const SphereSystem& sys, double xi, int m, int lmax);

/// sum_m log det(1 - M_m) at imaginary frequency xi, m = -lmax..lmax.
double energy_integrand(const SphereSystem& sys, double xi, int lmax);

/// E = (hbar / 2 pi) int_0^inf dxi sum_m log det(1 - M_m), in joules.
/// With sys.lmax = 0 the truncation doubles from default_lmax() until the
/// relative change is below kLmaxTol; metadata.truncation_change records the
/// last change. Throws core::NotConvergedError when the quadrature or the
/// doubling does not settle.
core::EnergyResult sphere_energy(const SphereSystem& sys, const core::QuadratureSpec& quad = {});

}  // namespace casimir::sphere
