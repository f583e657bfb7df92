#include "casimir/toy.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "casimir/constants.hpp"
#include "casimir/core.hpp"

namespace casimir::toy {

namespace {

using blockmat::Complex;
using blockmat::ComplexMatrix;
using scatter::ScatteringMatrix;

ComplexMatrix scalar(Complex v) { return ComplexMatrix::Constant(1, 1, v); }

ScatteringMatrix reference(const FabryPerot& fp, double omega) {
  FabryPerot bare = fp;
  bare.r = 0.0;
  return cavity(bare, omega);
}

double wrap(double a) { return std::remainder(a, 2.0 * kPi); }

double integrate(const std::function<double(double)>& f, double lo, double hi) {
  const core::PanelIntegral p = core::integrate_panel(f, lo, hi, 12, 1e-9);
  if (!(p.error <= 1e-7 * p.l1)) {
    raise(ErrorKind::NotConverged, "toy band integral: error " + std::to_string(p.error) + " vs L1 " +
                                       std::to_string(p.l1));
  }
  return p.value;
}

void require_band(double lo, double hi) {
  if (!(lo >= 0.0) || !(hi > lo) || !std::isfinite(hi)) {
    raise(ErrorKind::DomainError, "band needs 0 <= omega_lo < omega_hi");
  }
}

}  // namespace

void FabryPerot::validate() const {
  if (!(r >= 0.0 && r < 1.0)) raise(ErrorKind::DomainError, "mirror reflection must lie in [0, 1)");
  if (!(length > 0.0) || !std::isfinite(length)) raise(ErrorKind::DomainError, "gap length must be > 0");
  if (!(attenuation > 0.0 && attenuation <= 1.0)) raise(ErrorKind::DomainError, "attenuation must lie in (0, 1]");
}

ScatteringMatrix mirror(double r) {
  if (!(r >= 0.0 && r < 1.0)) raise(ErrorKind::DomainError, "mirror reflection must lie in [0, 1)");
  const double t = std::sqrt(1.0 - r * r);
  return ScatteringMatrix::from_blocks(scalar(r), scalar(t), scalar(t), scalar(-r));
}

ScatteringMatrix cavity(const FabryPerot& fp, double omega) {
  fp.validate();
  const ScatteringMatrix m = mirror(fp.r);
  const Complex tau = std::polar(fp.attenuation, omega * fp.length / kSpeedOfLight);
  return scatter::chain3(m, scatter::translation_scatterer(scalar(tau)), m);
}

double phase_shift(const FabryPerot& fp, double omega) {
  const double with = blockmat::logdet(cavity(fp, omega).assembled()).imag();
  const double without = blockmat::logdet(reference(fp, omega).assembled()).imag();
  return 0.5 * wrap(with - without);
}

double dos_change(const FabryPerot& fp, double omega, double step) {
  fp.validate();
  // Below ~1e-5 of the spacing roundoff in the eigenphases dominates the O(h^2) bias.
  const double h = step > 0.0 ? step : 1e-5 * mode_spacing(fp);
  const double with = scatter::dos_change([&](double w) { return cavity(fp, w); }, omega, h);
  const double without = scatter::dos_change([&](double w) { return reference(fp, w); }, omega, h);
  return with - without;
}

ScatteringMatrix linear_phase_scatterer(double length, double omega) {
  if (!(length > 0.0)) raise(ErrorKind::DomainError, "length must be > 0");
  return ScatteringMatrix::from_matrix(scalar(-std::polar(1.0, 2.0 * omega * length / kSpeedOfLight)), 0);
}

BandEnergies band_energies(const FabryPerot& fp, double omega_lo, double omega_hi) {
  fp.validate();
  require_band(omega_lo, omega_hi);
  BandEnergies e;
  e.phase_form = -kHbar / (2.0 * kPi) * integrate([&](double w) { return phase_shift(fp, w); }, omega_lo, omega_hi);
  e.dos_form = 0.5 * kHbar * integrate([&](double w) { return w * dos_change(fp, w); }, omega_lo, omega_hi);
  e.boundary = kHbar / (2.0 * kPi) * (omega_hi * phase_shift(fp, omega_hi) - omega_lo * phase_shift(fp, omega_lo));
  const double scale = std::max(std::abs(e.phase_form), std::abs(e.dos_form));
  e.relative_mismatch = scale > 0.0 ? std::abs(e.phase_form + e.boundary - e.dos_form) / scale : 0.0;
  return e;
}

std::vector<ToyRow> tabulate(const FabryPerot& fp, double omega_lo, double omega_hi, int points) {
  fp.validate();
  require_band(omega_lo, omega_hi);
  if (points < 2) raise(ErrorKind::InvalidArgument, "tabulate needs at least 2 points");
  std::vector<ToyRow> rows;
  rows.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double w = omega_lo + (omega_hi - omega_lo) * i / (points - 1.0);
    rows.push_back({w, phase_shift(fp, w), dos_change(fp, w)});
  }
  return rows;
}

double mode_spacing(const FabryPerot& fp) { return kPi * kSpeedOfLight / fp.length; }

}  // namespace casimir::toy
