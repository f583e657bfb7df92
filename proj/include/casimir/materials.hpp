#pragma once

#include <complex>
#include <string>
#include <variant>

namespace casimir::materials {

using Complex = std::complex<double>;

struct PerfectMirror {};

struct Plasma {
  double omega_p = 0.0;  // rad/s
};

struct Drude {
  double omega_p = 0.0;  // rad/s
  double gamma = 0.0;    // rad/s
};

struct ConstantEps {
  double eps = 1.0;
};

struct Lorentz {
  double omega_p = 0.0;
  double omega_0 = 0.0;
  double gamma = 0.0;
};

/// Dispersion model of a non-magnetic isotropic material. Real-axis
/// permittivities use the causal e^{-i omega t} convention (damping enters as
/// +i gamma omega), so Im eps >= 0 in the upper half plane.
class MaterialModel {
 public:
  using Variant = std::variant<PerfectMirror, Plasma, Drude, ConstantEps, Lorentz>;

  /// Throws DomainError on negative rates or eps < 1.
  explicit MaterialModel(Variant model);

  static MaterialModel vacuum() { return MaterialModel(ConstantEps{1.0}); }
  static MaterialModel perfect_mirror() { return MaterialModel(PerfectMirror{}); }

  const Variant& variant() const { return model_; }
  bool is_perfect_mirror() const { return std::holds_alternative<PerfectMirror>(model_); }
  std::string describe() const;

  /// eps(omega) at a complex frequency. DomainError for a perfect mirror or
  /// omega = 0 with a dispersive model.
  Complex eps(Complex omega) const;

 private:
  Variant model_;
};

/// The surrounding or intervening medium. Vacuum is ConstantEps(1).
struct Medium {
  MaterialModel model = MaterialModel::vacuum();
};

/// Permittivity at imaginary frequency i xi (real, >= 1). A perfect mirror
/// returns +infinity.
double eps_imag_axis(const MaterialModel& m, double xi);

/// Principal square root of eps(omega), sign chosen so that Im n >= 0.
Complex refractive_index(const MaterialModel& m, Complex omega);

}  // namespace casimir::materials
