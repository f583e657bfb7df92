#include <cmath>
#include <vector>

#include "casimir/constants.hpp"
#include "casimir/plane.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace casimir;
using namespace casimir::plane;
using materials::ConstantEps;
using materials::Drude;
using materials::Plasma;

namespace {

const double kOmegaP = 1.37e16;
const double kGamma = 5.3e13;
const MaterialModel kDrude{Drude{kOmegaP, kGamma}};
const MaterialModel kPlasma{Plasma{kOmegaP}};

PlaneSystem make(const MaterialModel& m, double L) {
  PlaneSystem s;
  s.mat1 = m;
  s.mat2 = m;
  s.separation = L;
  return s;
}

// Textbook vacuum-gap Lifshitz integrand written from scratch.
double textbook_integrand(double eps1, double eps2, double xi, double q, double L) {
  const double c = kSpeedOfLight;
  const double k0 = std::sqrt(q * q + xi * xi / (c * c));
  const double k1 = std::sqrt(q * q + eps1 * xi * xi / (c * c));
  const double k2 = std::sqrt(q * q + eps2 * xi * xi / (c * c));
  const double te = ((k0 - k1) / (k0 + k1)) * ((k0 - k2) / (k0 + k2));
  const double tm = ((eps1 * k0 - k1) / (eps1 * k0 + k1)) * ((eps2 * k0 - k2) / (eps2 * k0 + k2));
  const double d = std::exp(-2.0 * k0 * L);
  return std::log1p(-te * d) + std::log1p(-tm * d);
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(lo * std::pow(hi / lo, i / double(n - 1)));
  return out;
}

}  // namespace

TEST_CASE("Fresnel amplitudes") {
  const PlaneChannel ch{1e15, 1e7, Polarization::TE, Axis::Imaginary};
  SUBCASE("no contrast") {
    Medium drude_medium{kDrude};
    for (auto pol : {Polarization::TE, Polarization::TM}) {
      PlaneChannel c = ch;
      c.pol = pol;
      CHECK(fresnel_r(MaterialModel::vacuum(), Medium{}, c) == Complex(0.0));
      CHECK(std::abs(fresnel_r(kDrude, drude_medium, c)) == 0.0);
    }
  }
  SUBCASE("perfect mirror") {
    PlaneChannel c = ch;
    CHECK(fresnel_r(MaterialModel::perfect_mirror(), Medium{}, c) == Complex(-1.0));
    c.pol = Polarization::TM;
    CHECK(fresnel_r(MaterialModel::perfect_mirror(), Medium{}, c) == Complex(1.0));
    c.axis = Axis::Real;
    CHECK(fresnel_r(MaterialModel::perfect_mirror(), Medium{}, c) == Complex(1.0));
  }
  SUBCASE("Drude gold-like against direct arithmetic") {
    const double c = kSpeedOfLight;
    const double xi = 1e15;
    const double q = 1e7;
    const double eps = 1.0 + kOmegaP * kOmegaP / (xi * (xi + kGamma));
    const double km = std::sqrt(xi * xi / (c * c) + q * q);
    const double kp = std::sqrt(eps * xi * xi / (c * c) + q * q);
    const Complex te = fresnel_r(kDrude, Medium{}, ch);
    PlaneChannel tm_ch = ch;
    tm_ch.pol = Polarization::TM;
    const Complex tm = fresnel_r(kDrude, Medium{}, tm_ch);
    CHECK(te.imag() == 0.0);
    CHECK(te.real() == doctest::Approx((km - kp) / (km + kp)).epsilon(1e-14));
    CHECK(tm.real() == doctest::Approx((eps * km - kp) / (eps * km + kp)).epsilon(1e-14));
  }
  SUBCASE("passive media reflect at most fully on the imaginary axis") {
    for (double xi : log_grid(1e12, 1e18, 13)) {
      for (double q : log_grid(1e4, 1e9, 11)) {
        for (auto pol : {Polarization::TE, Polarization::TM}) {
          const PlaneChannel c{xi, q, pol, Axis::Imaginary};
          CHECK(std::abs(fresnel_r(kDrude, Medium{}, c)) <= 1.0);
          CHECK(std::abs(fresnel_r(MaterialModel(ConstantEps{3.0}), Medium{MaterialModel(ConstantEps{2.0})}, c)) <=
                1.0);
        }
      }
    }
  }
  SUBCASE("invalid channel") {
    for (const PlaneChannel& bad : {PlaneChannel{0.0, 1.0}, PlaneChannel{1e15, -1.0}}) {
      try {
        (void)fresnel_r(kDrude, Medium{}, bad);
        FAIL("expected DomainError");
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DomainError);
      }
    }
  }
}

TEST_CASE("translation factor") {
  const PlaneChannel prop{3e15, 1e6, Polarization::TE, Axis::Real};  // q < omega / c
  CHECK(std::abs(translation_factor(Medium{}, prop, 1e-30) - 1.0) < 1e-15);
  CHECK(std::abs(std::abs(translation_factor(Medium{}, prop, 1e-6)) - 1.0) < 1e-15);
  const PlaneChannel imag{3e15, 1e6, Polarization::TE, Axis::Imaginary};
  const double kappa = std::sqrt(1e12 + 9e30 / (kSpeedOfLight * kSpeedOfLight));
  CHECK(translation_factor(Medium{}, imag, 2e-7).real() == doctest::Approx(std::exp(-kappa * 2e-7)).epsilon(1e-14));

  SUBCASE("lossy medium attenuates") {
    const Medium lossy{MaterialModel(Drude{2e15, 1e14})};
    const double w = 3e15;
    const double q = 1e6;
    const Complex eps = 1.0 - 4e30 / (w * (w + Complex(0.0, 1e14)));
    Complex kz = std::sqrt(eps * w * w / (kSpeedOfLight * kSpeedOfLight) - q * q);
    if (kz.imag() < 0.0) kz = -kz;
    const Complex expect = std::exp(Complex(0.0, 1.0) * kz * 1e-6);
    const Complex got = translation_factor(lossy, prop, 1e-6);
    CHECK(std::abs(got) < 1.0);
    CHECK(std::abs(got - expect) < 1e-13);
  }
  CHECK_THROWS_AS((void)translation_factor(Medium{}, prop, 0.0), Error);
}

TEST_CASE("ideal mirrors reproduce the closed form") {
  const PlaneSystem base = make(MaterialModel::perfect_mirror(), 1e-6);
  for (double L : {100e-9, 1e-6}) {
    PlaneSystem s = base;
    s.separation = L;
    const auto r = energy_per_area(s);
    const double expect = -kPi * kPi * kHbar * kSpeedOfLight / (720.0 * L * L * L);
    CHECK(std::abs(r.value / expect - 1.0) < 1e-6);
    CHECK(r.error_estimate >= 0.0);
    CHECK(r.metadata.warnings.empty());
  }
  CHECK(ideal_plane_energy_per_area(1e-6) == doctest::Approx(-4.3330e-10).epsilon(1e-4));
}

TEST_CASE("no contrast on one side gives zero") {
  PlaneSystem s = make(kDrude, 1e-7);
  s.mat1 = MaterialModel::vacuum();
  CHECK(energy_per_area(s, {16, 1, 1e-8}).value == 0.0);
}

TEST_CASE("dissipation and finite plasma frequency reduce the energy") {
  for (double L : {100e-9, 1e-6}) {
    const double ideal = std::abs(energy_per_area(make(MaterialModel::perfect_mirror(), L)).value);
    const double plasma = std::abs(energy_per_area(make(kPlasma, L)).value);
    const double drude = std::abs(energy_per_area(make(kDrude, L)).value);
    CHECK(drude < plasma);
    CHECK(plasma < ideal);
  }
  SUBCASE("pointwise reflection ordering") {
    for (double xi : log_grid(1e11, 1e17, 25)) {
      for (double q : log_grid(1e4, 1e9, 11)) {
        for (auto pol : {Polarization::TE, Polarization::TM}) {
          const PlaneChannel c{xi, q, pol, Axis::Imaginary};
          CHECK(std::norm(fresnel_r(kDrude, Medium{}, c)) < std::norm(fresnel_r(kPlasma, Medium{}, c)));
        }
      }
    }
  }
}

TEST_CASE("sign and monotonicity in L") {
  double prev = INFINITY;
  for (double L : log_grid(50e-9, 5e-6, 9)) {
    const double e = energy_per_area(make(kDrude, L)).value;
    CHECK(e < 0.0);
    CHECK(std::abs(e) < prev);
    prev = std::abs(e);
  }
}

TEST_CASE("plasma mirrors approach the ideal limit") {
  const double L = 1e-6;
  const double wp = 2e3 * kSpeedOfLight / L;  // omega_p L / c = 2000
  const double plasma = energy_per_area(make(MaterialModel(Plasma{wp}), L)).value;
  CHECK(std::abs(plasma / ideal_plane_energy_per_area(L) - 1.0) < 5e-3);
}

TEST_CASE("vacuum gap matches the textbook integrand") {
  const PlaneSystem s = [] {
    PlaneSystem p = make(kDrude, 150e-9);
    p.mat2 = MaterialModel(ConstantEps{5.0});
    return p;
  }();
  for (double xi : log_grid(1e12, 1e17, 11)) {
    for (double q : log_grid(1e5, 1e9, 9)) {
      const double e1 = materials::eps_imag_axis(s.mat1, xi);
      const double ref = textbook_integrand(e1, 5.0, xi, q, s.separation);
      CHECK(std::abs(lifshitz_integrand(s, xi, q) - ref) <= 1e-12 * std::abs(ref) + 1e-300);
    }
  }
}

TEST_CASE("constant-eps gap rescales frequency") {
  // eps_m enters only through xi sqrt(eps_m) and the ratios eps_p / eps_m
  const double em = 2.25;
  PlaneSystem in_medium = make(MaterialModel(ConstantEps{9.0}), 120e-9);
  in_medium.mat2 = MaterialModel(ConstantEps{4.5});
  in_medium.medium = Medium{MaterialModel(ConstantEps{em})};
  PlaneSystem scaled = make(MaterialModel(ConstantEps{9.0 / em}), 120e-9);
  scaled.mat2 = MaterialModel(ConstantEps{4.5 / em});
  for (double xi : log_grid(1e13, 1e16, 7)) {
    for (double q : log_grid(1e5, 1e8, 7)) {
      const double a = lifshitz_integrand(in_medium, xi, q);
      const double b = lifshitz_integrand(scaled, xi * std::sqrt(em), q);
      CHECK(std::abs(a - b) <= 1e-12 * std::abs(b));
    }
  }
}

TEST_CASE("integrand is non-positive for identical mirrors") {
  for (const auto& m : {kDrude, kPlasma, MaterialModel(ConstantEps{4.0}), MaterialModel::perfect_mirror()}) {
    const PlaneSystem s = make(m, 300e-9);
    for (double xi : log_grid(1e11, 1e17, 13)) {
      for (double q : log_grid(1e4, 1e9, 11)) CHECK(lifshitz_integrand(s, xi, q) <= 0.0);
    }
  }
}

TEST_CASE("sub-nanometre separation is flagged") {
  const auto r = energy_per_area(make(kDrude, 0.5e-9), {64, 8, 1e-6});
  CHECK(r.value < 0.0);
  CHECK(r.metadata.warnings.size() == 1);
}

TEST_CASE("no doubling means no convergence claim") {
  try {
    (void)energy_per_area(make(kDrude, 1e-7), {8, 0, 1e-8});
    FAIL("expected NotConverged");
  } catch (const core::NotConvergedError& e) {
    CHECK(e.kind() == ErrorKind::NotConverged);
    CHECK(e.best().value < 0.0);
    CHECK(e.best().metadata.orders == std::vector<int>{8});
  }
}

TEST_CASE("invalid systems") {
  PlaneSystem s = make(kDrude, -1.0);
  CHECK_THROWS_AS((void)energy_per_area(s), Error);
  s.separation = 1e-7;
  s.medium = Medium{MaterialModel::perfect_mirror()};
  CHECK_THROWS_AS((void)energy_per_area(s), Error);
}

TEST_SUITE("real axis") {
  TEST_CASE("taper") {
    CHECK(frequency_taper(0.3, 1.0) == 1.0);
    CHECK(frequency_taper(0.5, 1.0) == 1.0);
    CHECK(frequency_taper(1.0, 1.0) == 0.0);
    CHECK(frequency_taper(0.75, 1.0) == doctest::Approx(0.5));
    double prev = 1.0;
    for (double w = 0.5; w <= 1.0; w += 0.01) {
      CHECK(frequency_taper(w, 1.0) <= prev);
      prev = frequency_taper(w, 1.0);
    }
  }

  TEST_CASE("no contrast gives zero") {
    PlaneSystem s = make(kDrude, 2e-7);
    s.mat1 = MaterialModel::vacuum();
    CHECK(real_axis_slice(s, 1e6, Polarization::TM, 1e17) == 0.0);
    CHECK(energy_per_area_real_axis(s, 1e17, {8, 1, 1e-3}).value == 0.0);
  }

  TEST_CASE("normal incidence dielectric slice against an independent integrator") {
    // r real and constant: Im log(1 - r^2 e^{2 i w L / c}) stays on the principal branch.
    const PlaneSystem s = make(MaterialModel(ConstantEps{6.0}), 1e-6);
    const double n = std::sqrt(6.0);
    const double r = (1.0 - n) / (1.0 + n);
    const double wmax = 40.0 * kSpeedOfLight / s.separation;
    const auto f = [&](double w) {
      const Complex x = r * r * std::exp(Complex(0.0, 2.0 * w * s.separation / kSpeedOfLight));
      return frequency_taper(w, wmax) * std::arg(1.0 - x);
    };
    const double ref = oracle::adaptive_simpson(f, 0.0, wmax, 1e-12 * wmax);
    for (auto pol : {Polarization::TE, Polarization::TM}) {
      const double got = real_axis_slice(s, 0.0, pol, wmax);
      CHECK(std::abs(got - ref) < 1e-8 * wmax * r * r);
    }
  }

  TEST_CASE("Drude slice equals the rotated imaginary-axis slice") {
    const PlaneSystem s = make(kDrude, 2e-7);
    for (double qL : {0.3, 1.0, 3.0}) {
      const double q = qL / s.separation;
      const double real =
          real_axis_slice(s, q, Polarization::TE, 10 * kOmegaP) + real_axis_slice(s, q, Polarization::TM, 10 * kOmegaP);
      const auto imag = core::integrate_semiinfinite([&](double xi) { return lifshitz_integrand(s, xi, q); },
                                                     {64, 6, 1e-12}, kSpeedOfLight / s.separation);
      CHECK(std::abs(real - imag.value) < 1e-5 * std::abs(imag.value));
    }
  }

  TEST_CASE("lossless conductors are rejected") {
    for (const auto& m : {kPlasma, MaterialModel::perfect_mirror(), MaterialModel(Drude{kOmegaP, 0.0})}) {
      try {
        (void)real_axis_slice(make(m, 2e-7), 1e6, Polarization::TE, 1e17);
        FAIL("expected DomainError");
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DomainError);
      }
    }
  }
}
