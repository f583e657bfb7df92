#include <cmath>
#include <cstdlib>
#include <vector>

#include <Eigen/SVD>

#include "casimir/constants.hpp"
#include "casimir/core.hpp"
#include "casimir/plane.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace casimir;
using namespace casimir::core;

namespace {

double spectral_norm(const ComplexMatrix& m) {
  return Eigen::JacobiSVD<ComplexMatrix>(m).singularValues()(0);
}

ComplexMatrix scaled_to_radius(ComplexMatrix m, double rho) {
  const Eigen::ComplexEigenSolver<ComplexMatrix> eig(m, false);
  return m * (rho / eig.eigenvalues().cwiseAbs().maxCoeff());
}

struct ThreadsEnv {
  explicit ThreadsEnv(const char* value) { setenv("CASIMIR_THREADS", value, 1); }
  ~ThreadsEnv() { unsetenv("CASIMIR_THREADS"); }
};

}  // namespace

TEST_CASE("Gauss-Legendre rule") {
  for (int n : {8, 17, 64, 256}) {
    const auto& rule = gauss_legendre(n);
    double wsum = 0.0;
    double x4 = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      wsum += rule.weights[i];
      x4 += rule.weights[i] * std::pow(rule.nodes[i], 4);
    }
    CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(x4 == doctest::Approx(0.4).epsilon(1e-13));
  }
  CHECK_THROWS_AS((void)gauss_legendre(0), Error);
}

TEST_CASE("semi-infinite quadrature on known integrals") {
  const QuadratureSpec spec{};
  const auto a = integrate_semiinfinite([](double x) { return std::exp(-x); }, spec, 1.0);
  CHECK(a.converged);
  CHECK(std::abs(a.value - 1.0) < 1e-10);
  const auto b = integrate_semiinfinite([](double x) { return x * std::exp(-x); }, spec, 1.0);
  CHECK(b.converged);
  CHECK(std::abs(b.value - 1.0) < 1e-10);
  CHECK(a.error_estimate >= 0.0);
}

TEST_CASE("doubling error shrinks on smooth decaying integrands") {
  const auto f = [](double x) { return std::exp(-x) * (1.0 + x * x); };  // integral 3
  double prev = INFINITY;
  for (int n = 8; n <= 64; n *= 2) {
    const double err = std::abs(integrate_semiinfinite_fixed(f, n, 1.0) - 3.0);
    CHECK(err <= prev);
    prev = err;
  }
  CHECK(prev < 1e-12);
}

TEST_CASE("non-convergence is reported, not thrown") {
  const QuadratureSpec spec{8, 1, 1e-15};
  const auto r = integrate_semiinfinite([](double x) { return 1.0 / (1.0 + x * x); }, spec, 1.0);
  CHECK_FALSE(r.converged);
  CHECK(r.error_estimate > 0.0);
}

TEST_CASE("quadrature spec validation") {
  CHECK_THROWS_AS((QuadratureSpec{4, 2, 1e-8}.validate()), Error);
  CHECK_THROWS_AS((QuadratureSpec{64, -1, 1e-8}.validate()), Error);
  CHECK_THROWS_AS((QuadratureSpec{64, 2, 0.0}.validate()), Error);
}

TEST_CASE("Lifshitz xi slice against adaptive Simpson") {
  plane::PlaneSystem sys;
  sys.separation = 200e-9;
  sys.mat1 = materials::MaterialModel(materials::Drude{1.37e16, 5.3e13});
  sys.mat2 = sys.mat1;
  const double q = 1.0 / sys.separation;
  const double s = kSpeedOfLight / sys.separation;
  const auto f = [&](double xi) { return plane::lifshitz_integrand(sys, xi, q); };
  const auto got = integrate_semiinfinite(f, QuadratureSpec{}, s);
  REQUIRE(got.converged);
  const auto mapped = [&](double u) {
    const double one_minus = 1.0 - u;
    return f(s * u / one_minus) * s / (one_minus * one_minus);
  };
  const double ref = oracle::adaptive_simpson(mapped, 1e-15, 1.0 - 1e-7, 1e-14 * s);
  CHECK(std::abs(got.value - ref) < 1e-8 * std::abs(ref));
}

TEST_CASE("round-trip matrix") {
  SUBCASE("zero factor") {
    const RoundTripAssembly a{ComplexMatrix::Identity(3, 3), ComplexMatrix::Zero(3, 3),
                              ComplexMatrix::Identity(3, 3), ComplexMatrix::Identity(3, 3)};
    CHECK(round_trip_matrix(a).isZero(0.0));
  }
  SUBCASE("scalars") {
    auto s = [](Complex v) { return ComplexMatrix::Constant(1, 1, v); };
    const Complex r1(0.3, 0.1), r2(-0.7, 0.2), t(0.5, -0.4);
    const auto m = round_trip_matrix({s(r1), s(t), s(r2), s(t)});
    CHECK(std::abs(m(0, 0) - r1 * r2 * t * t) < 1e-16);
  }
  SUBCASE("submultiplicative on random contractions") {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      const Index n = 1 + static_cast<Index>(seed % 6);
      const RoundTripAssembly a{blockmat::random_contraction(n, seed, 0.9),
                                blockmat::random_contraction(n, seed + 1000, 0.8),
                                blockmat::random_contraction(n, seed + 2000, 0.95),
                                blockmat::random_contraction(n, seed + 3000, 0.7)};
      const double bound =
          spectral_norm(a.s1_ii) * spectral_norm(a.t12) * spectral_norm(a.s2_ii) * spectral_norm(a.t21);
      CHECK(spectral_norm(round_trip_matrix(a)) <= bound * (1.0 + 1e-12));
    }
  }
  SUBCASE("mismatch") {
    const RoundTripAssembly a{ComplexMatrix::Identity(2, 2), ComplexMatrix::Identity(3, 3),
                              ComplexMatrix::Identity(2, 2), ComplexMatrix::Identity(2, 2)};
    try {
      (void)round_trip_matrix(a);
      FAIL("expected ChannelMismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ChannelMismatch);
    }
  }
}

TEST_CASE("log det(1 - M)") {
  CHECK(log_det_one_minus(ComplexMatrix::Zero(4, 4)) == Complex(0.0));
  CHECK(std::abs(log_det_one_minus(ComplexMatrix::Constant(1, 1, 0.5)) - std::log(0.5)) < 1e-15);

  SUBCASE("random 6x6 contraction against the pivoted factorization") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      const ComplexMatrix m = blockmat::random_contraction(6, seed, 0.9);
      const ComplexMatrix one_minus = ComplexMatrix::Identity(6, 6) - m;
      const Complex lib = log_det_one_minus(m);
      const auto [lm, unit] = oracle::det_complete_pivot(one_minus);
      CHECK(std::abs(lib.real() - lm) < 1e-10);
      CHECK(std::abs(std::exp(Complex(0.0, lib.imag())) - unit) < 1e-10);
      const Complex fact = blockmat::logdet(one_minus);
      CHECK(std::abs(std::exp(lib - fact) - 1.0) < 1e-10);
    }
  }

  SUBCASE("eigenvalue and factorization paths agree up to radius 0.99") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      const ComplexMatrix m = scaled_to_radius(blockmat::random_gaussian(5, 5, seed), 0.99);
      const Complex a = log_det_one_minus(m);
      const Complex b = blockmat::logdet(ComplexMatrix::Identity(5, 5) - m);
      CHECK(std::abs(a.real() - b.real()) < 1e-10);
      CHECK(std::abs(std::exp(Complex(0.0, a.imag() - b.imag())) - 1.0) < 1e-10);
    }
  }

  SUBCASE("identical mirrors on the imaginary axis give a real non-positive value") {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
      const ComplexMatrix a = blockmat::random_contraction(4, seed, 0.9);
      const ComplexMatrix r = a * a.adjoint();  // Hermitian PSD, norm < 1
      ComplexMatrix t = ComplexMatrix::Zero(4, 4);
      for (int i = 0; i < 4; ++i) t(i, i) = std::exp(-0.3 * (i + 1));
      const Complex v = log_det_one_minus(round_trip_matrix({r, t, r, t}));
      CHECK(std::abs(v.imag()) < 1e-12);
      CHECK(v.real() <= 0.0);
    }
  }

  SUBCASE("entries near the underflow threshold") {
    const ComplexMatrix base = blockmat::random_contraction(6, 11, 0.5);
    for (double s : {1e-30, 1e-150, 1e-250}) {
      const ComplexMatrix m = base * s;
      const Complex expected = -m.trace() - 0.5 * (m * m).trace();
      const Complex got = log_det_one_minus(m);
      CHECK(std::abs(got - expected) <= 1e-12 * std::abs(expected));
    }
  }

  SUBCASE("branch risk") {
    try {
      (void)log_det_one_minus(ComplexMatrix::Constant(1, 1, 1.0));
      FAIL("expected BranchRisk");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::BranchRisk);
    }
    const ComplexMatrix m = scaled_to_radius(blockmat::random_gaussian(4, 4, 7), 1.2);
    CHECK_THROWS_AS((void)log_det_one_minus(m), Error);
    CHECK_NOTHROW((void)log_det_one_minus(m, false));
  }
}

TEST_CASE("power-iteration radius estimate") {
  ComplexMatrix d = ComplexMatrix::Zero(3, 3);
  d(0, 0) = 0.9;
  d(1, 1) = 0.5;
  d(2, 2) = Complex(0.0, 0.2);
  CHECK(spectral_radius_estimate(d) == doctest::Approx(0.9).epsilon(1e-3));
  CHECK(spectral_radius_estimate(ComplexMatrix::Zero(2, 2)) == 0.0);
}

TEST_CASE("parallel sum is deterministic") {
  const auto f = [](std::size_t i) { return std::sin(0.1 * static_cast<double>(i)) / (1.0 + i); };
  double one = 0.0;
  double many = 0.0;
  {
    ThreadsEnv env("1");
    one = parallel_sum(10000, f);
  }
  {
    ThreadsEnv env("4");
    CHECK(worker_count() == 4);
    many = parallel_sum(10000, f);
  }
  CHECK(one == many);
}

TEST_CASE("worker errors propagate") {
  ThreadsEnv env("3");
  CHECK_THROWS_AS(parallel_for(50, [](std::size_t i) {
                    if (i == 17) raise(ErrorKind::DomainError, "boom");
                  }),
                  Error);
}

TEST_CASE("malformed CASIMIR_THREADS") {
  ThreadsEnv env("four");
  CHECK_THROWS_AS((void)worker_count(), Error);
}
