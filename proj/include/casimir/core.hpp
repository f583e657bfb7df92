#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "casimir/blockmat.hpp"
#include "casimir/errors.hpp"

/// Geometry-independent pieces of the energy evaluation: the round-trip
/// operator, log det(1 - M) with a branch guard, semi-infinite quadrature and
/// a deterministic parallel loop.
namespace casimir::core {

using blockmat::Complex;
using blockmat::ComplexMatrix;
using blockmat::Index;

struct QuadratureSpec {
  int base_order = 64;
  int max_doublings = 6;
  double tol = 1e-8;

  /// Throws InvalidArgument unless base_order >= 8, max_doublings >= 0, tol > 0.
  void validate() const;
};

/// Gauss-Legendre rule on [-1, 1]. Cached per order; safe to call
/// concurrently.
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

const GaussLegendreRule& gauss_legendre(int order);

struct Integral {
  double value = 0.0;
  double error_estimate = 0.0;
  int order = 0;
  bool converged = false;
};

/// Integral of f over (0, inf) with xi = scale * u / (1 - u) and Gauss-Legendre
/// in u. The order doubles from spec.base_order until the relative change
/// drops below spec.tol; the last change is the error estimate. Never throws
/// on non-convergence; check `converged`.
Integral integrate_semiinfinite(const std::function<double(double)>& f, const QuadratureSpec& spec,
                                double scale);

/// Same rule at a single fixed order.
double integrate_semiinfinite_fixed(const std::function<double(double)>& f, int order,
                                    double scale);

struct PanelIntegral {
  double value = 0.0;
  double error = 0.0;  // Kronrod-Gauss difference, same units as value
  double l1 = 0.0;     // integral of |f|
};

/// Adaptive 15-point Gauss-Kronrod over [lo, hi] to relative tolerance `tol`.
/// The rule runs on t in [-1, 1] and the interval scale is applied afterwards,
/// so the stopping test does not depend on the magnitude of the abscissas.
PanelIntegral integrate_panel(const std::function<double(double)>& f, double lo, double hi, int max_depth,
                              double tol);

struct EnergyMetadata {
  std::vector<int> orders;  // quadrature orders visited
  int lmax = 0;             // multipole truncation, 0 where not applicable
  /// Relative energy change on the last l_max doubling (spheres, automatic
  /// truncation only).
  double truncation_change = 0.0;
  std::vector<std::string> warnings;
};

struct EnergyResult {
  double value = 0.0;           // J (or J/m^2 for plane-plane)
  double error_estimate = 0.0;  // same units, >= 0
  EnergyMetadata metadata;
};

/// NotConverged carrying the best available estimate.
class NotConvergedError : public Error {
 public:
  NotConvergedError(const std::string& what, EnergyResult best)
      : Error(ErrorKind::NotConverged, what), best_(std::move(best)) {}
  const EnergyResult& best() const noexcept { return best_; }

 private:
  EnergyResult best_;
};

struct RoundTripAssembly {
  ComplexMatrix s1_ii;
  ComplexMatrix t12;
  ComplexMatrix s2_ii;
  ComplexMatrix t21;
};

/// M = S1ii T12 S2ii T21. The translation blocks need not be unitary.
ComplexMatrix round_trip_matrix(const RoundTripAssembly& a);

/// Power-iteration estimate of the spectral radius (30 iterations, random
/// start, stops early once successive estimates agree to 1e-6).
double spectral_radius_estimate(const ComplexMatrix& m, std::uint64_t seed = 0x5eed);

inline constexpr double kBranchMargin = 1e-9;

/// sum_i Log(1 - lambda_i) over the eigenvalues of M, principal branch per
/// factor. With `branch_check` a spectral radius >= 1 - kBranchMargin raises
/// BranchRisk.
Complex log_det_one_minus(const ComplexMatrix& m, bool branch_check = true);

/// Worker count from CASIMIR_THREADS (0 or unset = hardware concurrency).
/// Throws InvalidArgument on a malformed value.
unsigned worker_count();

/// Runs body(i) for i in [0, n) on up to worker_count() threads. Exceptions
/// from workers are rethrown (the one with the lowest index wins).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Evaluates f at every index in parallel and sums in index order, so the
/// result does not depend on scheduling.
double parallel_sum(std::size_t n, const std::function<double(std::size_t)>& f);

}  // namespace casimir::core
