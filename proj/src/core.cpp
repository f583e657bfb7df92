#include "casimir/core.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

namespace casimir::core {

void QuadratureSpec::validate() const {
  if (base_order < 8) raise(ErrorKind::InvalidArgument, "quadrature order must be >= 8");
  if (max_doublings < 0) raise(ErrorKind::InvalidArgument, "max_doublings must be >= 0");
  if (!(tol > 0.0)) raise(ErrorKind::InvalidArgument, "quadrature tolerance must be > 0");
}

namespace {

GaussLegendreRule build_rule(int n) {
  GaussLegendreRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // refresh the derivative at the converged node
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[static_cast<std::size_t>(i)] = -x;
    rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = w;
    rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

}  // namespace

const GaussLegendreRule& gauss_legendre(int order) {
  if (order < 1) raise(ErrorKind::InvalidArgument, "Gauss-Legendre order must be >= 1");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussLegendreRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<GaussLegendreRule>(build_rule(order));
  return *slot;
}

double integrate_semiinfinite_fixed(const std::function<double(double)>& f, int order,
                                    double scale) {
  if (!(scale > 0.0)) raise(ErrorKind::InvalidArgument, "integration scale must be > 0");
  const GaussLegendreRule& rule = gauss_legendre(order);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double u = 0.5 * (rule.nodes[i] + 1.0);
    const double one_minus = 1.0 - u;
    const double x = scale * u / one_minus;
    const double jac = scale / (one_minus * one_minus);
    sum += 0.5 * rule.weights[i] * jac * f(x);
  }
  return sum;
}

Integral integrate_semiinfinite(const std::function<double(double)>& f, const QuadratureSpec& spec,
                                double scale) {
  spec.validate();
  Integral out;
  int order = spec.base_order;
  double previous = integrate_semiinfinite_fixed(f, order, scale);
  out.value = previous;
  out.order = order;
  out.error_estimate = std::abs(previous);
  for (int d = 0; d < spec.max_doublings; ++d) {
    order *= 2;
    const double current = integrate_semiinfinite_fixed(f, order, scale);
    out.value = current;
    out.order = order;
    out.error_estimate = std::abs(current - previous);
    if (out.error_estimate <= spec.tol * std::abs(current)) {
      out.converged = true;
      return out;
    }
    previous = current;
  }
  return out;
}

PanelIntegral integrate_panel(const std::function<double(double)>& f, double lo, double hi, int max_depth,
                              double tol) {
  if (!(hi > lo)) raise(ErrorKind::InvalidArgument, "integrate_panel: need lo < hi");
  if (max_depth < 0 || !(tol > 0.0)) raise(ErrorKind::InvalidArgument, "integrate_panel: bad depth or tolerance");
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  PanelIntegral out;
  const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      [&](double t) { return f(mid + half * t); }, -1.0, 1.0, static_cast<unsigned>(max_depth), tol, &out.error,
      &out.l1);
  out.value = half * v;
  out.error *= half;
  out.l1 *= half;
  return out;
}

ComplexMatrix round_trip_matrix(const RoundTripAssembly& a) {
  const Index n = a.s1_ii.rows();
  auto square = [n](const ComplexMatrix& m) { return m.rows() == n && m.cols() == n; };
  if (!square(a.s1_ii) || !square(a.t12) || !square(a.s2_ii) || !square(a.t21)) {
    raise(ErrorKind::ChannelMismatch, "round_trip_matrix: factors must be square and conformable");
  }
  return a.s1_ii * a.t12 * a.s2_ii * a.t21;
}

double spectral_radius_estimate(const ComplexMatrix& m, std::uint64_t seed) {
  if (m.rows() != m.cols()) raise(ErrorKind::InvalidArgument, "spectral radius of non-square matrix");
  if (m.rows() == 0) return 0.0;
  Eigen::VectorXcd v = blockmat::random_gaussian(m.rows(), 1, seed);
  v.normalize();
  double estimate = 0.0;
  for (int iter = 0; iter < 30; ++iter) {
    Eigen::VectorXcd w = m * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    const double next = norm;
    v = w / norm;
    if (iter > 0 && std::abs(next - estimate) <= 1e-6 * next) {
      estimate = next;
      break;
    }
    estimate = next;
  }
  return estimate;
}

namespace {

// Principal log(1 - z), keeping full relative accuracy for tiny |z|.
Complex log_one_minus(Complex z) {
  if (std::abs(z) < 1e-4) return -z * (1.0 + z * (0.5 + z * (1.0 / 3.0 + z * 0.25)));
  return std::log(1.0 - z);
}

}  // namespace

Complex log_det_one_minus(const ComplexMatrix& m, bool branch_check) {
  if (m.rows() != m.cols()) raise(ErrorKind::InvalidArgument, "log_det_one_minus: square matrix required");
  const Index n = m.rows();
  if (n == 0) return Complex(0.0);
  if (n == 1) {
    const Complex lambda = m(0, 0);
    if (branch_check && std::abs(lambda) >= 1.0 - kBranchMargin) {
      raise(ErrorKind::BranchRisk, "round-trip eigenvalue modulus " + std::to_string(std::abs(lambda)));
    }
    return log_one_minus(lambda);
  }
  // Deep in the evanescent tail the entries are ~1e-180; squared norms inside
  // the eigen-solver would underflow, so it works on M / max|M_ij|.
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return Complex(0.0);
  if (!std::isfinite(scale)) raise(ErrorKind::InvalidArgument, "log_det_one_minus: non-finite entry");
  // The guard uses the eigenvalues the log-det needs anyway. A power estimate
  // would flag non-normal M whose transient norm growth exceeds the radius.
  const ComplexMatrix normalized = m / scale;
  const Eigen::ComplexEigenSolver<ComplexMatrix> eig(normalized, false);
  Complex sum(0.0);
  double rho = 0.0;
  for (Index i = 0; i < n; ++i) {
    const Complex lambda = scale * eig.eigenvalues()(i);
    rho = std::max(rho, std::abs(lambda));
    sum += log_one_minus(lambda);
  }
  if (branch_check && rho >= 1.0 - kBranchMargin) {
    raise(ErrorKind::BranchRisk, "round-trip spectral radius " + std::to_string(rho));
  }
  return sum;
}

unsigned worker_count() {
  unsigned requested = 0;
  if (const char* env = std::getenv("CASIMIR_THREADS"); env != nullptr && *env != '\0') {
    const std::string_view text(env);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), requested);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      raise(ErrorKind::InvalidArgument, "CASIMIR_THREADS must be a non-negative integer");
    }
  }
  if (requested == 0) requested = std::max(1u, std::thread::hardware_concurrency());
  return requested;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto run = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double parallel_sum(std::size_t n, const std::function<double(std::size_t)>& f) {
  std::vector<double> values(n, 0.0);
  parallel_for(n, [&](std::size_t i) { values[i] = f(i); });
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum;
}

}  // namespace casimir::core
