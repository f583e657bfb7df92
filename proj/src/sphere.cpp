#include "casimir/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <variant>

#include "casimir/constants.hpp"

namespace casimir::sphere {

namespace {

constexpr double kC = kSpeedOfLight;
// exp(-1400) underflows; round trips beyond this decay exponent contribute nothing.
constexpr double kDecayCutoff = 1400.0;

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) raise(ErrorKind::DomainError, std::string(what) + " must be > 0");
}

double log_i0(double x) {
  if (x < 1.0) return std::log(std::sinh(x) / x);
  return x + std::log1p(-std::exp(-2.0 * x)) - std::log(2.0 * x);
}

// ratio[l] = i_l / i_{l-1} from the continued fraction, run downward from
// well above both l and x.
struct RegularBessel {
  std::vector<double> ratio;
  std::vector<double> log;
};

RegularBessel regular_bessel(int n, double x) {
  RegularBessel out;
  out.ratio.assign(static_cast<std::size_t>(n) + 1, 0.0);
  out.log.assign(static_cast<std::size_t>(n) + 1, 0.0);
  const int start = n + 60 + static_cast<int>(std::ceil(2.0 * x));
  double r = 0.0;
  for (int l = start; l >= 1; --l) {
    r = 1.0 / ((2.0 * l + 1.0) / x + r);
    if (l <= n) out.ratio[static_cast<std::size_t>(l)] = r;
  }
  out.log[0] = log_i0(x);
  for (int l = 1; l <= n; ++l) {
    out.log[static_cast<std::size_t>(l)] = out.log[static_cast<std::size_t>(l) - 1] + std::log(out.ratio[static_cast<std::size_t>(l)]);
  }
  return out;
}

// ratio[l] = k_l / k_{l-1}, upward; every term is positive.
struct OutgoingBessel {
  std::vector<double> ratio;
  std::vector<double> log;
};

OutgoingBessel outgoing_bessel(int n, double x) {
  OutgoingBessel out;
  out.ratio.assign(static_cast<std::size_t>(n) + 1, 0.0);
  out.log.assign(static_cast<std::size_t>(n) + 1, 0.0);
  out.log[0] = -x - std::log(x);
  double q = 0.0;
  for (int l = 1; l <= n; ++l) {
    q = (l == 1) ? 1.0 + 1.0 / x : 1.0 / q + (2.0 * l - 1.0) / x;
    out.ratio[static_cast<std::size_t>(l)] = q;
    out.log[static_cast<std::size_t>(l)] = out.log[static_cast<std::size_t>(l) - 1] + std::log(q);
  }
  return out;
}

// Mie amplitudes split as a = sigma^2 tau with sigma^2 = i_l(x) / k_l(x).
struct ScaledMie {
  std::vector<double> tau_e;
  std::vector<double> tau_m;
  std::vector<double> log_sigma;
};

ScaledMie scaled_mie(const MaterialModel& mat, double R, double xi, int lmax) {
  const double x = xi * R / kC;
  const RegularBessel in = regular_bessel(lmax, x);
  const OutgoingBessel out = outgoing_bessel(lmax, x);
  const bool pec = mat.is_perfect_mirror();
  const double n = pec ? 0.0 : std::sqrt(materials::eps_imag_axis(mat, xi));
  RegularBessel inner;
  if (!pec) inner = regular_bessel(lmax, n * x);

  ScaledMie s;
  s.tau_e.assign(static_cast<std::size_t>(lmax) + 1, 0.0);
  s.tau_m = s.tau_e;
  s.log_sigma = s.tau_e;
  for (int l = 1; l <= lmax; ++l) {
    const auto k = static_cast<std::size_t>(l);
    const double d_psi = 1.0 / in.ratio[k] - l / x;
    const double d_zeta = -1.0 / out.ratio[k] - l / x;
    s.log_sigma[k] = 0.5 * (in.log[k] - out.log[k]);
    if (pec) {
      s.tau_e[k] = -d_psi / d_zeta;
      s.tau_m[k] = -1.0;
    } else {
      const double d_in = 1.0 / inner.ratio[k] - l / (n * x);
      s.tau_e[k] = (d_in - n * d_psi) / (n * d_zeta - d_in);
      s.tau_m[k] = (n * d_in - d_psi) / (d_zeta - n * d_in);
    }
  }
  return s;
}

// alpha^m_{lambda l}(y) = sum_p c_p k_p(y), p = |l - lambda|, ..., l + lambda
// in steps of 2, with c_p = (-1)^l (2p + 1) int_{-1}^{1} P_l^m P_lambda^m P_p
// over orthonormal associated Legendre functions. The integrals are exact
// Gauss-Legendre sums, which stay accurate where Racah's alternating sum for
// the 3j symbols does not.
class TranslationTable {
 public:
  explicit TranslationTable(int lmax) : lmax_(lmax) {
    const int lam_max = lmax + 1;
    const int p_max = lmax + lam_max;
    const int order = 2 * lmax + 2;  // exact up to degree 4 lmax + 3
    const core::GaussLegendreRule& rule = core::gauss_legendre(std::max(order, 8));
    const std::size_t nk = rule.nodes.size();

    std::vector<std::vector<double>> leg(nk, std::vector<double>(static_cast<std::size_t>(p_max) + 1));
    for (std::size_t k = 0; k < nk; ++k) {
      const double x = rule.nodes[k];
      auto& P = leg[k];
      P[0] = 1.0;
      if (p_max >= 1) P[1] = x;
      for (int p = 2; p <= p_max; ++p) P[p] = ((2.0 * p - 1.0) * x * P[p - 1] - (p - 1.0) * P[p - 2]) / p;
    }

    coef_.resize(static_cast<std::size_t>(lmax + 1) * (lmax + 1) * (lam_max + 1));
    std::vector<std::vector<double>> alf(nk, std::vector<double>(static_cast<std::size_t>(lam_max) + 1));
    for (int m = 0; m <= lmax; ++m) {
      for (std::size_t k = 0; k < nk; ++k) normalized_legendre(m, lam_max, rule.nodes[k], alf[k]);
      for (int l = m; l <= lmax; ++l) {
        for (int lam = m; lam <= lam_max; ++lam) {
          auto& c = coef_[index(m, l, lam)];
          const int p0 = std::abs(l - lam);
          for (int p = p0; p <= l + lam; p += 2) {
            double g = 0.0;
            for (std::size_t k = 0; k < nk; ++k) g += rule.weights[k] * alf[k][l] * alf[k][lam] * leg[k][p];
            c.push_back(((l % 2) ? -1.0 : 1.0) * (2.0 * p + 1.0) * g);
          }
        }
      }
    }
  }

  int lmax() const { return lmax_; }

  const std::vector<double>& coef(int m, int l, int lam) const { return coef_[index(m, l, lam)]; }

  // Sum with every term scaled by exp(log_scale), so that huge k_p combined
  // with tiny Mie prefactors never overflow.
  double alpha(int m, int l, int lam, const std::vector<double>& log_k, double log_scale) const {
    const auto& c = coef(m, l, lam);
    const int p0 = std::abs(l - lam);
    double s = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      s += c[j] * std::exp(log_k[static_cast<std::size_t>(p0) + 2 * j] + log_scale);
    }
    return s;
  }

 private:
  std::size_t index(int m, int l, int lam) const {
    return (static_cast<std::size_t>(m) * (lmax_ + 1) + static_cast<std::size_t>(l)) * (lmax_ + 2) +
           static_cast<std::size_t>(lam);
  }

  // Orthonormal P_l^m on [-1, 1] (Condon-Shortley phase) for l = m..lmax.
  static void normalized_legendre(int m, int lmax, double x, std::vector<double>& out) {
    const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
    double pmm = 1.0 / std::sqrt(2.0);
    for (int j = 1; j <= m; ++j) pmm *= -std::sqrt((2.0 * j + 1.0) / (2.0 * j)) * s;
    out[m] = pmm;
    if (m + 1 > lmax) return;
    out[m + 1] = x * std::sqrt(2.0 * m + 3.0) * pmm;
    for (int l = m + 2; l <= lmax; ++l) {
      const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
      const double a_prev = std::sqrt((4.0 * (l - 1.0) * (l - 1.0) - 1.0) /
                                      ((l - 1.0) * (l - 1.0) - static_cast<double>(m) * m));
      out[l] = a * (x * out[l - 1] - out[l - 2] / a_prev);
    }
  }

  int lmax_;
  std::vector<std::vector<double>> coef_;
};

const TranslationTable& translation_table(int lmax) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<TranslationTable>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[lmax];
  if (!slot) slot = std::make_unique<TranslationTable>(lmax);
  return *slot;
}

double ladder(int l, int m) {
  const double num = static_cast<double>(l) * l - static_cast<double>(m) * m;
  if (num <= 0.0) return 0.0;
  return std::sqrt(num / ((2.0 * l + 1.0) * (2.0 * l - 1.0)));
}

// Block with entry (l', l) multiplied by exp(row_scale[l'] + col_scale[l]).
ComplexMatrix scaled_translation(const TranslationTable& tab, int lmax, int m, double y,
                                 const std::vector<double>& log_k, const std::vector<double>& row_scale,
                                 const std::vector<double>& col_scale) {
  const int am = std::abs(m);
  const int l0 = std::max(1, am);
  const Index n = lmax - l0 + 1;
  ComplexMatrix u = ComplexMatrix::Zero(2 * n, 2 * n);
  for (int lp = l0; lp <= lmax; ++lp) {
    for (int l = l0; l <= lmax; ++l) {
      const double s = row_scale[static_cast<std::size_t>(lp)] + col_scale[static_cast<std::size_t>(l)];
      const double a0 = tab.alpha(am, l, lp, log_k, s);
      double a = a0 - y * ladder(lp + 1, am) / (lp + 1.0) * tab.alpha(am, l, lp + 1, log_k, s);
      if (lp - 1 >= am) a += y * ladder(lp, am) / lp * tab.alpha(am, l, lp - 1, log_k, s);
      const double c = -am * y * a0 / (lp * (lp + 1.0));
      const Index i = lp - l0;
      const Index j = l - l0;
      u(i, j) = a;
      u(n + i, n + j) = a;
      u(i, n + j) = c;
      u(n + i, j) = c;
    }
  }
  return u;
}

void parity_flip(ComplexMatrix& u, int lmax, int m) {
  const int l0 = std::max(1, std::abs(m));
  const Index n = lmax - l0 + 1;
  Eigen::VectorXd p(2 * n);
  for (Index i = 0; i < n; ++i) {
    const int l = l0 + static_cast<int>(i);
    p(i) = (l % 2) ? 1.0 : -1.0;  // electric: (-1)^(l+1)
    p(n + i) = -p(i);             // magnetic: (-1)^l
  }
  u = p.asDiagonal() * u * p.asDiagonal();
}

ComplexMatrix mie_diagonal(const ScaledMie& s, int lmax, int m) {
  const int l0 = std::max(1, std::abs(m));
  const Index n = lmax - l0 + 1;
  ComplexMatrix t = ComplexMatrix::Zero(2 * n, 2 * n);
  for (Index i = 0; i < n; ++i) {
    const auto l = static_cast<std::size_t>(l0 + i);
    t(i, i) = s.tau_e[l];
    t(n + i, n + i) = s.tau_m[l];
  }
  return t;
}

// Everything in one m-block that does not depend on m.
struct NodeData {
  ScaledMie s1;
  ScaledMie s2;
  std::vector<double> log_k;
  double y = 0.0;
};

NodeData node_data(const SphereSystem& sys, double xi, int lmax) {
  NodeData d;
  d.s1 = scaled_mie(sys.mat1, sys.R1, xi, lmax);
  d.s2 = scaled_mie(sys.mat2, sys.R2, xi, lmax);
  d.y = xi * sys.L / kC;
  d.log_k = outgoing_bessel(2 * lmax + 2, d.y).log;
  return d;
}

ComplexMatrix round_trip_from(const NodeData& d, const TranslationTable& tab, int lmax, int m) {
  const ComplexMatrix v21 = scaled_translation(tab, lmax, m, d.y, d.log_k, d.s1.log_sigma, d.s2.log_sigma);
  ComplexMatrix v12 = scaled_translation(tab, lmax, m, d.y, d.log_k, d.s2.log_sigma, d.s1.log_sigma);
  parity_flip(v12, lmax, m);
  return core::round_trip_matrix({mie_diagonal(d.s1, lmax, m), v21, mie_diagonal(d.s2, lmax, m), v12});
}

void require_lmax_m(int lmax, int m) {
  if (lmax < 1) raise(ErrorKind::DomainError, "lmax must be >= 1");
  if (std::abs(m) > lmax) raise(ErrorKind::DomainError, "|m| must not exceed lmax");
}

struct XiIntegral {
  double value = 0.0;
  double error = 0.0;
  std::vector<int> orders;
  bool converged = false;
};

XiIntegral integrate_xi(const SphereSystem& sys, int lmax, const core::QuadratureSpec& quad) {
  (void)translation_table(lmax);  // build outside the parallel region
  const double scale = kC / (sys.L - sys.R1 - sys.R2);
  const auto sum_at = [&](int order) {
    const core::GaussLegendreRule& rule = core::gauss_legendre(order);
    const double total = core::parallel_sum(rule.nodes.size(), [&](std::size_t i) {
      const double u = 0.5 * (rule.nodes[i] + 1.0);
      const double xi = scale * u / (1.0 - u);
      const double jac = 0.5 * rule.weights[i] * scale / ((1.0 - u) * (1.0 - u));
      return jac * energy_integrand(sys, xi, lmax);
    });
    return kHbar / (2.0 * kPi) * total;
  };
  XiIntegral out;
  int order = quad.base_order;
  double previous = sum_at(order);
  out.orders.push_back(order);
  out.value = previous;
  out.error = std::abs(previous);
  for (int d = 0; d < quad.max_doublings; ++d) {
    order *= 2;
    const double current = sum_at(order);
    out.orders.push_back(order);
    out.value = current;
    out.error = std::abs(current - previous);
    if (out.error <= quad.tol * std::abs(current)) {
      out.converged = true;
      return out;
    }
    previous = current;
  }
  return out;
}

core::EnergyResult to_result(const XiIntegral& q, int lmax) {
  core::EnergyResult r;
  r.value = q.value;
  r.error_estimate = q.error;
  r.metadata.orders = q.orders;
  r.metadata.lmax = lmax;
  return r;
}

}  // namespace

void MultipoleChannel::validate() const {
  if (l < 1) raise(ErrorKind::DomainError, "multipole order l must be >= 1");
  if (std::abs(m) > l) raise(ErrorKind::DomainError, "|m| must not exceed l");
}

Index block_size(int lmax, int m) {
  require_lmax_m(lmax, m);
  return 2 * (lmax - std::max(1, std::abs(m)) + 1);
}

Index channel_index(int lmax, const MultipoleChannel& ch) {
  ch.validate();
  if (ch.l > lmax) raise(ErrorKind::DomainError, "channel l exceeds lmax");
  const Index half = block_size(lmax, ch.m) / 2;
  const Index offset = ch.l - std::max(1, std::abs(ch.m));
  return ch.pol == MultipolePol::Electric ? offset : half + offset;
}

void SphereSystem::validate() const {
  require_positive(R1, "R1");
  require_positive(R2, "R2");
  require_positive(L, "L");
  if (!(L > R1 + R2)) raise(ErrorKind::DomainError, "spheres overlap: need L > R1 + R2");
  if (lmax < 0) raise(ErrorKind::DomainError, "lmax must be >= 0 (0 = automatic)");
  const auto* c = std::get_if<materials::ConstantEps>(&medium.model.variant());
  if (c == nullptr || c->eps != 1.0) {
    raise(ErrorKind::DomainError, "sphere geometry supports a vacuum medium only, got " + medium.model.describe());
  }
}

int SphereSystem::default_lmax() const {
  const double gap = L - R1 - R2;
  // the small offset keeps ratios like 10.000000001 from rounding up
  return std::max(5, static_cast<int>(std::ceil(10.0 * std::max(R1, R2) / gap - 1e-9)));
}

std::vector<double> log_bessel_i(int n, double x) {
  if (n < 0) raise(ErrorKind::DomainError, "Bessel order must be >= 0");
  require_positive(x, "Bessel argument");
  return regular_bessel(n, x).log;
}

std::vector<double> log_bessel_k(int n, double x) {
  if (n < 0) raise(ErrorKind::DomainError, "Bessel order must be >= 0");
  require_positive(x, "Bessel argument");
  return outgoing_bessel(n, x).log;
}

MieAmplitudes mie_amplitudes(const MaterialModel& mat, double R, double xi, int l) {
  if (l < 1) raise(ErrorKind::DomainError, "Mie order l must be >= 1");
  require_positive(xi, "xi");
  require_positive(R, "radius");
  const ScaledMie s = scaled_mie(mat, R, xi, l);
  const auto k = static_cast<std::size_t>(l);
  const double sigma2 = std::exp(2.0 * s.log_sigma[k]);
  return {sigma2 * s.tau_e[k], sigma2 * s.tau_m[k]};
}

double scalar_translation(int lambda, int l, int m, double y) {
  require_positive(y, "y");
  const int am = std::abs(m);
  if (l < am || lambda < am) raise(ErrorKind::DomainError, "scalar_translation needs l, lambda >= |m|");
  const TranslationTable& tab = translation_table(std::max(l, lambda));
  return tab.alpha(am, l, lambda, outgoing_bessel(l + lambda, y).log, 0.0);
}

ComplexMatrix translation_block(int lmax, int m, double xi, double L) {
  require_lmax_m(lmax, m);
  require_positive(xi, "xi");
  require_positive(L, "L");
  const double y = xi * L / kC;
  const std::vector<double> zero(static_cast<std::size_t>(lmax) + 1, 0.0);
  return scaled_translation(translation_table(lmax), lmax, m, y, outgoing_bessel(2 * lmax + 2, y).log, zero,
                            zero);
}

ComplexMatrix round_trip_block(const SphereSystem& sys, double xi, int m, int lmax) {
  sys.validate();
  require_lmax_m(lmax, m);
  require_positive(xi, "xi");
  return round_trip_from(node_data(sys, xi, lmax), translation_table(lmax), lmax, m);
}

double energy_integrand(const SphereSystem& sys, double xi, int lmax) {
  require_lmax_m(lmax, 0);
  require_positive(xi, "xi");
  if (2.0 * xi * (sys.L - sys.R1 - sys.R2) / kC > kDecayCutoff) return 0.0;
  const TranslationTable& tab = translation_table(lmax);
  const NodeData d = node_data(sys, xi, lmax);
  double sum = 0.0;
  for (int m = 0; m <= lmax; ++m) {
    const double w = (m == 0) ? 1.0 : 2.0;
    sum += w * core::log_det_one_minus(round_trip_from(d, tab, lmax, m)).real();
  }
  return sum;
}

core::EnergyResult sphere_energy(const SphereSystem& sys, const core::QuadratureSpec& quad) {
  sys.validate();
  quad.validate();
  const bool automatic = sys.lmax == 0;
  int lmax = automatic ? sys.default_lmax() : sys.lmax;
  if (automatic && lmax > kMaxAutoLmax) {
    raise(ErrorKind::DomainError, "spheres too close for automatic truncation (default lmax " + std::to_string(lmax) +
                                      "); set lmax explicitly");
  }

  XiIntegral q = integrate_xi(sys, lmax, quad);
  if (!q.converged) throw core::NotConvergedError("sphere energy quadrature did not reach tolerance", to_result(q, lmax));
  if (!automatic) return to_result(q, lmax);

  while (true) {
    const int next = 2 * lmax;
    if (next > kMaxAutoLmax) {
      core::EnergyResult best = to_result(q, lmax);
      throw core::NotConvergedError("lmax doubling did not settle below lmax " + std::to_string(kMaxAutoLmax),
                                    best);
    }
    const XiIntegral q2 = integrate_xi(sys, next, quad);
    core::EnergyResult r = to_result(q2, next);
    const double diff = std::abs(q2.value - q.value);
    r.metadata.truncation_change = q2.value != 0.0 ? diff / std::abs(q2.value) : 0.0;
    r.error_estimate = q2.error + diff;
    if (!q2.converged) throw core::NotConvergedError("sphere energy quadrature did not reach tolerance", r);
    if (r.metadata.truncation_change < kLmaxTol) return r;
    q = q2;
    lmax = next;
  }
}

}  // namespace casimir::sphere
