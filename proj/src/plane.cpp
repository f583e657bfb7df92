#include "casimir/plane.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <variant>
#include <vector>

#include "casimir/constants.hpp"

namespace casimir::plane {

namespace {

constexpr double kC = kSpeedOfLight;

Complex eps_at(const MaterialModel& m, const PlaneChannel& ch) {
  if (ch.axis == Axis::Imaginary) return materials::eps_imag_axis(m, ch.frequency);
  return m.eps(ch.complex_frequency());
}

// sqrt(arg) with Re >= 0; a negative real argument is read as arg - i0 so that
// k_z = i kappa is the outgoing root.
Complex decay_root(Complex arg) {
  if (arg.imag() == 0.0 && arg.real() < 0.0) return {0.0, -std::sqrt(-arg.real())};
  return std::sqrt(arg);
}

// Imaginary axis, expressed through kappa_m instead of q. Mirror decay
// constants come from kappa_m^2 + (eps_p - eps_m) xi^2/c^2, which stays
// positive and avoids forming q^2 explicitly.
struct ImagAxisPoint {
  double eps_m = 1.0;
  double eps1 = 1.0;
  double eps2 = 1.0;
  bool pec1 = false;
  bool pec2 = false;
  double xi2_c2 = 0.0;

  ImagAxisPoint(const PlaneSystem& sys, double xi)
      : eps_m(materials::eps_imag_axis(sys.medium.model, xi)),
        pec1(sys.mat1.is_perfect_mirror()),
        pec2(sys.mat2.is_perfect_mirror()),
        xi2_c2(xi * xi / (kC * kC)) {
    if (!pec1) eps1 = materials::eps_imag_axis(sys.mat1, xi);
    if (!pec2) eps2 = materials::eps_imag_axis(sys.mat2, xi);
  }

  double r(bool pec, double eps_p, double km, Polarization pol) const {
    if (pec) return pol == Polarization::TE ? -1.0 : 1.0;
    const double kp = std::sqrt(km * km + (eps_p - eps_m) * xi2_c2);
    if (pol == Polarization::TE) return (km - kp) / (km + kp);
    return (eps_p * km - eps_m * kp) / (eps_p * km + eps_m * kp);
  }

  double log_term(double km, double separation) const {
    const double decay = std::exp(-2.0 * km * separation);
    double sum = 0.0;
    for (Polarization pol : {Polarization::TE, Polarization::TM}) {
      sum += std::log1p(-r(pec1, eps1, km, pol) * r(pec2, eps2, km, pol) * decay);
    }
    return sum;
  }
};

double imaginary_axis_sum(const PlaneSystem& sys, int order) {
  const core::GaussLegendreRule& rule = core::gauss_legendre(order);
  const double L = sys.separation;
  const double s_xi = kC / L;
  const double s_k = 1.0 / L;
  const double total = core::parallel_sum(rule.nodes.size(), [&](std::size_t i) {
    const double u = 0.5 * (rule.nodes[i] + 1.0);
    const double xi = s_xi * u / (1.0 - u);
    const double jac_xi = 0.5 * rule.weights[i] * s_xi / ((1.0 - u) * (1.0 - u));
    const ImagAxisPoint pt(sys, xi);
    const double kmin = std::sqrt(pt.eps_m * pt.xi2_c2);
    double inner = 0.0;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double v = 0.5 * (rule.nodes[j] + 1.0);
      const double km = kmin + s_k * v / (1.0 - v);
      const double jac_k = 0.5 * rule.weights[j] * s_k / ((1.0 - v) * (1.0 - v));
      inner += jac_k * km * pt.log_term(km, L);
    }
    return jac_xi * inner;
  });
  return kHbar / (4.0 * kPi * kPi) * total;
}

void check_real_axis_material(const MaterialModel& m, const char* role) {
  const auto& v = m.variant();
  bool ok = true;
  if (std::holds_alternative<materials::PerfectMirror>(v) || std::holds_alternative<materials::Plasma>(v)) ok = false;
  if (const auto* d = std::get_if<materials::Drude>(&v)) ok = d->gamma > 0.0;
  if (const auto* l = std::get_if<materials::Lorentz>(&v)) ok = l->gamma > 0.0;
  if (!ok) {
    raise(ErrorKind::DomainError,
          std::string("real-axis evaluation needs a damped or non-dispersive ") + role + ", got " + m.describe());
  }
}

double damping_rate(const MaterialModel& m) {
  const auto& v = m.variant();
  if (const auto* d = std::get_if<materials::Drude>(&v)) return d->gamma;
  if (const auto* l = std::get_if<materials::Lorentz>(&v)) return l->gamma;
  return std::numeric_limits<double>::infinity();
}

// g(omega) = 1 - r1 r2 exp(2 i k_z L) at fixed q and polarization.
struct RealAxisIntegrand {
  const PlaneSystem& sys;
  double q;
  Polarization pol;

  Complex g(double omega) const {
    const Complex eps_m = sys.medium.model.eps(omega);
    const Complex w = omega / kC;
    const Complex km = decay_root(q * q - eps_m * w * w);
    auto r = [&](const MaterialModel& mat) -> Complex {
      const Complex eps_p = mat.eps(omega);
      const Complex kp = decay_root(q * q - eps_p * w * w);
      if (pol == Polarization::TE) return (km - kp) / (km + kp);
      return (eps_p * km - eps_m * kp) / (eps_p * km + eps_m * kp);
    };
    return 1.0 - r(sys.mat1) * r(sys.mat2) * std::exp(-2.0 * km * sys.separation);
  }
};

struct Node {
  double omega;
  Complex g;
};

constexpr double kMaxPhaseStep = kPi / 4.0;
constexpr double kMaxLogModStep = 0.7;
constexpr int kMaxRefineDepth = 40;
constexpr double kTaperFraction = 0.5;

}  // namespace

void PlaneChannel::validate() const {
  if (!(q >= 0.0) || !std::isfinite(q)) raise(ErrorKind::DomainError, "channel q must be finite and >= 0");
  if (!(frequency > 0.0) || !std::isfinite(frequency)) {
    raise(ErrorKind::DomainError, "channel frequency must be finite and > 0");
  }
}

Complex PlaneChannel::complex_frequency() const {
  return axis == Axis::Imaginary ? Complex(0.0, frequency) : Complex(frequency, 0.0);
}

void PlaneSystem::validate() const {
  if (!(separation > 0.0) || !std::isfinite(separation)) {
    raise(ErrorKind::DomainError, "separation must be finite and > 0");
  }
  if (medium.model.is_perfect_mirror()) raise(ErrorKind::DomainError, "the gap medium cannot be a perfect mirror");
}

Complex normal_decay(const MaterialModel& m, const PlaneChannel& ch) {
  ch.validate();
  if (m.is_perfect_mirror()) raise(ErrorKind::DomainError, "perfect mirror has no propagation constant");
  const Complex eps = eps_at(m, ch);
  const Complex w = ch.complex_frequency() / kC;
  return decay_root(ch.q * ch.q - eps * w * w);
}

Complex fresnel_r(const MaterialModel& mat, const Medium& medium, const PlaneChannel& ch) {
  ch.validate();
  if (medium.model.is_perfect_mirror()) raise(ErrorKind::DomainError, "the gap medium cannot be a perfect mirror");
  if (mat.is_perfect_mirror()) return ch.pol == Polarization::TE ? -1.0 : 1.0;
  const Complex eps_m = eps_at(medium.model, ch);
  const Complex eps_p = eps_at(mat, ch);
  const Complex km = normal_decay(medium.model, ch);
  const Complex kp = normal_decay(mat, ch);
  if (ch.pol == Polarization::TE) return (km - kp) / (km + kp);
  return (eps_p * km - eps_m * kp) / (eps_p * km + eps_m * kp);
}

Complex translation_factor(const Medium& medium, const PlaneChannel& ch, double separation) {
  if (!(separation > 0.0)) raise(ErrorKind::DomainError, "separation must be > 0");
  return std::exp(-normal_decay(medium.model, ch) * separation);
}

double lifshitz_integrand(const PlaneSystem& sys, double xi, double q) {
  sys.validate();
  const PlaneChannel probe{xi, q, Polarization::TE, Axis::Imaginary};
  probe.validate();
  const ImagAxisPoint pt(sys, xi);
  return pt.log_term(std::sqrt(q * q + pt.eps_m * pt.xi2_c2), sys.separation);
}

core::EnergyResult energy_per_area(const PlaneSystem& sys, const core::QuadratureSpec& quad) {
  sys.validate();
  quad.validate();
  core::EnergyResult result;
  if (sys.separation < 1e-9) {
    result.metadata.warnings.push_back("separation below 1 nm: continuum material models are questionable");
  }
  int order = quad.base_order;
  double previous = imaginary_axis_sum(sys, order);
  result.metadata.orders.push_back(order);
  result.value = previous;
  result.error_estimate = std::abs(previous);
  for (int d = 0; d < quad.max_doublings; ++d) {
    order *= 2;
    const double current = imaginary_axis_sum(sys, order);
    result.metadata.orders.push_back(order);
    result.value = current;
    result.error_estimate = std::abs(current - previous);
    if (result.error_estimate <= quad.tol * std::abs(current)) return result;
    previous = current;
  }
  throw core::NotConvergedError("plane energy quadrature did not reach tolerance", result);
}

double frequency_taper(double omega, double omega_max) {
  const double start = kTaperFraction * omega_max;
  if (omega <= start) return 1.0;
  const double s = (omega - start) / (omega_max - start);
  if (s >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / s);
  const double b = std::exp(-1.0 / (1.0 - s));
  return b / (a + b);
}

double real_axis_slice(const PlaneSystem& sys, double q, Polarization pol, double omega_max) {
  sys.validate();
  check_real_axis_material(sys.mat1, "mirror");
  check_real_axis_material(sys.mat2, "mirror");
  check_real_axis_material(sys.medium.model, "medium");
  if (!(omega_max > 0.0) || !std::isfinite(omega_max)) raise(ErrorKind::DomainError, "omega_max must be > 0");
  if (!(q >= 0.0)) raise(ErrorKind::DomainError, "q must be >= 0");

  const RealAxisIntegrand f{sys, q, pol};

  // In a lossless gap g vanishes on the light line (both r -> -1); the grid
  // is graded toward it and it is kept as a panel edge, never evaluated.
  double light_line = -1.0;
  if (const auto* c = std::get_if<materials::ConstantEps>(&sys.medium.model.variant())) {
    light_line = kC * q / std::sqrt(c->eps);
  }
  const double gamma = std::min({damping_rate(sys.mat1), damping_rate(sys.mat2), damping_rate(sys.medium.model)});
  double step = omega_max / 2048.0;
  if (std::isfinite(gamma)) step = std::min(step, gamma / 8.0);

  // A hard stop at omega_max leaves a boundary term that oscillates in q
  // faster than any outer rule can follow; a smooth taper over the upper half
  // of the range removes it.
  const double taper_start = kTaperFraction * omega_max;
  auto window = [&](double w) { return frequency_taper(w, omega_max); };

  std::vector<double> grid;
  const double start = omega_max * 1e-12;
  for (double w = start; w < omega_max; w += step) grid.push_back(w);
  grid.push_back(taper_start);
  grid.push_back(omega_max);
  if (light_line > 0.0 && light_line < omega_max) {
    for (int j = 0; j <= 96; ++j) {
      const double d = std::pow(10.0, -j / 8.0);
      for (double w : {light_line * (1.0 - d), light_line * (1.0 + d)}) {
        if (w > start && w < omega_max) grid.push_back(w);
      }
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  auto near_light_line = [&](double w) {
    return light_line > 0.0 && std::abs(w - light_line) <= 1e-13 * light_line;
  };
  auto needs_split = [](const Node& a, const Node& b) {
    const Complex ratio = b.g / a.g;
    return std::abs(std::arg(ratio)) > kMaxPhaseStep || std::abs(std::log(std::abs(ratio))) > kMaxLogModStep;
  };

  // Refine so that neighbouring samples differ by less than a quarter turn.
  std::vector<Node> nodes;
  nodes.reserve(grid.size() * 2);
  std::vector<std::pair<Node, int>> stack;
  nodes.push_back({grid[0], f.g(grid[0])});
  for (std::size_t i = 1; i < grid.size(); ++i) {
    stack.push_back({{grid[i], f.g(grid[i])}, 0});
    while (!stack.empty()) {
      const Node& a = nodes.back();
      const auto [b, depth] = stack.back();
      const double mid = 0.5 * (a.omega + b.omega);
      const bool straddles = light_line > 0.0 && a.omega < light_line && b.omega > light_line;
      if (!straddles && depth < kMaxRefineDepth && !near_light_line(mid) && needs_split(a, b)) {
        stack.back().second = depth + 1;
        stack.push_back({{mid, f.g(mid)}, depth + 1});
      } else {
        nodes.push_back(b);
        stack.pop_back();
      }
    }
  }

  // Continuous phase at every node; each panel integrates
  // phase(ref) + arg(g / g_ref) with the reference taken off the light line.
  double total = 0.0;
  double total_abs = 0.0;
  double total_err = 0.0;
  double phase = std::arg(nodes[0].g);
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const Node& a = nodes[i - 1];
    const Node& b = nodes[i];
    const double next_phase = phase + std::arg(b.g / a.g);
    auto panel = [&](double lo, double hi, const Node& ref, double ref_phase) {
      const core::PanelIntegral p = core::integrate_panel(
          [&](double w) { return window(w) * (ref_phase + std::arg(f.g(w) / ref.g)); }, lo, hi, 8, 1e-10);
      total += p.value;
      total_abs += p.l1;
      total_err += p.error;
    };
    if (light_line > a.omega && light_line < b.omega) {
      panel(a.omega, light_line, a, phase);
      panel(light_line, b.omega, b, next_phase);
    } else {
      panel(a.omega, b.omega, a, phase);
    }
    phase = next_phase;
  }
  // Without zeros of g in the upper half plane the continued phase returns to
  // the principal branch at the end of the range.
  const double principal = std::arg(nodes.back().g);
  if (std::abs(phase - principal) > 1e-6) {
    raise(ErrorKind::OscillatoryFailure, "real-axis phase does not close: winding " +
                                             std::to_string((phase - principal) / (2.0 * kPi)) + " at q = " +
                                             std::to_string(q));
  }
  if (total_err > 1e-7 * total_abs + 1e-12 * omega_max) {
    raise(ErrorKind::OscillatoryFailure, "real-axis panel integration exceeded its subdivision depth at q = " +
                                             std::to_string(q));
  }
  return total;
}

core::EnergyResult energy_per_area_real_axis(const PlaneSystem& sys, double omega_max,
                                             const core::QuadratureSpec& quad) {
  sys.validate();
  quad.validate();
  core::EnergyResult result;
  if (sys.separation < 1e-9) {
    result.metadata.warnings.push_back("separation below 1 nm: continuum material models are questionable");
  }
  check_real_axis_material(sys.medium.model, "medium");
  if (!(omega_max > 0.0) || !std::isfinite(omega_max)) raise(ErrorKind::DomainError, "omega_max must be > 0");

  // Above the plasma edge the mirrors reflect totally just past the light
  // line, and g there is a sawtooth of nearly lossless gap modes whose
  // integral cancels to ~exp(-2 q L). The cancellation needs the whole window
  // below the taper, so q stops at 0.8 n omega_taper / c; beyond it the slices
  // are negligible.
  const double taper_start = kTaperFraction * omega_max;
  const double n_gap = materials::refractive_index(sys.medium.model, taper_start).real();
  const double q_cut = 0.8 * n_gap * taper_start / kC;
  const double scale = 1.0 / sys.separation;
  const double v_cut = q_cut / (q_cut + scale);
  auto sum_at = [&](int order) {
    const core::GaussLegendreRule& rule = core::gauss_legendre(order);
    const double s = core::parallel_sum(rule.nodes.size(), [&](std::size_t i) {
      const double v = 0.5 * v_cut * (rule.nodes[i] + 1.0);
      const double q = scale * v / (1.0 - v);
      const double jac = 0.5 * v_cut * rule.weights[i] * scale / ((1.0 - v) * (1.0 - v));
      return jac * q *
             (real_axis_slice(sys, q, Polarization::TE, omega_max) +
              real_axis_slice(sys, q, Polarization::TM, omega_max));
    });
    return kHbar / (4.0 * kPi * kPi) * s;
  };
  int order = quad.base_order;
  double previous = sum_at(order);
  result.metadata.orders.push_back(order);
  result.value = previous;
  result.error_estimate = std::abs(previous);
  for (int d = 0; d < quad.max_doublings; ++d) {
    order *= 2;
    const double current = sum_at(order);
    result.metadata.orders.push_back(order);
    result.value = current;
    result.error_estimate = std::abs(current - previous);
    if (result.error_estimate <= quad.tol * std::abs(current)) return result;
    previous = current;
  }
  throw core::NotConvergedError("real-axis plane energy did not reach tolerance", result);
}

}  // namespace casimir::plane
