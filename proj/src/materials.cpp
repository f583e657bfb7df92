#include "casimir/materials.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "casimir/errors.hpp"

namespace casimir::materials {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void require_rate(double value, const char* name) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    raise(ErrorKind::DomainError, std::string(name) + " must be finite and >= 0");
  }
}

}  // namespace

MaterialModel::MaterialModel(Variant model) : model_(model) {
  std::visit(Overloaded{
                 [](const PerfectMirror&) {},
                 [](const Plasma& p) { require_rate(p.omega_p, "omega_p"); },
                 [](const Drude& d) {
                   require_rate(d.omega_p, "omega_p");
                   require_rate(d.gamma, "gamma");
                 },
                 [](const ConstantEps& c) {
                   if (!(c.eps >= 1.0) || !std::isfinite(c.eps)) {
                     raise(ErrorKind::DomainError, "constant eps must be finite and >= 1");
                   }
                 },
                 [](const Lorentz& l) {
                   require_rate(l.omega_p, "omega_p");
                   require_rate(l.omega_0, "omega_0");
                   require_rate(l.gamma, "gamma");
                 },
             },
             model_);
}

std::string MaterialModel::describe() const {
  std::ostringstream out;
  out.precision(17);
  std::visit(Overloaded{
                 [&](const PerfectMirror&) { out << "perfect_mirror"; },
                 [&](const Plasma& p) { out << "plasma(omega_p=" << p.omega_p << ")"; },
                 [&](const Drude& d) {
                   out << "drude(omega_p=" << d.omega_p << ", gamma=" << d.gamma << ")";
                 },
                 [&](const ConstantEps& c) { out << "constant_eps(" << c.eps << ")"; },
                 [&](const Lorentz& l) {
                   out << "lorentz(omega_p=" << l.omega_p << ", omega_0=" << l.omega_0
                       << ", gamma=" << l.gamma << ")";
                 },
             },
             model_);
  return out.str();
}

Complex MaterialModel::eps(Complex omega) const {
  constexpr Complex i(0.0, 1.0);
  return std::visit(
      Overloaded{
          [](const PerfectMirror&) -> Complex {
            raise(ErrorKind::DomainError, "perfect mirror has no finite permittivity");
          },
          [&](const Plasma& p) -> Complex {
            if (omega == 0.0) raise(ErrorKind::DomainError, "plasma eps diverges at omega = 0");
            return 1.0 - p.omega_p * p.omega_p / (omega * omega);
          },
          [&](const Drude& d) -> Complex {
            if (omega == 0.0) raise(ErrorKind::DomainError, "drude eps diverges at omega = 0");
            return 1.0 - d.omega_p * d.omega_p / (omega * (omega + i * d.gamma));
          },
          [](const ConstantEps& c) -> Complex { return c.eps; },
          [&](const Lorentz& l) -> Complex {
            return 1.0 + l.omega_p * l.omega_p /
                             (l.omega_0 * l.omega_0 - omega * omega - i * l.gamma * omega);
          },
      },
      model_);
}

double eps_imag_axis(const MaterialModel& m, double xi) {
  if (!(xi > 0.0)) raise(ErrorKind::DomainError, "imaginary frequency must be positive");
  return std::visit(
      Overloaded{
          [](const PerfectMirror&) { return std::numeric_limits<double>::infinity(); },
          [&](const Plasma& p) { return 1.0 + p.omega_p * p.omega_p / (xi * xi); },
          [&](const Drude& d) { return 1.0 + d.omega_p * d.omega_p / (xi * (xi + d.gamma)); },
          [](const ConstantEps& c) { return c.eps; },
          [&](const Lorentz& l) {
            return 1.0 + l.omega_p * l.omega_p / (l.omega_0 * l.omega_0 + xi * xi + l.gamma * xi);
          },
      },
      m.variant());
}

Complex refractive_index(const MaterialModel& m, Complex omega) {
  if (m.is_perfect_mirror()) raise(ErrorKind::DomainError, "perfect mirror has no refractive index");
  if (omega == 0.0) raise(ErrorKind::DomainError, "refractive index requested at omega = 0");
  Complex n = std::sqrt(m.eps(omega));
  if (n.imag() < 0.0) n = -n;
  return n;
}

}  // namespace casimir::materials
