#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/gil_safe_call_once.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "casimir/blockmat.hpp"
#include "casimir/constants.hpp"
#include "casimir/plane.hpp"
#include "casimir/sphere.hpp"
#include "casimir/toy.hpp"
#include "cli.hpp"

namespace py = pybind11;
using namespace casimir;

namespace {

materials::MaterialModel material(const std::string& spec) {
  return cli::parse_material(nlohmann::json::parse(spec));
}

py::dict energy_dict(const core::EnergyResult& e, bool converged) {
  py::dict d;
  d["value"] = e.value;
  d["error_estimate"] = e.error_estimate;
  d["orders"] = e.metadata.orders;
  d["lmax"] = e.metadata.lmax;
  d["warnings"] = e.metadata.warnings;
  d["converged"] = converged;
  return d;
}

template <class F>
py::dict guarded_energy(F f) {
  try {
    return energy_dict(f(), true);
  } catch (const core::NotConvergedError& e) {
    return energy_dict(e.best(), false);
  }
}

}  // namespace

PYBIND11_MODULE(_casimir, m) {
  m.doc() = "Casimir energies from scattering matrices (compiled core)";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> casimir_error;
  casimir_error.call_once_and_store_result([&] { return py::exception<Error>(m, "CasimirError"); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const cli::ConfigError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const Error& e) {
      py::set_error(casimir_error.get_stored(), e.what());
    }
  });

  m.attr("HBAR") = kHbar;
  m.attr("SPEED_OF_LIGHT") = kSpeedOfLight;

  m.def("ideal_plane_energy_per_area", &ideal_plane_energy_per_area, py::arg("separation"));

  m.def(
      "plane_energy",
      [](double L, const std::string& mat1, const std::string& mat2, const std::string& medium, int base_order,
         int max_doublings, double tol) {
        plane::PlaneSystem s;
        s.mat1 = material(mat1);
        s.mat2 = material(mat2);
        s.medium.model = material(medium);
        s.separation = L;
        const core::QuadratureSpec q{base_order, max_doublings, tol};
        return guarded_energy([&] { return plane::energy_per_area(s, q); });
      },
      py::arg("separation"), py::arg("mat1"), py::arg("mat2"), py::arg("medium"), py::arg("base_order") = 64,
      py::arg("max_doublings") = 6, py::arg("tol") = 1e-8);

  m.def(
      "sphere_energy",
      [](double L, double R1, double R2, const std::string& mat1, const std::string& mat2, int lmax, int base_order,
         int max_doublings, double tol) {
        sphere::SphereSystem s;
        s.L = L;
        s.R1 = R1;
        s.R2 = R2;
        s.mat1 = material(mat1);
        s.mat2 = material(mat2);
        s.lmax = lmax;
        const core::QuadratureSpec q{base_order, max_doublings, tol};
        return guarded_energy([&] { return sphere::sphere_energy(s, q); });
      },
      py::arg("distance"), py::arg("R1"), py::arg("R2"), py::arg("mat1"), py::arg("mat2"), py::arg("lmax") = 0,
      py::arg("base_order") = 64, py::arg("max_doublings") = 6, py::arg("tol") = 1e-8);

  m.def(
      "toy_band_energies",
      [](double r, double length, double attenuation, double lo, double hi) {
        const auto e = toy::band_energies({r, length, attenuation}, lo, hi);
        py::dict d;
        d["phase_form"] = e.phase_form;
        d["dos_form"] = e.dos_form;
        d["boundary"] = e.boundary;
        d["relative_mismatch"] = e.relative_mismatch;
        return d;
      },
      py::arg("r"), py::arg("length"), py::arg("attenuation"), py::arg("omega_min"), py::arg("omega_max"));

  m.def("toy_mode_spacing", [](double length) { return toy::mode_spacing({0.0, length, 1.0}); }, py::arg("length"));

  m.def("random_unitary", &blockmat::random_unitary, py::arg("n"), py::arg("seed"));
  m.def("unitary_dilation", &blockmat::unitary_dilation, py::arg("k"));
  m.def(
      "logdet", [](const blockmat::ComplexMatrix& a) { return blockmat::logdet(a); }, py::arg("m"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
