#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "casimir/constants.hpp"
#include "casimir/plane.hpp"
#include "casimir/scatter_net.hpp"
#include "casimir/sphere.hpp"
#include "casimir/toy.hpp"

namespace casimir::cli {

using nlohmann::json;
using nlohmann::ordered_json;
using materials::MaterialModel;
using blockmat::Complex;
using blockmat::ComplexMatrix;
using blockmat::Index;

namespace {

// ---------------------------------------------------------------- config

template <class T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

double get_number(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& key) {
  if (!j.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
  return j.get<int>();
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError("config section '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError("unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

Format parse_format(const std::string& s) {
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  throw ConfigError("format must be csv or json, got '" + s + "'");
}

ordered_json material_echo(const MaterialModel& m) {
  return std::visit(
      [](const auto& v) -> ordered_json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, materials::PerfectMirror>) {
          return {{"model", "perfect_mirror"}};
        } else if constexpr (std::is_same_v<T, materials::Plasma>) {
          return {{"model", "plasma"}, {"omega_p", v.omega_p}};
        } else if constexpr (std::is_same_v<T, materials::Drude>) {
          return {{"model", "drude"}, {"omega_p", v.omega_p}, {"gamma", v.gamma}};
        } else if constexpr (std::is_same_v<T, materials::ConstantEps>) {
          return {{"model", "constant"}, {"eps", v.eps}};
        } else {
          return {{"model", "lorentz"}, {"omega_p", v.omega_p}, {"omega_0", v.omega_0}, {"gamma", v.gamma}};
        }
      },
      m.variant());
}

// ---------------------------------------------------------------- output

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_cell(const ordered_json& v) {
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotConverged:
      return kNotConverged;
    case ErrorKind::DomainError:
    case ErrorKind::InvalidArgument:
      return kConfigError;
    default:
      return kFailure;
  }
}

// ---------------------------------------------------------------- verify

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fixture_seed(std::uint64_t seed, int identity, int trial) {
  return splitmix(splitmix(seed ^ (static_cast<std::uint64_t>(identity) << 40)) + static_cast<std::uint64_t>(trial));
}

double rel_det_mismatch(Complex log_a, Complex log_b) { return std::abs(std::exp(log_a - log_b) - 1.0); }

scatter::ScatteringMatrix fixture(Index n_int, Index n_ext, std::uint64_t seed, int trial) {
  const bool dilation = trial % 2 == 1 && n_ext >= n_int;
  return scatter::random_scatterer(n_int, n_ext, seed,
                                   dilation ? scatter::FixtureKind::Dilation : scatter::FixtureKind::Haar);
}

struct Identity {
  const char* name;
  double threshold;
  std::function<double(std::uint64_t seed, int trial)> residual;
};

std::vector<Identity> identity_suite() {
  using namespace scatter;
  std::vector<Identity> s;
  s.push_back({"det_composition", 1e-9, [](std::uint64_t seed, int t) {
                 const Index ni = 1 + t % 4, n1 = 1 + (t / 4) % 4, n2 = 1 + (t / 16) % 4;
                 return det_composition_residual(fixture(ni, n1, seed, t), fixture(ni, n2, splitmix(seed), t));
               }});
  s.push_back({"star_det_modulus", 1e-10, [](std::uint64_t seed, int t) {
                 const Index ni = 1 + t % 4, n1 = 1 + (t / 4) % 4, n2 = 1 + (t / 16) % 4;
                 const auto out = star(fixture(ni, n1, seed, t), fixture(ni, n2, splitmix(seed), t));
                 return std::abs(blockmat::logdet(out.assembled()).real());
               }});
  s.push_back({"alpha_phase", 1e-10, [](std::uint64_t seed, int t) {
                 const Index ni = 1 + t % 4, n1 = 1 + (t / 4) % 4, n2 = 1 + (t / 16) % 4;
                 const Complex a = alpha_phase(fixture(ni, n1, seed, t), fixture(ni, n2, splitmix(seed), t));
                 return std::abs(a - (ni % 2 == 0 ? 1.0 : -1.0));
               }});
  s.push_back({"schur_determinant", 1e-10, [](std::uint64_t seed, int t) {
                 const Index n = 2 + t % 15, na = 1 + (t / 15) % (n - 1);
                 const ComplexMatrix m = blockmat::random_gaussian(n, n, seed);
                 const auto b = blockmat::Block2x2::split(m, na);
                 const Complex lm = blockmat::logdet(m);
                 const double ra = rel_det_mismatch(
                     blockmat::logdet(b.A) + blockmat::logdet(blockmat::schur_complement(b, blockmat::SchurOf::A)), lm);
                 const double rd = rel_det_mismatch(
                     blockmat::logdet(b.D) + blockmat::logdet(blockmat::schur_complement(b, blockmat::SchurOf::D)), lm);
                 return std::max(ra, rd);
               }});
  s.push_back({"determinant_lemma", 1e-10, [](std::uint64_t seed, int t) {
                 const Index n = 1 + t % 16, k = 1 + (t / 16) % 8;
                 return blockmat::matrix_det_lemma_residual(
                     blockmat::random_gaussian(n, n, seed), blockmat::random_gaussian(n, k, seed + 1),
                     blockmat::random_gaussian(k, k, seed + 2), blockmat::random_gaussian(k, n, seed + 3));
               }});
  s.push_back({"unitary_block_relations", 1e-10, [](std::uint64_t seed, int t) {
                 const Index n = 2 + t % 15, na = 1 + (t / 15) % (n - 1);
                 const auto r = blockmat::unitary_block_relations(
                     blockmat::Block2x2::split(blockmat::random_unitary(n, seed), na));
                 return std::max(r.det_ratio_residual, r.schur_identity_residual);
               }});
  s.push_back({"three_factor", 1e-9, [](std::uint64_t seed, int t) {
                 const Index ni = 1 + t % 4, n1 = ni + (t / 4) % 3, n2 = ni + (t / 12) % 3;
                 const auto s1 = random_scatterer(ni, n1, seed, FixtureKind::Dilation);
                 const auto s2 = random_scatterer(ni, n2, splitmix(seed), FixtureKind::Dilation);
                 const auto sl = translation_scatterer(blockmat::random_contraction(ni, seed + 7, 0.9),
                                                       blockmat::random_contraction(ni, seed + 8, 0.9));
                 return chain3_factorization_residual(s1, sl, s2);
               }});
  s.push_back({"sylvester", 1e-10, [](std::uint64_t seed, int t) {
                 const Index n = 1 + t % 8;
                 const auto rt = round_trip(blockmat::random_contraction(n, seed, 0.95),
                                            blockmat::random_contraction(n, seed + 1, 0.95));
                 return rel_det_mismatch(blockmat::logdet(rt.d12), blockmat::logdet(rt.d21));
               }});
  s.push_back({"round_trip_series", 1e-9, [](std::uint64_t seed, int t) {
                 const Index n = 1 + t % 8;
                 const ComplexMatrix a = blockmat::random_contraction(n, seed, 0.9);
                 const ComplexMatrix b = blockmat::random_contraction(n, seed + 1, 0.9);
                 const auto rt = round_trip(a, b);
                 const double rho = std::max(rt.spectral_radius_estimate, 1e-3);
                 const int terms = std::max(4, static_cast<int>(std::ceil(std::log(1e-14) / std::log(rho))));
                 const ComplexMatrix sum = round_trip_series(a, b, terms);
                 return blockmat::max_abs(sum - rt.d12) / blockmat::max_abs(rt.d12);
               }});
  return s;
}

// Rebuilds a fixture with one entry perturbed; the unitarity check rejects it.
void corrupted_fixture(std::uint64_t seed) {
  ComplexMatrix m = scatter::random_scatterer(2, 2, seed).assembled();
  m(0, 0) *= 1.01;
  (void)scatter::ScatteringMatrix::from_matrix(m, 2);
}

// ---------------------------------------------------------------- helpers

plane::PlaneSystem plane_system(const RunConfig& cfg, double L) {
  plane::PlaneSystem s;
  s.mat1 = cfg.mat1;
  s.mat2 = cfg.mat2;
  s.medium.model = cfg.medium;
  s.separation = L;
  return s;
}

sphere::SphereSystem sphere_system(const RunConfig& cfg, double L) {
  sphere::SphereSystem s;
  s.R1 = cfg.R1;
  s.R2 = cfg.R2;
  s.L = L;
  s.mat1 = cfg.mat1;
  s.mat2 = cfg.mat2;
  s.medium.model = cfg.medium;
  s.lmax = cfg.lmax;
  return s;
}

toy::FabryPerot fabry_perot(const RunConfig& cfg) { return {cfg.toy.r, cfg.toy.length, cfg.toy.attenuation}; }

std::pair<double, double> toy_band(const RunConfig& cfg) {
  const double spacing = kPi * kSpeedOfLight / cfg.toy.length;
  return {cfg.toy.omega_min.value_or(0.37 * spacing), cfg.toy.omega_max.value_or(3.81 * spacing)};
}

const char* kHelpFooter = R"(Config file: JSON object with optional sections
  seed, trials, mat1, mat2, medium, sphere{R1,R2,lmax},
  sweep{L_min,L_max,points,spacing=linear|log}, quad{base_order,max_doublings,tol},
  toy{r,length,attenuation,omega_min,omega_max,points}, output{path,format},
  verify{corrupt_fixture}.
Materials: "perfect_mirror", "vacuum" or {"model": plasma|drude|constant|lorentz,
  "omega_p", "gamma", "omega_0", "eps"} (SI units, rad/s). Flags override the file.

CSV columns (numbers with 17 significant digits):
  verify   identity,max_residual,threshold,trials,pass
  plane    L,energy_per_area,ratio_to_ideal,error_estimate,converged
           (L in m, energies in J/m^2, ratio to -pi^2 hbar c / 720 L^3)
  sphere   L,energy,lmax,error_estimate,converged
           (L centre-to-centre in m, energies in J)
  toy-dos  omega,phase_shift,dos_change
           (rad/s, rad, s); band energies go to stderr and to JSON residuals

Exit codes: 0 ok, 1 identity or agreement failure, 2 config error,
3 convergence failure. CASIMIR_THREADS caps worker threads (0 = auto).)";

}  // namespace

// ---------------------------------------------------------------- config API

std::vector<double> Sweep::values() const {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(points));
  if (points == 1) {
    v.push_back(L_min);
    return v;
  }
  for (int i = 0; i < points; ++i) {
    const double f = static_cast<double>(i) / (points - 1);
    if (i == points - 1) {
      v.push_back(L_max);
    } else if (spacing == Spacing::Log) {
      v.push_back(L_min * std::pow(L_max / L_min, f));
    } else {
      v.push_back(L_min + (L_max - L_min) * f);
    }
  }
  return v;
}

void RunConfig::validate() const {
  if (!(sweep.L_min > 0.0) || !(sweep.L_max > sweep.L_min) || !std::isfinite(sweep.L_max)) {
    throw ConfigError("sweep needs 0 < L_min < L_max");
  }
  if (sweep.points < 1) throw ConfigError("sweep.points must be >= 1");
  try {
    quad.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (lmax < 0) throw ConfigError("lmax must be >= 0 (0 = automatic)");
  if (!(R1 > 0.0) || !(R2 > 0.0)) throw ConfigError("sphere radii must be > 0");
  if (toy.points < 2) throw ConfigError("toy.points must be >= 2");
  try {
    toy::FabryPerot{toy.r, toy.length, toy.attenuation}.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (command == Command::ToyDos) {
    const auto [lo, hi] = toy_band(*this);
    if (!(lo >= 0.0) || !(hi > lo)) throw ConfigError("toy band needs 0 <= omega_min < omega_max");
  }
}

std::string command_name(Command c) {
  switch (c) {
    case Command::Verify:
      return "verify";
    case Command::Plane:
      return "plane";
    case Command::Sphere:
      return "sphere";
    case Command::ToyDos:
      return "toy-dos";
  }
  return "?";
}

MaterialModel parse_material(const json& j) {
  try {
    if (j.is_string()) {
      const auto name = j.get<std::string>();
      if (name == "perfect_mirror") return MaterialModel::perfect_mirror();
      if (name == "vacuum") return MaterialModel::vacuum();
      throw ConfigError("unknown material '" + name + "'");
    }
    check_keys(j, "material", {"model", "omega_p", "gamma", "omega_0", "eps"});
    if (!j.contains("model")) throw ConfigError("material needs a 'model'");
    const auto model = get_as<std::string>(j.at("model"), "model");
    const auto num = [&](const char* key, double fallback) {
      return j.contains(key) ? get_number(j.at(key), key) : fallback;
    };
    const auto need = [&](const char* key) {
      if (!j.contains(key)) throw ConfigError("material '" + model + "' needs '" + key + "'");
      return get_number(j.at(key), key);
    };
    if (model == "perfect_mirror") return MaterialModel::perfect_mirror();
    if (model == "vacuum") return MaterialModel::vacuum();
    if (model == "plasma") return MaterialModel(materials::Plasma{need("omega_p")});
    if (model == "drude") return MaterialModel(materials::Drude{need("omega_p"), need("gamma")});
    if (model == "constant") return MaterialModel(materials::ConstantEps{need("eps")});
    if (model == "lorentz") {
      return MaterialModel(materials::Lorentz{need("omega_p"), need("omega_0"), num("gamma", 0.0)});
    }
    throw ConfigError("unknown material model '" + model + "'");
  } catch (const Error& e) {
    throw ConfigError(std::string("material: ") + e.what());
  }
}

void apply_config(RunConfig& cfg, const json& doc) {
  check_keys(doc, "", {"command", "seed", "trials", "mat1", "mat2", "medium", "sphere", "sweep", "quad", "toy",
                       "output", "verify"});
  if (doc.contains("seed")) {
    const json& s = doc.at("seed");
    if (!s.is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("trials")) cfg.trials = get_int(doc.at("trials"), "trials");
  if (doc.contains("mat1")) cfg.mat1 = parse_material(doc.at("mat1"));
  if (doc.contains("mat2")) cfg.mat2 = parse_material(doc.at("mat2"));
  if (doc.contains("medium")) cfg.medium = parse_material(doc.at("medium"));
  if (doc.contains("sphere")) {
    const json& s = doc.at("sphere");
    check_keys(s, "sphere", {"R1", "R2", "lmax"});
    if (s.contains("R1")) cfg.R1 = get_number(s.at("R1"), "sphere.R1");
    if (s.contains("R2")) cfg.R2 = get_number(s.at("R2"), "sphere.R2");
    if (s.contains("lmax")) cfg.lmax = get_int(s.at("lmax"), "sphere.lmax");
  }
  if (doc.contains("sweep")) {
    const json& s = doc.at("sweep");
    check_keys(s, "sweep", {"L_min", "L_max", "points", "spacing"});
    if (s.contains("L_min")) cfg.sweep.L_min = get_number(s.at("L_min"), "sweep.L_min");
    if (s.contains("L_max")) cfg.sweep.L_max = get_number(s.at("L_max"), "sweep.L_max");
    if (s.contains("points")) cfg.sweep.points = get_int(s.at("points"), "sweep.points");
    if (s.contains("spacing")) {
      const auto sp = get_as<std::string>(s.at("spacing"), "sweep.spacing");
      if (sp == "linear") {
        cfg.sweep.spacing = Spacing::Linear;
      } else if (sp == "log") {
        cfg.sweep.spacing = Spacing::Log;
      } else {
        throw ConfigError("sweep.spacing must be linear or log");
      }
    }
  }
  if (doc.contains("quad")) {
    const json& q = doc.at("quad");
    check_keys(q, "quad", {"base_order", "max_doublings", "tol"});
    if (q.contains("base_order")) cfg.quad.base_order = get_int(q.at("base_order"), "quad.base_order");
    if (q.contains("max_doublings")) cfg.quad.max_doublings = get_int(q.at("max_doublings"), "quad.max_doublings");
    if (q.contains("tol")) cfg.quad.tol = get_number(q.at("tol"), "quad.tol");
  }
  if (doc.contains("toy")) {
    const json& t = doc.at("toy");
    check_keys(t, "toy", {"r", "length", "attenuation", "omega_min", "omega_max", "points"});
    if (t.contains("r")) cfg.toy.r = get_number(t.at("r"), "toy.r");
    if (t.contains("length")) cfg.toy.length = get_number(t.at("length"), "toy.length");
    if (t.contains("attenuation")) cfg.toy.attenuation = get_number(t.at("attenuation"), "toy.attenuation");
    if (t.contains("omega_min")) cfg.toy.omega_min = get_number(t.at("omega_min"), "toy.omega_min");
    if (t.contains("omega_max")) cfg.toy.omega_max = get_number(t.at("omega_max"), "toy.omega_max");
    if (t.contains("points")) cfg.toy.points = get_int(t.at("points"), "toy.points");
  }
  if (doc.contains("output")) {
    const json& o = doc.at("output");
    check_keys(o, "output", {"path", "format"});
    if (o.contains("path")) cfg.out_path = get_as<std::string>(o.at("path"), "output.path");
    if (o.contains("format")) cfg.format = parse_format(get_as<std::string>(o.at("format"), "output.format"));
  }
  if (doc.contains("verify")) {
    const json& v = doc.at("verify");
    check_keys(v, "verify", {"corrupt_fixture"});
    if (v.contains("corrupt_fixture")) cfg.corrupt_fixture = get_as<bool>(v.at("corrupt_fixture"), "verify.corrupt_fixture");
  }
}

ordered_json echo(const RunConfig& cfg) {
  ordered_json j;
  j["command"] = command_name(cfg.command);
  j["seed"] = cfg.seed;
  j["trials"] = cfg.trials;
  j["mat1"] = material_echo(cfg.mat1);
  j["mat2"] = material_echo(cfg.mat2);
  j["medium"] = material_echo(cfg.medium);
  j["sphere"] = {{"R1", cfg.R1}, {"R2", cfg.R2}, {"lmax", cfg.lmax}};
  j["sweep"] = {{"L_min", cfg.sweep.L_min},
                {"L_max", cfg.sweep.L_max},
                {"points", cfg.sweep.points},
                {"spacing", cfg.sweep.spacing == Spacing::Log ? "log" : "linear"}};
  j["quad"] = {{"base_order", cfg.quad.base_order}, {"max_doublings", cfg.quad.max_doublings}, {"tol", cfg.quad.tol}};
  ordered_json toy = {{"r", cfg.toy.r}, {"length", cfg.toy.length}, {"attenuation", cfg.toy.attenuation}};
  const auto [lo, hi] = toy_band(cfg);
  toy["omega_min"] = lo;
  toy["omega_max"] = hi;
  toy["points"] = cfg.toy.points;
  j["toy"] = toy;
  j["output"] = {{"path", cfg.out_path}, {"format", cfg.format == Format::Csv ? "csv" : "json"}};
  j["verify"] = {{"corrupt_fixture", cfg.corrupt_fixture}};
  return j;
}

// ---------------------------------------------------------------- commands

Report cmd_verify(const RunConfig& cfg) {
  Report r;
  r.columns = {"identity", "max_residual", "threshold", "trials", "pass"};
  ordered_json residuals = ordered_json::object();
  const auto suite = identity_suite();
  for (std::size_t k = 0; k < suite.size(); ++k) {
    const Identity& id = suite[k];
    std::vector<double> res(static_cast<std::size_t>(cfg.trials), 0.0);
    std::vector<std::string> errors(res.size());
    core::parallel_for(res.size(), [&](std::size_t t) {
      try {
        res[t] = id.residual(fixture_seed(cfg.seed, static_cast<int>(k), static_cast<int>(t)), static_cast<int>(t));
      } catch (const Error& e) {
        res[t] = std::numeric_limits<double>::infinity();
        errors[t] = e.what();
      }
    });
    double worst = 0.0;
    for (std::size_t t = 0; t < res.size(); ++t) {
      if (!errors[t].empty()) r.warnings.push_back(std::string(id.name) + " trial " + std::to_string(t) + ": " + errors[t]);
      if (!(res[t] <= worst)) worst = res[t];  // NaN propagates
    }
    const bool pass = worst < id.threshold;
    if (!pass) r.exit_code = kFailure;
    residuals[id.name] = std::isfinite(worst) ? ordered_json(worst) : ordered_json(nullptr);
    r.rows.push_back({id.name, worst, id.threshold, cfg.trials, pass});
  }
  if (cfg.corrupt_fixture) {
    bool rejected = false;
    try {
      corrupted_fixture(cfg.seed);
    } catch (const Error& e) {
      rejected = e.kind() == ErrorKind::NotUnitary;
      r.warnings.push_back(std::string("corrupted fixture: ") + e.what());
    }
    if (!rejected) r.warnings.push_back("corrupted fixture: accepted without a unitarity failure");
    r.rows.push_back({"corrupted_fixture", nullptr, 0.0, 1, false});
    r.exit_code = kFailure;
  }
  r.residuals = residuals;
  return r;
}

Report cmd_plane(const RunConfig& cfg) {
  Report r;
  r.columns = {"L", "energy_per_area", "ratio_to_ideal", "error_estimate", "converged"};
  for (double L : cfg.sweep.values()) {
    core::EnergyResult e;
    bool converged = true;
    try {
      e = plane::energy_per_area(plane_system(cfg, L), cfg.quad);
    } catch (const core::NotConvergedError& ex) {
      e = ex.best();
      converged = false;
      r.exit_code = kNotConverged;
      r.warnings.push_back("L=" + format_double(L) + ": " + ex.what());
    }
    for (const auto& w : e.metadata.warnings) r.warnings.push_back("L=" + format_double(L) + ": " + w);
    const double ratio = e.value == 0.0 ? 0.0 : e.value / ideal_plane_energy_per_area(L);
    r.rows.push_back({L, e.value, ratio, e.error_estimate, converged});
  }
  return r;
}

Report cmd_sphere(const RunConfig& cfg) {
  Report r;
  r.columns = {"L", "energy", "lmax", "error_estimate", "converged"};
  for (double L : cfg.sweep.values()) {
    core::EnergyResult e;
    bool converged = true;
    try {
      e = sphere::sphere_energy(sphere_system(cfg, L), cfg.quad);
    } catch (const core::NotConvergedError& ex) {
      e = ex.best();
      converged = false;
      r.exit_code = kNotConverged;
      r.warnings.push_back("L=" + format_double(L) + ": " + ex.what());
    }
    for (const auto& w : e.metadata.warnings) r.warnings.push_back("L=" + format_double(L) + ": " + w);
    r.rows.push_back({L, e.value, e.metadata.lmax, e.error_estimate, converged});
  }
  return r;
}

Report cmd_toy_dos(const RunConfig& cfg) {
  Report r;
  r.columns = {"omega", "phase_shift", "dos_change"};
  const auto fp = fabry_perot(cfg);
  const auto [lo, hi] = toy_band(cfg);
  for (const auto& row : toy::tabulate(fp, lo, hi, cfg.toy.points)) {
    r.rows.push_back({row.omega, row.phase_shift, row.dos_change});
  }
  const toy::BandEnergies e = toy::band_energies(fp, lo, hi);
  constexpr double kAgreement = 1e-6;
  r.residuals = ordered_json{{"phase_form", e.phase_form},
                             {"dos_form", e.dos_form},
                             {"boundary", e.boundary},
                             {"relative_mismatch", e.relative_mismatch},
                             {"threshold", kAgreement}};
  if (!(e.relative_mismatch < kAgreement)) {
    r.exit_code = kFailure;
    r.warnings.push_back("phase and density-of-states energies disagree: relative mismatch " +
                         format_double(e.relative_mismatch));
  }
  return r;
}

// ---------------------------------------------------------------- serialization

std::string to_csv(const Report& r) {
  std::string s;
  for (std::size_t i = 0; i < r.columns.size(); ++i) s += (i ? "," : "") + r.columns[i];
  s += '\n';
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) s += ',';
      s += csv_cell(row[i]);
    }
    s += '\n';
  }
  return s;
}

std::string to_json(const RunConfig& cfg, const Report& r) {
  ordered_json j;
  j["config_echo"] = echo(cfg);
  ordered_json rows = ordered_json::array();
  for (const auto& row : r.rows) {
    ordered_json o;
    for (std::size_t i = 0; i < row.size(); ++i) o[r.columns[i]] = row[i];
    rows.push_back(o);
  }
  j["rows"] = rows;
  if (r.residuals) j["residuals"] = *r.residuals;
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------- entry point

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Casimir energies from scattering matrices", "casimir"};
  app.footer(kHelpFooter);
  app.require_subcommand(1);

  std::string config_path, out_path, format;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials, lmax, quad_order;

  const std::vector<std::pair<Command, std::string>> commands = {
      {Command::Verify, "run the determinant identity suite on random fixtures"},
      {Command::Plane, "plane-plane energy per area over an L sweep"},
      {Command::Sphere, "sphere-sphere energy over a centre-distance sweep"},
      {Command::ToyDos, "Fabry-Perot toy: phase shift, density of states and band energies"}};
  std::vector<CLI::App*> subs;
  for (const auto& [cmd, desc] : commands) {
    CLI::App* sub = app.add_subcommand(command_name(cmd), desc);
    sub->footer(kHelpFooter);
    sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "fixture seed");
    sub->add_option("--out", out_path, "output file (default stdout)");
    sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--trials", trials, "random fixtures per identity");
    sub->add_option("--lmax", lmax, "sphere multipole cutoff (0 = automatic)");
    sub->add_option("--quad-order", quad_order, "base Gauss-Legendre order");
    subs.push_back(sub);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }

  RunConfig cfg;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (subs[i]->parsed()) cfg.command = commands[i].first;
  }

  try {
    (void)core::worker_count();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot open config file " + config_path);
      json doc;
      try {
        doc = json::parse(in);
      } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
      }
      if (doc.contains("command") && doc.at("command") != command_name(cfg.command)) {
        err << "note: config command '" << doc.at("command").dump() << "' overridden by the command line\n";
      }
      apply_config(cfg, doc);
    }
    if (seed) cfg.seed = *seed;
    if (trials) cfg.trials = *trials;
    if (lmax) cfg.lmax = *lmax;
    if (quad_order) cfg.quad.base_order = *quad_order;
    if (!out_path.empty()) cfg.out_path = out_path;
    if (!format.empty()) cfg.format = parse_format(format);
    cfg.validate();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }

  Report report;
  try {
    switch (cfg.command) {
      case Command::Verify:
        report = cmd_verify(cfg);
        break;
      case Command::Plane:
        report = cmd_plane(cfg);
        break;
      case Command::Sphere:
        report = cmd_sphere(cfg);
        break;
      case Command::ToyDos:
        report = cmd_toy_dos(cfg);
        break;
    }
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code_for(e.kind());
  }

  const std::string text = cfg.format == Format::Csv ? to_csv(report) : to_json(cfg, report);
  if (cfg.out_path.empty()) {
    out << text;
  } else {
    std::ofstream f(cfg.out_path, std::ios::binary | std::ios::trunc);
    if (!f || !(f << text)) {
      err << "config error: cannot write " << cfg.out_path << "\n";
      return kConfigError;
    }
  }

  for (const auto& w : report.warnings) err << "warning: " << w << "\n";
  if (cfg.command == Command::Verify) {
    for (const auto& row : report.rows) {
      err << row[0].get<std::string>() << ": " << (row[1].is_null() ? std::string("rejected") : format_double(row[1].get<double>()))
          << (row[4].get<bool>() ? "  ok" : "  FAIL") << "\n";
    }
  }
  if (cfg.command == Command::ToyDos && report.residuals) {
    const auto& res = *report.residuals;
    err << "phase form " << format_double(res["phase_form"].get<double>()) << " J, dos form "
        << format_double(res["dos_form"].get<double>()) << " J, edge term " << format_double(res["boundary"].get<double>())
        << " J, relative mismatch " << format_double(res["relative_mismatch"].get<double>()) << "\n";
  }
  return report.exit_code;
}

}  // namespace casimir::cli
