#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "casimir/core.hpp"
#include "casimir/materials.hpp"
#include "json.hpp"

namespace casimir::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kNotConverged = 3 };

enum class Command { Verify, Plane, Sphere, ToyDos };
enum class Spacing { Linear, Log };
enum class Format { Csv, Json };

/// Thrown for anything wrong with the configuration or the command line.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Sweep {
  double L_min = 1e-7;
  double L_max = 1e-6;
  int points = 10;
  Spacing spacing = Spacing::Log;

  std::vector<double> values() const;
};

struct ToyConfig {
  double r = 0.9;
  double length = 1e-6;
  double attenuation = 0.9;
  // Band edges in rad/s; unset means 0.37 and 3.81 mode spacings.
  std::optional<double> omega_min;
  std::optional<double> omega_max;
  int points = 41;
};

struct RunConfig {
  Command command = Command::Verify;
  materials::MaterialModel mat1 = materials::MaterialModel::perfect_mirror();
  materials::MaterialModel mat2 = materials::MaterialModel::perfect_mirror();
  materials::MaterialModel medium = materials::MaterialModel::vacuum();
  double R1 = 1e-6;
  double R2 = 1e-6;
  int lmax = 0;
  Sweep sweep;
  core::QuadratureSpec quad;
  ToyConfig toy;
  std::uint64_t seed = 42;
  int trials = 200;
  bool corrupt_fixture = false;  // negative control for `verify`
  std::string out_path;          // empty = stdout
  Format format = Format::Csv;

  /// ConfigError on any violated bound.
  void validate() const;
};

std::string command_name(Command c);

/// Overlays a config document onto `cfg`. Unknown keys and wrong types raise
/// ConfigError. Keys: seed, trials, mat1, mat2, medium, sphere{R1,R2,lmax},
/// sweep{L_min,L_max,points,spacing}, quad{base_order,max_doublings,tol},
/// toy{r,length,attenuation,omega_min,omega_max,points},
/// output{path,format}, verify{corrupt_fixture}.
void apply_config(RunConfig& cfg, const nlohmann::json& doc);

/// Material from either a bare name ("perfect_mirror", "vacuum") or an object
/// {"model": plasma|drude|constant|lorentz|perfect_mirror|vacuum, ...}.
materials::MaterialModel parse_material(const nlohmann::json& j);

/// Effective configuration as written into JSON output.
nlohmann::ordered_json echo(const RunConfig& cfg);

/// Result of one command before serialization.
struct Report {
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::ordered_json>> rows;
  std::optional<nlohmann::ordered_json> residuals;
  std::vector<std::string> warnings;
  int exit_code = kOk;
};

Report cmd_verify(const RunConfig& cfg);
Report cmd_plane(const RunConfig& cfg);
Report cmd_sphere(const RunConfig& cfg);
Report cmd_toy_dos(const RunConfig& cfg);

/// Numbers with 17 significant digits, one header line.
std::string to_csv(const Report& r);
std::string to_json(const RunConfig& cfg, const Report& r);

/// Full command-line entry point. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace casimir::cli
