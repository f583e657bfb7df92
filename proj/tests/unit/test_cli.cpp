#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "casimir/constants.hpp"
#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace casimir;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "casimir_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string write_config(const std::string& name, const json& doc) {
  const fs::path p = scratch(name);
  std::ofstream(p) << doc.dump();
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

json drude() { return {{"model", "drude"}, {"omega_p", 1.37e16}, {"gamma", 5.32e13}}; }

}  // namespace

TEST_CASE("verify passes for the default run and across seeds") {
  const Run r = run({"verify"});
  REQUIRE(r.code == cli::kOk);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 10);
  CHECK(rows[0] == std::vector<std::string>{"identity", "max_residual", "threshold", "trials", "pass"});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(std::stod(rows[i][1]) < 1e-9);
    CHECK(rows[i][3] == "200");
    CHECK(rows[i][4] == "1");
  }
  for (int seed = 1; seed <= 10; ++seed) {
    CHECK(run({"verify", "--seed", std::to_string(seed), "--trials", "60"}).code == cli::kOk);
  }
}

TEST_CASE("a corrupted fixture is reported as NotUnitary") {
  const auto cfg = write_config("corrupt.json", {{"verify", {{"corrupt_fixture", true}}}});
  const Run r = run({"verify", "--config", cfg, "--trials", "10"});
  CHECK(r.code == cli::kFailure);
  CHECK(r.err.find("NotUnitary") != std::string::npos);
}

TEST_CASE("plane sweeps") {
  SUBCASE("perfect mirrors reproduce the ideal energy") {
    const Run r = run({"plane"});
    REQUIRE(r.code == cli::kOk);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() == 11);
    CHECK(rows[0] == std::vector<std::string>{"L", "energy_per_area", "ratio_to_ideal", "error_estimate", "converged"});
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double L = std::stod(rows[i][0]);
      CHECK(std::abs(std::stod(rows[i][2]) - 1.0) < 1e-6);
      CHECK(std::stod(rows[i][1]) == doctest::Approx(ideal_plane_energy_per_area(L)).epsilon(1e-6));
    }
  }
  SUBCASE("vacuum instead of a mirror gives zero") {
    const auto cfg = write_config("vac.json", {{"mat1", "vacuum"}, {"sweep", {{"points", 4}}}});
    const Run r = run({"plane", "--config", cfg});
    REQUIRE(r.code == cli::kOk);
    const auto rows = parse_csv(r.out);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::stod(rows[i][1]) == 0.0);
  }
  SUBCASE("Drude mirrors: ratio below one and rising with L") {
    const auto cfg = write_config("drude.json", {{"mat1", drude()}, {"mat2", drude()}, {"sweep", {{"points", 6}}}});
    const Run r = run({"plane", "--config", cfg});
    REQUIRE(r.code == cli::kOk);
    const auto rows = parse_csv(r.out);
    double prev = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double ratio = std::stod(rows[i][2]);
      CHECK(ratio > prev);
      CHECK(ratio < 1.0);
      prev = ratio;
    }
  }
  SUBCASE("non-convergence exits 3 and still writes the table") {
    const auto cfg = write_config("nc.json", {{"quad", {{"max_doublings", 0}, {"tol", 1e-300}}}, {"sweep", {{"points", 2}}}});
    const Run r = run({"plane", "--config", cfg, "--quad-order", "8"});
    CHECK(r.code == cli::kNotConverged);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() == 3);
    CHECK(rows[1][4] == "0");
    CHECK(r.err.find("NotConverged") != std::string::npos);
  }
}

TEST_CASE("sphere sweeps") {
  SUBCASE("vacuum sphere gives zero") {
    const auto cfg = write_config("svac.json", {{"mat1", "vacuum"}, {"sweep", {{"L_min", 5e-6}, {"L_max", 1e-5}, {"points", 2}}}});
    const Run r = run({"sphere", "--config", cfg, "--lmax", "3"});
    REQUIRE(r.code == cli::kOk);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"L", "energy", "lmax", "error_estimate", "converged"});
    for (std::size_t i = 1; i < rows.size(); ++i) {
      CHECK(std::stod(rows[i][1]) == 0.0);
      CHECK(rows[i][2] == "3");
    }
  }
  SUBCASE("perfect mirrors attract less at larger distance") {
    const auto cfg = write_config("spec.json", {{"sweep", {{"L_min", 5e-6}, {"L_max", 2e-5}, {"points", 3}}}});
    const Run r = run({"sphere", "--config", cfg});
    REQUIRE(r.code == cli::kOk);
    const auto rows = parse_csv(r.out);
    double prev = -1.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double e = std::stod(rows[i][1]);
      CHECK(e < 0.0);
      CHECK(e > prev);
      CHECK(std::stoi(rows[i][2]) >= 5);
      prev = e;
    }
  }
  SUBCASE("a dielectric gap medium is rejected") {
    const auto cfg = write_config("smed.json", {{"medium", {{"model", "constant"}, {"eps", 2.0}}}});
    CHECK(run({"sphere", "--config", cfg}).code == cli::kConfigError);
  }
}

TEST_CASE("toy-dos") {
  SUBCASE("default lossy toy agrees to 1e-6") {
    const Run r = run({"toy-dos", "--format", "json"});
    REQUIRE(r.code == cli::kOk);
    const json j = json::parse(r.out);
    CHECK(j["residuals"]["relative_mismatch"].get<double>() < 1e-6);
    CHECK(j["rows"].size() == 41);
    CHECK(std::abs(j["residuals"]["boundary"].get<double>()) > 0.0);
  }
  SUBCASE("no mirrors, nothing changes") {
    const auto cfg = write_config("r0.json", {{"toy", {{"r", 0.0}, {"points", 5}}}});
    const Run r = run({"toy-dos", "--config", cfg, "--format", "json"});
    REQUIRE(r.code == cli::kOk);
    const json j = json::parse(r.out);
    for (const auto& row : j["rows"]) {
      CHECK(row["phase_shift"].get<double>() == 0.0);
      CHECK(row["dos_change"].get<double>() == 0.0);
    }
    CHECK(j["residuals"]["phase_form"].get<double>() == 0.0);
    CHECK(j["residuals"]["dos_form"].get<double>() == 0.0);
  }
}

TEST_CASE("JSON output layout") {
  const Run r = run({"verify", "--trials", "8", "--format", "json"});
  REQUIRE(r.code == cli::kOk);
  const auto j = nlohmann::ordered_json::parse(r.out);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) {
    (void)v;
    keys.push_back(k);
  }
  CHECK(keys == std::vector<std::string>{"config_echo", "rows", "residuals", "warnings"});
  CHECK(j["config_echo"]["trials"] == 8);
  CHECK(j["rows"][0].contains("max_residual"));
  CHECK(j["warnings"].is_array());

  const Run p = run({"plane", "--format", "json"});
  const auto jp = nlohmann::ordered_json::parse(p.out);
  CHECK_FALSE(jp.contains("residuals"));
  CHECK(jp["rows"].size() == 10);
}

TEST_CASE("CSV numbers round-trip with 17 significant digits") {
  const Run r = run({"plane"});
  const auto rows = parse_csv(r.out);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < 4; ++c) {
      const std::string& s = rows[i][c];
      const double v = std::stod(s);
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      CHECK(s == buf);
    }
  }
}

TEST_CASE("flags override the config file") {
  const auto cfg = write_config("over.json", {{"seed", 5}, {"trials", 3}, {"output", {{"format", "csv"}}}});
  const Run r = run({"verify", "--config", cfg, "--seed", "7", "--format", "json"});
  REQUIRE(r.code == cli::kOk);
  const json j = json::parse(r.out);
  CHECK(j["config_echo"]["seed"] == 7);
  CHECK(j["config_echo"]["trials"] == 3);
  CHECK(j["config_echo"]["output"]["format"] == "json");
}

TEST_CASE("config errors exit 2") {
  CHECK(run({"plane", "--config", write_config("k.json", {{"bogus", 1}})}).code == cli::kConfigError);
  CHECK(run({"plane", "--config", write_config("s.json", {{"sweep", {{"L_min", 1e-6}, {"L_max", 1e-7}}}})}).code ==
        cli::kConfigError);
  CHECK(run({"plane", "--config", write_config("p.json", {{"sweep", {{"points", 0}}}})}).code == cli::kConfigError);
  CHECK(run({"plane", "--config", write_config("m.json", {{"mat1", {{"model", "drude"}, {"omega_p", -1.0}, {"gamma", 1.0}}}})})
            .code == cli::kConfigError);
  CHECK(run({"plane", "--config", write_config("t.json", {{"quad", {{"base_order", "64"}}}})}).code == cli::kConfigError);
  {
    const fs::path bad = scratch("broken.json");
    std::ofstream(bad) << "{ not json";
    CHECK(run({"plane", "--config", bad.string()}).code == cli::kConfigError);
  }
  CHECK(run({"plane", "--config", scratch("missing.json").string()}).code == cli::kConfigError);
  CHECK(run({"plane", "--format", "xml"}).code == cli::kConfigError);
  CHECK(run({"plane", "--trials", "many"}).code == cli::kConfigError);
  CHECK(run({}).code == cli::kConfigError);
  CHECK(run({"teleport"}).code == cli::kConfigError);
}

TEST_CASE("help documents the CSV columns") {
  for (const std::vector<std::string>& args : {std::vector<std::string>{"--help"}, {"plane", "--help"}}) {
    const Run r = run(args);
    CHECK(r.code == cli::kOk);
    for (const char* col : {"energy_per_area", "ratio_to_ideal", "max_residual", "dos_change", "lmax"}) {
      CHECK(r.out.find(col) != std::string::npos);
    }
  }
}

TEST_CASE("sweep spacing") {
  cli::Sweep s{1e-7, 1e-6, 3, cli::Spacing::Log};
  const auto v = s.values();
  CHECK(v.front() == 1e-7);
  CHECK(v.back() == 1e-6);
  CHECK(v[1] == doctest::Approx(std::sqrt(1e-13)).epsilon(1e-14));
  s.spacing = cli::Spacing::Linear;
  CHECK(s.values()[1] == doctest::Approx(5.5e-7).epsilon(1e-14));
  s.points = 1;
  CHECK(s.values() == std::vector<double>{1e-7});
}

#ifdef CASIMIR_CLI_PATH
TEST_CASE("binary output is byte-identical across runs and thread counts") {
  const std::string exe = CASIMIR_CLI_PATH;
  const auto cfg = write_config("det.json", {{"mat1", drude()}, {"mat2", drude()}, {"sweep", {{"points", 3}}}});
  const fs::path out = scratch("det_out.json");
  std::vector<std::string> texts;
  for (const char* threads : {"1", "0", "1"}) {
    const std::string cmd = "CASIMIR_THREADS=" + std::string(threads) + " \"" + exe + "\" plane --config \"" + cfg +
                            "\" --format json --out \"" + out.string() + "\" 2>/dev/null";
    REQUIRE(std::system(cmd.c_str()) == 0);
    texts.push_back(slurp(out));
  }
  CHECK(!texts[0].empty());
  CHECK(texts[0] == texts[1]);
  CHECK(texts[0] == texts[2]);

  const std::string bad = "\"" + exe + "\" verify --trials 0 2>/dev/null >/dev/null";
  const int status = std::system(bad.c_str());
  CHECK(WEXITSTATUS(status) == cli::kConfigError);
}
#endif
