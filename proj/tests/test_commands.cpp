#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / ("twinbeam_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

/// Runs the CLI with stdout/stderr captured into `log`; returns the exit status.
int run(const std::string& args, std::string* log = nullptr) {
  const fs::path out = scratch() / "last.log";
  const std::string cmd = std::string(TWINBEAM_CLI_PATH) + " " + args + " > " + out.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (log) {
    std::ifstream is(out);
    std::stringstream ss;
    ss << is.rdbuf();
    *log = ss.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json base_config() {
  return json::parse(R"({
    "grid": {"N": 15, "half_width": 5.0},
    "pump": {"sigma": 1.0, "g0": 0.6},
    "medium": {"vP": 1.0, "vS": 0.6666666666666666, "vI": 2.0, "L": 2.0},
    "poling": {"kind": "unpoled"},
    "pass_mode": "double",
    "options": {"assert_regime": "sgvm"}
  })");
}

std::string write_config(const std::string& name, const json& j) {
  const fs::path p = scratch() / (name + ".json");
  std::ofstream(p) << j.dump(2);
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

std::string out_dir(const std::string& name) { return (scratch() / name).string(); }

}  // namespace

TEST_CASE("simulate writes the summary and modes") {
  const std::string cfg = write_config("sim", base_config());
  REQUIRE(run("simulate --config " + cfg + " --out " + out_dir("sim")) == 0);
  const json s = read_json(scratch() / "sim" / "summary.json");
  CHECK(s["N"] == 15);
  CHECK(s["pass_mode"] == "double");
  CHECK(s["symplectic_residual"].get<double>() < 1e-9);
  CHECK(s["reconstruction_residual"].get<double>() < 1e-8);
  CHECK(s["fidelity_k1"].get<double>() > 1 - 1e-9);
  CHECK(s["modes"].size() == 15);
  CHECK(s["modes"][0]["k"] == 1);
  CHECK(fs::exists(scratch() / "sim" / "modes.csv"));
  CHECK(fs::exists(scratch() / "sim" / "modes.svg"));
  CHECK_FALSE(fs::exists(scratch() / "sim" / "propagator.txt"));

  // determinism
  REQUIRE(run("simulate --config " + cfg + " --out " + out_dir("sim2")) == 0);
  for (const char* f : {"summary.json", "modes.csv", "modes.svg"})
    CHECK(slurp(scratch() / "sim" / f) == slurp(scratch() / "sim2" / f));
}

TEST_CASE("zero gain reports passive modes") {
  json j = base_config();
  j["pump"]["g0"] = 0.0;
  REQUIRE(run("simulate --config " + write_config("zero", j) + " --out " + out_dir("zero")) == 0);
  const json s = read_json(scratch() / "zero" / "summary.json");
  for (const auto& m : s["modes"]) {
    CHECK(m["passive"] == true);
    CHECK(m["fidelity_signal"] == "passive");
  }
  CHECK(s["fidelity_k1"] == "passive");
  CHECK(std::abs(s["mean_NS"].get<double>()) < 1e-12);
}

TEST_CASE("configuration and regime errors map to exit codes") {
  CHECK(run("simulate --config " + (scratch() / "missing.json").string()) == 2);
  json bad = base_config();
  bad["grid"]["bogus"] = 1;
  CHECK(run("simulate --config " + write_config("unknown_key", bad)) == 2);
  json neg = base_config();
  neg["medium"]["L"] = -1.0;
  CHECK(run("simulate --config " + write_config("neg", neg)) == 2);
  CHECK(run("simulate") == 2);
  CHECK(run("frobnicate") == 2);

  json skew = base_config();
  skew["medium"]["vI"] = 1.4285714285714286;
  std::string log;
  CHECK(run("simulate --config " + write_config("skew", skew) + " --out " + out_dir("skew"), &log) == 3);
  CHECK(log.find("sgvm") != std::string::npos);

  json single = base_config();
  single["pass_mode"] = "single";
  CHECK(run("sweep-gain --config " + write_config("single", single)) == 2);
}

TEST_CASE("verify passes and detects a tampered propagator") {
  json j = base_config();
  j["pass_mode"] = "single";
  j["options"]["save_propagator"] = true;
  const std::string cfg = write_config("ver", j);
  REQUIRE(run("simulate --config " + cfg + " --out " + out_dir("ver")) == 0);
  std::string log;
  REQUIRE(run("verify --config " + cfg + " --out " + out_dir("ver"), &log) == 0);
  const json v = read_json(scratch() / "ver" / "verify.json");
  CHECK(v["passed"] == true);
  CHECK(log.find("FAIL") == std::string::npos);

  // perturb one entry of the saved propagator
  const fs::path pf = scratch() / "ver" / "propagator.txt";
  std::string text = slurp(pf);
  const std::size_t at = text.find('\n') + 1;
  text.insert(at, "0.25");
  std::size_t end = at + 4;
  while (text[end] != ' ') ++end;
  text.erase(at + 4, end - (at + 4));
  std::ofstream(pf) << text;
  json t = j;
  t["options"]["propagator_file"] = pf.string();
  CHECK(run("verify --config " + write_config("tampered", t) + " --out " + out_dir("tampered"), &log) == 3);
  CHECK(log.find("FAIL propagator.symplectic") != std::string::npos);
}

TEST_CASE("gain sweep") {
  json j = base_config();
  j.erase("pump");
  j["pump"] = {{"sigma", 1.0}, {"target_NS", 1.0}};
  j["options"]["sweep"] = {{"points", 3}};
  REQUIRE(run("sweep-gain --config " + write_config("sweep", j) + " --out " + out_dir("sweep")) == 0);
  const std::string csv = slurp(scratch() / "sweep" / "sweep.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(fs::exists(scratch() / "sweep" / "sweep.svg"));
}

TEST_CASE("poling generation and evaluation") {
  REQUIRE(run("poling gen --kind qpm --length 3 --period 2 --out " + out_dir("qpm")) == 0);
  const std::string txt = slurp(scratch() / "qpm" / "poling.txt");
  CHECK(std::count(txt.begin(), txt.end(), '\n') == 3);

  REQUIRE(run("poling eval --kind apodized --length 16 --domain-width 0.08 --pmf-width 0.5 --points 101 --out " +
              out_dir("apod")) == 0);
  const json s = read_json(scratch() / "apod" / "pmf_summary.json");
  CHECK(s["domains"] == 200);
  CHECK(s["palindromic"] == true);
  CHECK(s["relative_l2_error"].get<double>() <= 0.05);
  const std::string csv = slurp(scratch() / "apod" / "pmf.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 102);

  CHECK(run("poling gen --kind spiral --length 3 --out " + out_dir("bad")) == 2);
  CHECK(run("poling gen --kind qpm --length abc --period 2") == 2);
}
