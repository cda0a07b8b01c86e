#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path work = WORK_DIR;
const fs::path scenarios = SCENARIO_DIR;

int cli(const std::string& args) {
  const std::string cmd = "ANNIHILATE_LOG=quiet '" + std::string(ANNIHILATE_CLI) + "' " + args + " > /dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

fs::path fresh(const std::string& name) {
  const auto dir = work / name;
  fs::remove_all(dir);
  return dir;
}

void expect_identical_dirs(const fs::path& a, const fs::path& b) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(a)) names.push_back(e.path().filename().string());
  CHECK_FALSE(names.empty());
  for (const auto& n : names) {
    CAPTURE(n);
    REQUIRE(fs::exists(b / n));
    CHECK(slurp(a / n) == slurp(b / n));
  }
  CHECK(static_cast<std::size_t>(std::distance(fs::directory_iterator(b), fs::directory_iterator{})) == names.size());
}

}  // namespace

TEST_CASE("run writes the documented artifacts") {
  const auto out = fresh("run_two");
  REQUIRE(cli("run --scenario " + (scenarios / "two_particles.yaml").string() + " --out " + out.string()) == 0);
  for (const char* f : {"trajectory.csv", "events.json", "measures_initial.csv", "measures_final.csv",
                        "distances.csv", "manifest.json", "scenario_resolved.yaml"})
    CHECK(fs::exists(out / f));
  const auto traj = lines(out / "trajectory.csv");
  REQUIRE(traj.size() > 2);
  CHECK(traj[0] == "t,x_1,x_2,b_1,b_2,E_n,M2,M4");

  const auto manifest = json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["tool"] == "annihilate");
  CHECK(manifest["command"] == "run");
  CHECK(manifest.contains("version"));
  CHECK(manifest["scenario"]["name"] == "two_particles");
  CHECK(json::parse(slurp(out / "events.json")).is_array());

  // The resolved scenario feeds back into the loader and reproduces the run.
  const auto again = fresh("run_two_resolved");
  REQUIRE(cli("run --scenario " + (out / "scenario_resolved.yaml").string() + " --out " + again.string()) == 0);
  CHECK(slurp(out / "trajectory.csv") == slurp(again / "trajectory.csv"));
}

TEST_CASE("events.json for the interleaved scenario") {
  const auto out = fresh("run_four");
  REQUIRE(cli("run --scenario " + (scenarios / "interleaved_four.yaml").string() + " --out " + out.string()) == 0);
  const auto ev = json::parse(slurp(out / "events.json"));
  REQUIRE(ev.size() == 2);
  for (const auto& e : ev) {
    CHECK(e["Gamma_k"].size() == 2);
    CHECK(e["pairs"].size() == 1);
    CHECK(e.contains("t_k"));
  }
}

TEST_CASE("reruns are byte identical") {
  const auto a = fresh("det_a"), b = fresh("det_b");
  const auto sc = (scenarios / "alternating_blocks.yaml").string();
  REQUIRE(cli("run --scenario " + sc + " --out " + a.string()) == 0);
  REQUIRE(cli("run --scenario " + sc + " --out " + b.string()) == 0);
  expect_identical_dirs(a, b);

  const auto c = fresh("det_seed");
  REQUIRE(cli("run --scenario " + sc + " --seed 8 --out " + c.string()) == 0);
  CHECK(slurp(a / "trajectory.csv") != slurp(c / "trajectory.csv"));
}

TEST_CASE("converge: four rows, independent of --jobs") {
  fs::create_directories(work);
  const auto sc = work / "small_converge.yaml";
  std::ofstream(sc) << R"(name: small_converge
kernels: {V: log, W: zero}
initial:
  blocks:
    - {species: 1, lo: -1.0, hi: 0.0, mass: 0.5}
    - {species: -1, lo: 0.0, hi: 1.0, mass: 0.5}
n_list: [10, 20, 30, 40]
sim: {T: 0.5, sample_times: [0.25]}
)";
  const auto a = fresh("conv_j1"), b = fresh("conv_j3");
  REQUIRE(cli("converge --scenario " + sc.string() + " --jobs 1 --out " + a.string()) == 0);
  REQUIRE(cli("converge --scenario " + sc.string() + " --jobs 3 --out " + b.string()) == 0);
  expect_identical_dirs(a, b);
  const auto rows = lines(a / "convergence.csv");
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "n,sup_distance,ratio,annihilated_mass");
}

TEST_CASE("check: suite passes and the negative control is detected") {
  const auto suite = fresh("check_suite");
  REQUIRE(cli("check --suite --jobs 2 --out " + suite.string()) == 0);
  const auto checks = json::parse(slurp(suite / "checks.json"));
  CHECK_FALSE(checks.empty());

  const auto neg = fresh("check_neg");
  CHECK(cli("check --scenario " + (scenarios / "negative_control.yaml").string() + " --out " + neg.string()) == 0);
  const auto nc = json::parse(slurp(neg / "checks.json"));
  bool found = false;
  for (const auto& c : nc.is_array() ? nc : nc["checks"]) {
    if (c["name"] != "energy_monotone") continue;
    found = true;
    CHECK(c["pass"] == false);
  }
  CHECK(found);
}

TEST_CASE("continuum and validate") {
  const auto out = fresh("cont");
  REQUIRE(cli("continuum --scenario " + (scenarios / "two_block_annihilation.yaml").string() + " --out " +
              out.string()) == 0);
  CHECK(fs::exists(out / "snapshots.json"));
  CHECK(fs::exists(out / "snapshot_000.csv"));
  CHECK(lines(out / "snapshot_000.csv")[0] == "x,rho_plus,rho_minus,kappa");

  const auto val = fresh("val");
  REQUIRE(cli("validate --scenario " + (scenarios / "alternating_blocks.yaml").string() + " --out " + val.string()) ==
          0);
  CHECK(json::parse(slurp(val / "validation.json")).contains("clauses"));
}

TEST_CASE("usage and scenario errors exit with 2") {
  CHECK(cli("") != 0);
  CHECK(cli("run") == 2);
  CHECK(cli("frobnicate") == 2);
  fs::create_directories(work);
  const auto bad = work / "bad.yaml";
  std::ofstream(bad) << "name: bad\nkernels: {V: log, W: zero}\ninitial:\n  positions: [0, 0]\n  charges: [1, -1]\n";
  CHECK(cli("run --scenario " + bad.string() + " --out " + (work / "bad_out").string()) == 2);
}
