#include <doctest.h>

#include <filesystem>

#include "annihilate/scenario.hpp"

using namespace annihilate;

namespace {

int error_line(const std::string& text) {
  try {
    parse_scenario(text, "test.yaml");
  } catch (const ScenarioError& e) {
    return e.line;
  }
  return -1;
}

std::string error_text(const std::string& text) {
  try {
    parse_scenario(text, "test.yaml");
  } catch (const ScenarioError& e) {
    return e.what();
  }
  return {};
}

const char* minimal = R"(name: two
kernels: {V: log, W: zero}
initial:
  positions: [0.0, 1.0]
  charges: [1, 1]
)";

}  // namespace

TEST_CASE("minimal two-particle scenario loads with defaults") {
  const auto s = parse_scenario(minimal);
  CHECK(s.name == "two");
  CHECK(s.positions == std::vector<double>{0.0, 1.0});
  CHECK(s.sim.T == SimConfig{}.T);
  CHECK(s.sim.eps_annihilate == SimConfig{}.eps_annihilate);
  const auto st = s.initial_state();
  CHECK(st.size() == 2);
  CHECK(st.b[1] == 1);
}

TEST_CASE("every shipped scenario loads") {
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(SCENARIO_DIR)) {
    if (entry.path().extension() != ".yaml") continue;
    CAPTURE(entry.path().string());
    Scenario s;
    CHECK_NOTHROW(s = load_scenario(entry.path()));
    CHECK_NOTHROW(validate_scenario(s));
    CHECK_NOTHROW(s.initial_state());
    ++count;
  }
  CHECK(count >= 7);
}

TEST_CASE("coincident opposite pair is rejected with the offending pair") {
  const std::string text = R"(name: bad
kernels: {V: log, W: reglog(0.1)}
initial:
  positions: [0.0, 0.5, 0.5]
  charges: [1, 1, -1]
)";
  const auto what = error_text(text);
  CHECK(what.find("particles 1 and 2") != std::string::npos);
  CHECK(what.find("same position") != std::string::npos);
  CHECK(what.rfind("test.yaml:4:", 0) == 0);
  CHECK(error_line(text) == 4);
}

TEST_CASE("load errors carry line numbers") {
  CHECK(error_line("name: x\nkernels: {V: log, W: zero\n") > 0);  // unterminated flow map
  CHECK(error_line(std::string(minimal) + "colour: blue\n") == 6);
  CHECK(error_line(std::string(minimal) + "sim:\n  T: -1\n") >= 6);
  CHECK(error_line("name: x\nkernels: {V: zero, W: zero}\ninitial:\n  positions: [0, 1]\n  charges: [1, 1]\n") == 2);
  CHECK(error_line("name: x\nkernels: {V: log, W: zero}\ninitial:\n  positions: [0, 1]\n  charges: [1, 3]\n") == 5);
  CHECK(error_line("name: x\nkernels: {V: log, W: zero}\ninitial:\n  positions: [1, 0]\n  charges: [1, 1]\n") == 4);
  CHECK(error_text(std::string(minimal) + "sim: {T: abc}\n").find("T") != std::string::npos);
  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.yaml"), ScenarioError);
}

TEST_CASE("threshold violation and block errors") {
  const std::string near = R"(name: near
kernels: {V: log, W: reglog(0.1)}
initial:
  positions: [0.0, 1.0e-10]
  charges: [1, -1]
)";
  CHECK(error_text(near).find("annihilation threshold") != std::string::npos);

  const std::string overlap = R"(name: overlap
kernels: {V: log, W: zero}
initial:
  blocks:
    - {species: 1, lo: -1.0, hi: 0.5, mass: 0.5}
    - {species: -1, lo: 0.0, hi: 1.0, mass: 0.5}
n: 10
)";
  CHECK(error_line(overlap) > 0);
  CHECK(error_text(overlap).find("overlaps") != std::string::npos);
}

TEST_CASE("block spec with L = 2 expands to quantile positions") {
  const auto s = load_scenario(std::filesystem::path(SCENARIO_DIR) / "alternating_blocks.yaml");
  const auto st = s.initial_state();
  CHECK(st.size() == 160);
  const auto bs = block_structure(st);
  CHECK(bs.L == 2);
  // First block is semicircular on [-2, -1] with 40 particles; its median sits at -1.5.
  CHECK(0.5 * (st.x[19] + st.x[20]) == doctest::Approx(-1.5).epsilon(1e-12));
  CHECK(s.blocks.front().cdf(st.x[0]) == doctest::Approx(0.5 / 40).epsilon(1e-12));
  CHECK(s.initial_state(80).size() == 80);
}

TEST_CASE("dump_scenario round trips") {
  for (const char* file : {"alternating_blocks.yaml", "interleaved_four.yaml", "log_gas_convergence.yaml",
                           "negative_control.yaml", "two_block_annihilation.yaml"}) {
    CAPTURE(file);
    const auto s = load_scenario(std::filesystem::path(SCENARIO_DIR) / file);
    const auto text = dump_scenario(s);
    const auto back = parse_scenario(text, "dump");
    CHECK(dump_scenario(back) == text);
    CHECK(back.name == s.name);
    CHECK(back.v_kernel == s.v_kernel);
    CHECK(back.w_kernel == s.w_kernel);
    CHECK(back.positions == s.positions);
    CHECK(back.sim.sample_times == s.sim.sample_times);
    CHECK(back.sim.fixed_dt == s.sim.fixed_dt);
    CHECK(back.negative_control == s.negative_control);
    CHECK(back.seed == s.seed);
    CHECK(back.blocks.size() == s.blocks.size());
    for (std::size_t k = 0; k < s.blocks.size(); ++k) {
      CHECK(back.blocks[k].lo == s.blocks[k].lo);
      CHECK(back.blocks[k].jitter == s.blocks[k].jitter);
      CHECK(back.blocks[k].profile == s.blocks[k].profile);
    }
    CHECK(back.initial_state().x == s.initial_state().x);
  }
}

TEST_CASE("convergence setup carries the scenario") {
  const auto s = load_scenario(std::filesystem::path(SCENARIO_DIR) / "two_block_annihilation.yaml");
  const auto cs = s.convergence_setup();
  CHECK(cs.blocks.size() == 2);
  CHECK(cs.config.T == 1.0);
  CHECK(cs.grid.cells == 800);
  CHECK(s.n_list == std::vector<int>{50, 100, 200, 400});
  CHECK(s.reference == Reference::SelfDoubling);
}
