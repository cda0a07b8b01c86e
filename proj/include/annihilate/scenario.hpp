#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "annihilate/analysis.hpp"

namespace annihilate {

/// Load or validation failure. line is 1-based, 0 when unknown.
struct ScenarioError : std::runtime_error {
  ScenarioError(const std::string& source, int line, const std::string& what);
  int line = 0;
};

struct ContinuumSpec {
  bool enabled = false;
  Grid grid;
  double cfl = 0.5;
  std::vector<double> snapshot_times;
};

struct Scenario {
  std::string name = "scenario";
  std::string v_kernel = "log";
  std::string w_kernel = "zero";

  // Either explicit particles or density blocks.
  std::vector<double> positions;
  std::vector<int> charges;
  std::vector<DensityBlock> blocks;

  int n = 0;               // particle count for block data
  std::vector<int> n_list;  // convergence resolutions
  Reference reference = Reference::SelfDoubling;

  SimConfig sim;
  ContinuumSpec continuum;
  std::uint64_t seed = 0;
  std::string output = "out";
  bool negative_control = false;
  int metric_pairs = 100;

  bool explicit_particles() const { return !positions.empty(); }
  KernelPair kernels() const;
  /// Explicit particles, or the quantile placement with n particles (n <= 0 uses this->n).
  ParticleState initial_state(int n_override = 0) const;
  ConvergenceSetup convergence_setup() const;
};

Scenario parse_scenario(const std::string& yaml_text, const std::string& source = "<string>");
Scenario load_scenario(const std::filesystem::path& path);

/// YAML text that parse_scenario maps back to an equal scenario.
std::string dump_scenario(const Scenario& s);

/// Semantic checks (kernels, initial data, resolutions). Throws ScenarioError.
void validate_scenario(const Scenario& s, const std::string& source = "<scenario>");

}  // namespace annihilate
