#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "annihilate/analysis.hpp"
#include "annihilate/io.hpp"
#include "annihilate/scenario.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace annihilate;

namespace {

constexpr const char* kToolVersion = "1.0.0";

enum class Level { Quiet = 0, Info = 1, Debug = 2 };

Level log_level() {
  const char* env = std::getenv("ANNIHILATE_LOG");
  if (!env) return Level::Info;
  const std::string v = env;
  if (v == "quiet" || v == "0" || v == "error") return Level::Quiet;
  if (v == "debug" || v == "2") return Level::Debug;
  return Level::Info;
}

void log(Level at, const std::string& msg) {
  if (static_cast<int>(log_level()) >= static_cast<int>(at)) std::cerr << "[annihilate] " << msg << '\n';
}

struct Options {
  std::string scenario;
  std::string out;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  bool suite = false;
};

struct Context {
  Scenario scenario;
  fs::path out;
  std::vector<std::string> files;

  void write(const std::string& name, const std::string& text) {
    write_text_file(out / name, text);
    files.push_back(name);
    log(Level::Debug, "wrote " + (out / name).string());
  }
};

json scenario_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["kernels"] = {{"V", s.v_kernel}, {"W", s.w_kernel}};
  if (s.explicit_particles()) {
    j["initial"] = {{"positions", s.positions}, {"charges", s.charges}};
  } else {
    json blocks = json::array();
    for (const auto& b : s.blocks)
      blocks.push_back({{"species", b.species},
                        {"lo", b.lo},
                        {"hi", b.hi},
                        {"mass", b.mass},
                        {"profile", profile_name(b.profile)},
                        {"jitter", b.jitter}});
    j["initial"] = {{"blocks", blocks}};
  }
  j["n"] = s.n;
  j["n_list"] = s.n_list;
  const auto& c = s.sim;
  j["sim"] = {{"T", c.T},
              {"dt_init", c.dt_init},
              {"dt_min", c.dt_min},
              {"tol_step", c.tol_step},
              {"eps_annihilate", c.eps_annihilate},
              {"eps_bisect", c.eps_bisect},
              {"record_every", c.record_every},
              {"guard_factor", c.guard_factor},
              {"fixed_dt", c.fixed_dt},
              {"track_energy", c.track_energy},
              {"sample_times", c.sample_times}};
  if (s.continuum.enabled)
    j["continuum"] = {{"x_min", s.continuum.grid.x_min},
                      {"x_max", s.continuum.grid.x_max},
                      {"cells", s.continuum.grid.cells},
                      {"cfl", s.continuum.cfl},
                      {"snapshot_times", s.continuum.snapshot_times}};
  j["convergence"] = {{"reference", reference_name(s.reference)}};
  j["checks"] = {{"negative_control", s.negative_control}, {"metric_pairs", s.metric_pairs}};
  j["seed"] = s.seed;
  j["output"] = s.output;
  return j;
}

json report_json(const CheckReport& r) {
  return {{"name", r.name},
          {"pass", r.pass},
          {"measured", r.measured},
          {"bound", r.bound},
          {"slack", r.slack},
          {"tolerance", r.tolerance},
          {"context", {{"n", r.context.n}, {"T", r.context.T}, {"scenario", r.context.scenario}}},
          {"detail", r.detail}};
}

std::string trajectory_csv(const Trajectory& traj) {
  std::ostringstream os;
  const Eigen::Index n = traj.front().state.size();
  os << "t";
  for (Eigen::Index i = 1; i <= n; ++i) os << ",x_" << i;
  for (Eigen::Index i = 1; i <= n; ++i) os << ",b_" << i;
  os << ",E_n,M2,M4\n";
  for (const auto& s : traj.samples) {
    os << format_double(s.t);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_double(s.state.x[i]);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << s.state.b[i];
    os << ',' << format_double(s.energy) << ',' << format_double(s.m2) << ',' << format_double(s.m4) << '\n';
  }
  return os.str();
}

json events_json(const EventLog& log_) {
  json arr = json::array();
  for (const auto& e : log_.events) {
    json pairs = json::array();
    for (auto [p, q] : e.pairs) pairs.push_back({p, q});
    arr.push_back({{"t_k", e.t},
                   {"Gamma_k", e.indices},
                   {"pairs", pairs},
                   {"energy_before", e.energy_before},
                   {"energy_after", e.energy_after},
                   {"degenerate", e.degenerate}});
  }
  return arr;
}

void write_manifest(Context& ctx, const std::string& command, json extra = json::object()) {
  json m;
  m["tool"] = "annihilate";
  m["version"] = kToolVersion;
  m["command"] = command;
  m["scenario"] = scenario_json(ctx.scenario);
  auto files = ctx.files;
  files.push_back("manifest.json");
  std::sort(files.begin(), files.end());
  m["files"] = files;
  if (!extra.empty()) m["results"] = std::move(extra);
  ctx.write("manifest.json", m.dump(2) + "\n");
}

Context prepare(const Options& opt) {
  Context ctx;
  ctx.scenario = load_scenario(opt.scenario);
  if (opt.seed) ctx.scenario.seed = *opt.seed;
  ctx.out = opt.out.empty() ? fs::path(ctx.scenario.output) : fs::path(opt.out);
  fs::create_directories(ctx.out);
  ctx.write("scenario_resolved.yaml", dump_scenario(ctx.scenario));
  log(Level::Info, "scenario '" + ctx.scenario.name + "' -> " + ctx.out.string());
  return ctx;
}

Trajectory simulate(const Scenario& s) {
  const auto initial = s.initial_state();
  log(Level::Info, "running n = " + std::to_string(initial.size()) + " to T = " + format_double(s.sim.T));
  auto traj = run(initial, s.kernels(), s.sim);
  log(Level::Info, std::to_string(traj.accepted_steps) + " steps, " + std::to_string(traj.events.events.size()) +
                       " collision events");
  return traj;
}

int cmd_run(const Options& opt) {
  Context ctx = prepare(opt);
  const auto& s = ctx.scenario;
  const Trajectory traj = simulate(s);
  ctx.write("trajectory.csv", trajectory_csv(traj));
  ctx.write("events.json", events_json(traj.events).dump(2) + "\n");
  {
    std::ostringstream a, b;
    write_measures_csv(a, from_state(traj.front().state));
    write_measures_csv(b, from_state(traj.back().state));
    ctx.write("measures_initial.csv", a.str());
    ctx.write("measures_final.csv", b.str());
  }
  {
    // Distances between the samples at t = 0, the requested times and T.
    std::vector<double> times{0.0};
    for (double t : s.sim.sample_times)
      if (t > 0.0 && t < s.sim.T) times.push_back(t);
    times.push_back(s.sim.T);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    std::vector<EmpiricalPair> pairs;
    for (double t : times) pairs.push_back(from_state(traj.at(t).state).mu);
    std::ostringstream os;
    write_distance_matrix_csv(os, times, distance_matrix(pairs));
    ctx.write("distances.csv", os.str());
  }
  write_manifest(ctx, "run",
                 {{"accepted_steps", traj.accepted_steps},
                  {"rejected_steps", traj.rejected_steps},
                  {"events", traj.events.events.size()},
                  {"annihilated_particles", traj.events.annihilated_particles()},
                  {"dissipation_integral", traj.dissipation_integral}});
  return 0;
}

int finish_checks(Context& ctx, const std::vector<CheckReport>& reports, bool negative_control, const char* command) {
  json arr = json::array();
  bool all_pass = true;
  for (const auto& r : reports) {
    arr.push_back(report_json(r));
    all_pass = all_pass && r.pass;
    log(r.pass ? Level::Debug : Level::Info,
        std::string(r.pass ? "pass " : "FAIL ") + r.context.scenario + "/" + r.name + " slack " + format_double(r.slack));
  }
  ctx.write("checks.json", arr.dump(2) + "\n");
  write_manifest(ctx, command, {{"all_pass", all_pass}, {"negative_control", negative_control}});
  if (negative_control) {
    const bool detected = std::any_of(reports.begin(), reports.end(),
                                      [](const CheckReport& r) { return r.name == "energy_monotone" && !r.pass; });
    log(Level::Info, detected ? "negative control detected" : "negative control NOT detected");
    return detected ? 0 : 1;
  }
  return all_pass ? 0 : 1;
}

int cmd_check(const Options& opt) {
  if (opt.suite) {
    Context ctx;
    ctx.out = opt.out.empty() ? fs::path("out/suite") : fs::path(opt.out);
    ctx.scenario.name = "default_suite";
    auto suite = default_suite();
    suite.push_back(negative_control_scenario());
    const auto runs = run_suite(suite, opt.jobs, opt.seed.value_or(0));
    std::vector<CheckReport> regular;
    bool negative_detected = true;
    json arr = json::array();
    for (const auto& r : runs) {
      for (const auto& c : r.checks) {
        json j = report_json(c);
        j["negative_control"] = r.negative_control;
        arr.push_back(j);
        if (!r.negative_control) regular.push_back(c);
        if (r.negative_control && c.name == "energy_monotone" && c.pass) negative_detected = false;
      }
    }
    const bool ok = negative_detected && std::all_of(regular.begin(), regular.end(), [](auto& c) { return c.pass; });
    ctx.write("checks.json", arr.dump(2) + "\n");
    json m = {{"tool", "annihilate"},
              {"version", kToolVersion},
              {"command", "check --suite"},
              {"scenarios", suite.size()},
              {"all_pass", ok},
              {"files", {"checks.json", "manifest.json"}}};
    ctx.write("manifest.json", m.dump(2) + "\n");
    log(Level::Info, ok ? "suite passed" : "suite FAILED");
    return ok ? 0 : 1;
  }
  Context ctx = prepare(opt);
  const auto& s = ctx.scenario;
  const Trajectory traj = simulate(s);
  const KernelPair pair = s.kernels();
  std::vector<CheckReport> reports = standard_checks(traj, pair, s.sim, s.name, s.seed);
  for (auto& r : reports)
    if (r.name == "metric_bound") r = check_metric_bound(traj, s.metric_pairs, s.seed, 1e-8, s.name);
  return finish_checks(ctx, reports, s.negative_control, "check");
}

int cmd_converge(const Options& opt) {
  Context ctx = prepare(opt);
  const auto& s = ctx.scenario;
  if (s.explicit_particles() || s.n_list.empty())
    throw ScenarioError(opt.scenario, 0, "converge needs block initial data and n_list");
  if (s.reference == Reference::Continuum && !s.continuum.enabled)
    throw ScenarioError(opt.scenario, 0, "continuum reference needs a continuum section");
  const auto setup = s.convergence_setup();
  const auto table = convergence_study(setup, s.n_list, s.reference, opt.jobs);
  std::ostringstream os;
  write_convergence_csv(os, table);
  ctx.write("convergence.csv", os.str());
  json extra = {{"reference", reference_name(s.reference)}, {"strictly_decreasing", table.strictly_decreasing()}};
  if (s.continuum.enabled) extra["continuum_kappa_loss"] = continuum_kappa_loss(setup);
  write_manifest(ctx, "converge", extra);
  return 0;
}

int cmd_continuum(const Options& opt) {
  Context ctx = prepare(opt);
  const auto& s = ctx.scenario;
  if (!s.continuum.enabled || s.blocks.empty())
    throw ScenarioError(opt.scenario, 0, "continuum needs a continuum section and block initial data");
  const auto init = cell_averages(s.blocks, s.continuum.grid);
  const auto snaps = run_continuum(init, s.kernels(), s.sim.T, s.continuum.cfl, s.continuum.snapshot_times);
  json index = json::array();
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%03zu.csv", k);
    std::ostringstream os;
    write_snapshot_csv(os, snaps[k]);
    ctx.write(name, os.str());
    index.push_back({{"file", name},
                     {"t", snaps[k].t},
                     {"mass_plus", snaps[k].mass(Species::Plus)},
                     {"mass_minus", snaps[k].mass(Species::Minus)},
                     {"abs_kappa", snaps[k].abs_kappa_mass()}});
  }
  ctx.write("snapshots.json", index.dump(2) + "\n");
  write_manifest(ctx, "continuum", {{"snapshots", snaps.size()}});
  return 0;
}

int cmd_validate(const Options& opt) {
  Context ctx = prepare(opt);
  const auto pair = ctx.scenario.kernels();
  const auto grid = default_sample_grid();
  const auto report = validate_assumptions(pair, grid);
  json arr = json::array();
  for (const auto& c : report.clauses)
    arr.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"detail", c.detail}});
  json constants = {{"bound_rVprime", pair.bound_rVprime},
                    {"bound_rWprime", pair.bound_rWprime},
                    {"W0", pair.bound_W0},
                    {"growth_constant", pair.growth_constant},
                    {"quadratic_constant", pair.quadratic_constant},
                    {"edi_constant", edi_constant(pair)},
                    {"m2_rate", m2_rate(pair)},
                    {"m4_constant", m4_constant(pair)}};
  ctx.write("validation.json", json({{"clauses", arr}, {"constants", constants}}).dump(2) + "\n");
  write_manifest(ctx, "validate", {{"all_pass", report.all_pass()}});
  return report.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Signed particles on the line with annihilation: simulation, checks and convergence studies"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Options opt;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub, bool scenario_required) {
    auto* sc = sub->add_option("--scenario", opt.scenario, "Scenario YAML file")->check(CLI::ExistingFile);
    if (scenario_required) sc->required();
    sub->add_option("--out", opt.out, "Output directory (default: the scenario's output entry)");
    sub->add_option("--jobs", opt.jobs, "Worker threads for independent runs")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "Override the scenario seed");
    return sc;
  };
  auto* run_cmd = app.add_subcommand("run", "Simulate the particle system and export the trajectory");
  auto* conv_cmd = app.add_subcommand("converge", "Convergence study over n_list");
  auto* cont_cmd = app.add_subcommand("continuum", "Finite-volume solution of the continuum system");
  auto* check_cmd = app.add_subcommand("check", "Run every trajectory check and write checks.json");
  auto* val_cmd = app.add_subcommand("validate", "Check the kernel assumptions and report derived constants");
  for (auto* sub : {run_cmd, conv_cmd, cont_cmd, val_cmd}) add_common(sub, true);
  auto* check_sc = add_common(check_cmd, false);
  auto* suite_flag = check_cmd->add_flag("--suite", opt.suite, "Run the built-in scenario suite");
  check_sc->excludes(suite_flag);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  for (auto* sub : app.get_subcommands())
    if (sub->get_option("--seed")->count() > 0) opt.seed = seed;
  if (check_cmd->parsed() && !opt.suite && opt.scenario.empty()) {
    std::cerr << "check: --scenario or --suite is required\n";
    return 2;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(opt);
    if (conv_cmd->parsed()) return cmd_converge(opt);
    if (cont_cmd->parsed()) return cmd_continuum(opt);
    if (check_cmd->parsed()) return cmd_check(opt);
    if (val_cmd->parsed()) return cmd_validate(opt);
  } catch (const ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
