#include "annihilate/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

namespace annihilate {

namespace {

std::string located(const std::string& source, int line, const std::string& what) {
  return line > 0 ? source + ":" + std::to_string(line) + ": " + what : source + ": " + what;
}

int line_of(const YAML::Node& node) {
  const auto m = node.Mark();
  return m.is_null() ? 0 : m.line + 1;
}

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& what) const {
    throw ScenarioError(source_, line_of(node), what);
  }

  void only_keys(const YAML::Node& map, std::initializer_list<const char*> keys, const std::string& where) const {
    if (!map.IsMap()) fail(map, where + " must be a mapping");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + where);
    }
  }

  template <typename T>
  T get(const YAML::Node& node, const std::string& what) const {
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, "bad value for " + what);
    }
  }

  template <typename T>
  void maybe(const YAML::Node& map, const char* key, T& out) const {
    if (const auto n = map[key]) out = get<T>(n, key);
  }

  template <typename T>
  std::vector<T> list(const YAML::Node& node, const std::string& what) const {
    if (!node.IsSequence()) fail(node, what + " must be a list");
    std::vector<T> v;
    for (const auto& e : node) v.push_back(get<T>(e, what));
    return v;
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

}  // namespace

ScenarioError::ScenarioError(const std::string& source, int line_, const std::string& what)
    : std::runtime_error(located(source, line_, what)), line(line_) {}

KernelPair Scenario::kernels() const {
  return KernelPair::checked(parse_kernel(v_kernel, KernelRole::V), parse_kernel(w_kernel, KernelRole::W));
}

ParticleState Scenario::initial_state(int n_override) const {
  if (explicit_particles()) {
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(positions.data(), static_cast<Eigen::Index>(positions.size()));
    Eigen::VectorXi b = Eigen::Map<const Eigen::VectorXi>(charges.data(), static_cast<Eigen::Index>(charges.size()));
    return ParticleState::initial(x, b);
  }
  return quantile_state(blocks, n_override > 0 ? n_override : n, seed);
}

ConvergenceSetup Scenario::convergence_setup() const {
  ConvergenceSetup cs;
  cs.name = name;
  cs.blocks = blocks;
  cs.pair = kernels();
  cs.config = sim;
  cs.seed = seed;
  cs.grid = continuum.grid;
  cs.cfl = continuum.cfl;
  return cs;
}

void validate_scenario(const Scenario& s, const std::string& source) {
  auto fail = [&](const std::string& what) { throw ScenarioError(source, 0, what); };
  try {
    (void)s.kernels();
    s.sim.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (s.explicit_particles() == !s.blocks.empty())
    fail("initial data needs exactly one of explicit positions or blocks");
  if (s.explicit_particles()) {
    if (s.positions.size() != s.charges.size()) fail("positions and charges differ in length");
    if (s.positions.size() < 2) fail("need at least two particles");
    for (std::size_t i = 0; i < s.positions.size(); ++i) {
      if (s.charges[i] != 1 && s.charges[i] != -1) fail("charge " + std::to_string(i) + " must be +1 or -1");
      if (i == 0) continue;
      const std::string pr = "particles " + std::to_string(i - 1) + " and " + std::to_string(i);
      if (s.positions[i] == s.positions[i - 1] && s.charges[i] != s.charges[i - 1])
        fail(pr + " have opposite charges and start at the same position");
      if (!(s.positions[i] > s.positions[i - 1])) fail(pr + ": positions must be strictly increasing");
      if (s.charges[i] != s.charges[i - 1] && s.positions[i] - s.positions[i - 1] <= s.sim.eps_annihilate)
        fail(pr + " have opposite charges and start within the annihilation threshold");
    }
  } else {
    try {
      validate_blocks(s.blocks);
      std::vector<int> ns = s.n_list;
      if (s.n > 0) ns.push_back(s.n);
      if (ns.empty()) fail("block initial data needs n or n_list");
      for (int n : ns) {
        (void)block_counts(s.blocks, n);
        if (s.reference == Reference::SelfDoubling && !s.n_list.empty()) (void)block_counts(s.blocks, 2 * n);
      }
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }
  if (s.continuum.enabled && !s.blocks.empty() &&
      (s.blocks.front().lo < s.continuum.grid.x_min || s.blocks.back().hi > s.continuum.grid.x_max))
    fail("continuum grid does not contain the initial blocks");
  if (s.metric_pairs < 0) fail("metric_pairs must be >= 0");
}

Scenario parse_scenario(const std::string& yaml_text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ScenarioError(source, e.mark.is_null() ? 0 : e.mark.line + 1, "parse error: " + e.msg);
  }
  Reader rd(source);
  rd.only_keys(root, {"name", "kernels", "initial", "n", "n_list", "sim", "continuum", "convergence", "checks", "seed",
                      "output"},
               "scenario");
  Scenario s;
  rd.maybe(root, "name", s.name);
  rd.maybe(root, "n", s.n);
  rd.maybe(root, "seed", s.seed);
  rd.maybe(root, "output", s.output);
  if (const auto nl = root["n_list"]) s.n_list = rd.list<int>(nl, "n_list");

  if (const auto k = root["kernels"]) {
    rd.only_keys(k, {"V", "W"}, "kernels");
    rd.maybe(k, "V", s.v_kernel);
    rd.maybe(k, "W", s.w_kernel);
    for (const char* key : {"V", "W"}) {
      try {
        (void)parse_kernel(key[0] == 'V' ? s.v_kernel : s.w_kernel, key[0] == 'V' ? KernelRole::V : KernelRole::W);
      } catch (const std::invalid_argument& e) {
        rd.fail(k[key] ? k[key] : k, e.what());
      }
    }
    try {
      (void)s.kernels();
    } catch (const std::invalid_argument& e) {
      rd.fail(k, e.what());
    }
  }

  if (const auto sim = root["sim"]) {
    rd.only_keys(sim, {"T", "dt_init", "dt_min", "tol_step", "eps_annihilate", "eps_bisect", "record_every",
                       "guard_factor", "fixed_dt", "track_energy", "sample_times"},
                 "sim");
    rd.maybe(sim, "T", s.sim.T);
    rd.maybe(sim, "dt_init", s.sim.dt_init);
    rd.maybe(sim, "dt_min", s.sim.dt_min);
    rd.maybe(sim, "tol_step", s.sim.tol_step);
    rd.maybe(sim, "eps_annihilate", s.sim.eps_annihilate);
    rd.maybe(sim, "eps_bisect", s.sim.eps_bisect);
    rd.maybe(sim, "record_every", s.sim.record_every);
    rd.maybe(sim, "guard_factor", s.sim.guard_factor);
    rd.maybe(sim, "fixed_dt", s.sim.fixed_dt);
    rd.maybe(sim, "track_energy", s.sim.track_energy);
    if (const auto st = sim["sample_times"]) s.sim.sample_times = rd.list<double>(st, "sample_times");
    try {
      s.sim.validate();
    } catch (const std::invalid_argument& e) {
      rd.fail(sim, e.what());
    }
  }

  const auto init = root["initial"];
  if (!init) rd.fail(root, "missing 'initial'");
  rd.only_keys(init, {"positions", "charges", "blocks"}, "initial");
  if (init["positions"] || init["charges"]) {
    if (!init["positions"] || !init["charges"]) rd.fail(init, "explicit initial data needs positions and charges");
    if (init["blocks"]) rd.fail(init["blocks"], "give either explicit particles or blocks, not both");
    s.positions = rd.list<double>(init["positions"], "positions");
    s.charges = rd.list<int>(init["charges"], "charges");
    if (s.positions.size() != s.charges.size()) rd.fail(init["charges"], "positions and charges differ in length");
    const auto pos = init["positions"];
    for (std::size_t i = 0; i < s.charges.size(); ++i)
      if (s.charges[i] != 1 && s.charges[i] != -1) rd.fail(init["charges"][i], "charge must be +1 or -1");
    for (std::size_t i = 1; i < s.positions.size(); ++i) {
      const std::string pr = "particles " + std::to_string(i - 1) + " and " + std::to_string(i);
      if (s.charges[i] != s.charges[i - 1] && s.positions[i] - s.positions[i - 1] <= s.sim.eps_annihilate)
        rd.fail(pos[i], pr + " have opposite charges and start " +
                            (s.positions[i] == s.positions[i - 1] ? std::string("at the same position")
                                                                  : std::string("within the annihilation threshold")));
      if (!(s.positions[i] > s.positions[i - 1])) rd.fail(pos[i], pr + ": positions must be strictly increasing");
    }
  } else if (const auto bl = init["blocks"]) {
    if (!bl.IsSequence()) rd.fail(bl, "blocks must be a list");
    for (const auto& b : bl) {
      rd.only_keys(b, {"species", "lo", "hi", "mass", "profile", "jitter"}, "block");
      DensityBlock blk;
      rd.maybe(b, "species", blk.species);
      rd.maybe(b, "lo", blk.lo);
      rd.maybe(b, "hi", blk.hi);
      rd.maybe(b, "mass", blk.mass);
      rd.maybe(b, "jitter", blk.jitter);
      if (const auto p = b["profile"]) {
        try {
          blk.profile = parse_profile(rd.get<std::string>(p, "profile"));
        } catch (const std::invalid_argument& e) {
          rd.fail(p, e.what());
        }
      }
      s.blocks.push_back(blk);
    }
    try {
      validate_blocks(s.blocks);
    } catch (const std::invalid_argument& e) {
      rd.fail(bl, e.what());
    }
  } else {
    rd.fail(init, "initial data needs positions/charges or blocks");
  }

  if (const auto c = root["continuum"]) {
    rd.only_keys(c, {"x_min", "x_max", "cells", "cfl", "snapshot_times"}, "continuum");
    double lo = -1.0, hi = 1.0;
    int cells = 100;
    rd.maybe(c, "x_min", lo);
    rd.maybe(c, "x_max", hi);
    rd.maybe(c, "cells", cells);
    rd.maybe(c, "cfl", s.continuum.cfl);
    if (const auto st = c["snapshot_times"]) s.continuum.snapshot_times = rd.list<double>(st, "snapshot_times");
    try {
      s.continuum.grid = Grid::uniform(lo, hi, cells);
    } catch (const std::invalid_argument& e) {
      rd.fail(c, e.what());
    }
    if (!(s.continuum.cfl > 0.0 && s.continuum.cfl <= 0.5)) rd.fail(c, "cfl must lie in (0, 0.5]");
    s.continuum.enabled = true;
  }

  if (const auto cv = root["convergence"]) {
    rd.only_keys(cv, {"reference"}, "convergence");
    if (const auto r = cv["reference"]) {
      try {
        s.reference = parse_reference(rd.get<std::string>(r, "reference"));
      } catch (const std::invalid_argument& e) {
        rd.fail(r, e.what());
      }
    }
  }

  if (const auto ch = root["checks"]) {
    rd.only_keys(ch, {"negative_control", "metric_pairs"}, "checks");
    rd.maybe(ch, "negative_control", s.negative_control);
    rd.maybe(ch, "metric_pairs", s.metric_pairs);
  }

  try {
    validate_scenario(s, source);
  } catch (const ScenarioError& e) {
    if (e.line > 0) throw;
    const std::string msg = e.what();
    rd.fail(init, msg.substr(msg.find(": ") + 2));
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError(path.string(), 0, "cannot open scenario file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.string());
}

std::string dump_scenario(const Scenario& s) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << s.name;
  out << YAML::Key << "kernels" << YAML::Value << YAML::BeginMap << YAML::Key << "V" << YAML::Value << s.v_kernel
      << YAML::Key << "W" << YAML::Value << s.w_kernel << YAML::EndMap;

  out << YAML::Key << "initial" << YAML::Value << YAML::BeginMap;
  if (s.explicit_particles()) {
    out << YAML::Key << "positions" << YAML::Value << YAML::Flow << s.positions;
    out << YAML::Key << "charges" << YAML::Value << YAML::Flow << s.charges;
  } else {
    out << YAML::Key << "blocks" << YAML::Value << YAML::BeginSeq;
    for (const auto& b : s.blocks)
      out << YAML::Flow << YAML::BeginMap << YAML::Key << "species" << YAML::Value << b.species << YAML::Key << "lo"
          << YAML::Value << b.lo << YAML::Key << "hi" << YAML::Value << b.hi << YAML::Key << "mass" << YAML::Value
          << b.mass << YAML::Key << "profile" << YAML::Value << profile_name(b.profile) << YAML::Key << "jitter"
          << YAML::Value << b.jitter << YAML::EndMap;
    out << YAML::EndSeq;
  }
  out << YAML::EndMap;

  if (s.n > 0) out << YAML::Key << "n" << YAML::Value << s.n;
  if (!s.n_list.empty()) out << YAML::Key << "n_list" << YAML::Value << YAML::Flow << s.n_list;

  const auto& c = s.sim;
  out << YAML::Key << "sim" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "T" << YAML::Value << c.T;
  out << YAML::Key << "dt_init" << YAML::Value << c.dt_init;
  out << YAML::Key << "dt_min" << YAML::Value << c.dt_min;
  out << YAML::Key << "tol_step" << YAML::Value << c.tol_step;
  out << YAML::Key << "eps_annihilate" << YAML::Value << c.eps_annihilate;
  out << YAML::Key << "eps_bisect" << YAML::Value << c.eps_bisect;
  out << YAML::Key << "record_every" << YAML::Value << c.record_every;
  out << YAML::Key << "guard_factor" << YAML::Value << c.guard_factor;
  out << YAML::Key << "fixed_dt" << YAML::Value << c.fixed_dt;
  out << YAML::Key << "track_energy" << YAML::Value << c.track_energy;
  out << YAML::Key << "sample_times" << YAML::Value << YAML::Flow << c.sample_times;
  out << YAML::EndMap;

  if (s.continuum.enabled) {
    const auto& g = s.continuum.grid;
    out << YAML::Key << "continuum" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "x_min" << YAML::Value << g.x_min << YAML::Key << "x_max" << YAML::Value << g.x_max;
    out << YAML::Key << "cells" << YAML::Value << g.cells << YAML::Key << "cfl" << YAML::Value << s.continuum.cfl;
    out << YAML::Key << "snapshot_times" << YAML::Value << YAML::Flow << s.continuum.snapshot_times;
    out << YAML::EndMap;
  }
  out << YAML::Key << "convergence" << YAML::Value << YAML::BeginMap << YAML::Key << "reference" << YAML::Value
      << reference_name(s.reference) << YAML::EndMap;
  out << YAML::Key << "checks" << YAML::Value << YAML::BeginMap << YAML::Key << "negative_control" << YAML::Value
      << s.negative_control << YAML::Key << "metric_pairs" << YAML::Value << s.metric_pairs << YAML::EndMap;
  out << YAML::Key << "seed" << YAML::Value << s.seed;
  out << YAML::Key << "output" << YAML::Value << s.output;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace annihilate
