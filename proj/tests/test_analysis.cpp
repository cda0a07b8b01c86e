#include <doctest.h>

#include <atomic>
#include <cmath>
#include <set>
#include <sstream>

#include "annihilate/analysis.hpp"

using namespace annihilate;

namespace {

ParticleState make(std::vector<double> xs, std::vector<int> bs) {
  Eigen::VectorXd x = Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  ChargeVector b = Eigen::Map<ChargeVector>(bs.data(), static_cast<Eigen::Index>(bs.size()));
  return ParticleState::initial(x, b);
}

const KernelPair log_zero{KernelSpec::log_repulsive(), KernelSpec::zero()};
const KernelPair log_reglog{KernelSpec::log_repulsive(), KernelSpec::regularized_log(0.1)};

// Constant trajectory of a fully annihilated state.
Trajectory frozen_trajectory(const KernelPair& pair, std::vector<double> times = {0.0, 0.25, 0.5, 1.0}) {
  auto s = make({-1.0, -1.0, 0.5, 0.5}, {1, -1, -1, 1});
  s.b.setZero();
  s.tau.setZero();
  Trajectory tr;
  for (double t : times) {
    Sample smp;
    smp.t = t;
    smp.state = s;
    smp.state.t = t;
    smp.energy = energy(s, pair);
    smp.m2 = moments(s, 2);
    smp.m4 = moments(s, 4);
    tr.samples.push_back(smp);
  }
  return tr;
}

}  // namespace

TEST_CASE("CheckReport semantics") {
  const auto a = CheckReport::make("x", 1.0, 2.0, 0.0, {});
  CHECK(a.pass);
  CHECK(a.slack == 1.0);
  const auto b = CheckReport::make("x", 2.0 + 1e-9, 2.0, 1e-8, {});
  CHECK(b.pass);
  const auto c = CheckReport::make("x", 2.1, 2.0, 1e-8, {});
  CHECK_FALSE(c.pass);
  CHECK(c.slack == doctest::Approx(-0.1));
  CHECK_FALSE(CheckReport::make("x", NAN, 2.0, 1e-8, {}).pass);
  CHECK_FALSE(CheckReport::make("x", INFINITY, 0.0, 1e-8, {}).pass);
}

TEST_CASE("energy monotone examples") {
  SimConfig cfg;
  cfg.T = 1.0;
  const auto tr = run(make({0, 1}, {1, 1}), log_zero, cfg);
  const auto r = check_energy_monotone(tr, 10 * cfg.tol_step);
  CHECK(r.pass);
  CHECK(r.measured <= 0.0);
  CHECK(r.slack >= 0.0);

  CHECK(check_energy_monotone(frozen_trajectory(log_reglog), 1e-9).pass);

  const auto neg = negative_control_scenario();
  const auto bad = run(neg.initial, neg.pair, neg.config);
  CHECK_FALSE(check_energy_monotone(bad, 10 * neg.config.tol_step).pass);

  SimConfig quiet = cfg;
  quiet.track_energy = false;
  CHECK_FALSE(check_energy_monotone(run(make({0, 1}, {1, 1}), log_zero, quiet), 1e-9).pass);
}

TEST_CASE("EDI examples") {
  SimConfig cfg;
  cfg.T = 1.0;
  const auto tr = run(make({-0.5, 0.0, 0.3, 1.0}, {1, 1, 1, 1}), log_zero, cfg);
  const auto r = check_edi(tr, log_zero, 1e-8);
  CHECK(r.pass);
  CHECK(r.slack > 0.0);
  // Without jumps the dissipation equals the energy drop.
  CHECK(std::abs(tr.back().energy - tr.front().energy + tr.back().dissipation) <= 1e-8);

  const auto z = check_edi(frozen_trajectory(log_reglog), log_reglog, 1e-8);
  CHECK(z.pass);
  CHECK(z.measured == 0.0);
  CHECK(z.bound > 0.0);
}

TEST_CASE("jump bound on an annihilating pair") {
  SimConfig cfg;
  cfg.T = 1.0;
  cfg.eps_annihilate = 1e-8;
  const auto tr = run(make({-0.025, 0.025}, {1, -1}), log_reglog, cfg);
  REQUIRE(tr.events.events.size() == 1);
  const auto& ev = tr.events.events[0];
  // E jumps from W(0)/4 to 0.
  CHECK(ev.jump() == doctest::Approx(-0.25 * eval(log_reglog.W, 0.0)).epsilon(1e-6));
  const auto r = check_jump_bound(tr, log_reglog, 1e-8);
  CHECK(r.pass);
  CHECK(r.measured == doctest::Approx(ev.jump()));
  CHECK(check_edi(tr, log_reglog, 1e-8).pass);
  CHECK(check_events(tr).pass);
}

TEST_CASE("moments, metric chain, blocks, mass and separation on a mixed run") {
  SimConfig cfg;
  cfg.T = 1.0;
  cfg.eps_annihilate = 1e-8;
  const auto tr = run(make({-1.0, -0.6, -0.1, 0.1, 0.6, 1.0, 1.3}, {1, 1, 1, -1, -1, -1, 1}), log_reglog, cfg);
  CHECK_FALSE(tr.events.events.empty());
  for (const auto& r : check_moments(tr, log_reglog)) CHECK(r.pass);
  CHECK(check_metric_bound(tr, 100, 3).pass);
  CHECK(check_block_monotone(tr).pass);
  CHECK(check_mass(tr).pass);
  CHECK(check_same_sign_separation(tr).pass);
  CHECK(check_events(tr).pass);
  CHECK(m2_rate(log_reglog) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("check_events catches a broken log") {
  SimConfig cfg;
  cfg.T = 1.0;
  cfg.eps_annihilate = 1e-8;
  auto tr = run(make({-0.025, 0.025, 1.0}, {1, -1, -1}), log_reglog, cfg);
  REQUIRE(tr.events.events.size() == 1);
  REQUIRE(check_events(tr).pass);
  auto odd = tr;
  odd.events.events[0].indices.push_back(2);
  CHECK_FALSE(check_events(odd).pass);
  auto moved = tr;
  moved.samples.back().state.x[0] += 1e-15;
  CHECK_FALSE(check_events(moved).pass);
}

TEST_CASE("weak form") {
  SUBCASE("static state has zero residual") {
    const auto fns = default_test_functions(1.0, -2.0, 2.0);
    // The held-position rule integrates the time derivative exactly.
    CHECK(weak_form_residual(frozen_trajectory(log_reglog), log_reglog, fns, 0.0).measured <= 1e-15);
    // The trapezoid rule only up to its O(h^2) error in eta'.
    std::vector<double> fine;
    for (int k = 0; k <= 1000; ++k) fine.push_back(k / 1000.0);
    const auto tr = frozen_trajectory(log_reglog, fine);
    CHECK(weak_form_residual(tr, log_reglog, fns, 0.0, TimeQuadrature::Trapezoid).measured <= 1e-4);
  }
  SUBCASE("mirror symmetry") {
    SimConfig cfg;
    cfg.T = 0.5;
    const auto tr = run(make({-1.0, -0.3, 0.3, 1.0}, {1, 1, 1, 1}), log_zero, cfg);
    const TestFunction f{0.0, 0.5, 0.4, 0.8, 0.3};
    const TestFunction g{0.0, 0.5, -0.4, 0.8, -0.3};
    const auto r = weak_form_residuals(tr, log_zero, {f, g}, Species::Plus);
    CHECK(std::abs(r[0] - r[1]) <= 1e-12);
  }
  SUBCASE("residual shrinks with the recording stride") {
    double prev = INFINITY;
    for (int m : {10, 20, 40}) {
      SimConfig cfg;
      cfg.T = 1.0;
      cfg.record_every = 0;
      for (int k = 1; k < m; ++k) cfg.sample_times.push_back(static_cast<double>(k) / m);
      const auto tr = run(make({0, 1}, {1, 1}), log_zero, cfg);
      const double r = weak_form_residual(tr, log_zero, default_test_functions(1.0, -1.0, 2.0), 0.0).measured;
      CHECK(r < prev);
      prev = r;
    }
  }
  SUBCASE("test functions") {
    const TestFunction f{0.2, 0.8, 0.0, 1.0, 0.5};
    CHECK(f.eta(0.1) == 0.0);
    CHECK(f.eta(0.5) == 1.0);
    CHECK(f.space(3.0) == 0.0);
    const double h = 1e-6;
    for (double x : {-1.3, -0.2, 0.4, 1.7})
      CHECK(f.space_prime(x) == doctest::Approx((f.space(x + h) - f.space(x - h)) / (2 * h)).epsilon(1e-6));
    for (double t : {0.3, 0.55, 0.7})
      CHECK(f.eta_dot(t) == doctest::Approx((f.eta(t + h) - f.eta(t - h)) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("convergence study smoke test") {
  ConvergenceSetup s;
  s.name = "smoke";
  s.blocks = {{1, -1, 0, 0.5, Profile::Uniform}, {-1, 0, 1, 0.5, Profile::Uniform}};
  s.config.T = 0.2;
  s.config.sample_times = {0.1};
  s.grid = Grid::uniform(-2, 2, 80);

  const auto t1 = convergence_study(s, {4, 2}, Reference::SelfDoubling, 1);
  REQUIRE(t1.rows.size() == 2);
  CHECK(t1.rows[0].n == 2);
  CHECK(t1.rows[1].n == 4);
  CHECK(std::isnan(t1.rows[0].ratio));
  CHECK(t1.rows[1].ratio == doctest::Approx(t1.rows[1].sup_distance / t1.rows[0].sup_distance));

  const auto t2 = convergence_study(s, {2, 4}, Reference::SelfDoubling, 3);
  for (std::size_t k = 0; k < 2; ++k) CHECK(t1.rows[k].sup_distance == t2.rows[k].sup_distance);

  const auto tc = convergence_study(s, {8, 16}, Reference::Continuum, 2);
  CHECK(tc.reference == Reference::Continuum);
  CHECK(std::isfinite(tc.continuum_kappa_loss));
  CHECK(tc.rows.size() == 2);

  std::ostringstream os;
  write_convergence_csv(os, t1);
  CHECK(os.str().rfind("n,sup_distance,ratio,annihilated_mass\n", 0) == 0);

  CHECK(parse_reference(reference_name(Reference::Continuum)) == Reference::Continuum);
  CHECK_THROWS_AS(parse_reference("other"), std::invalid_argument);
}

TEST_CASE("default suite composition") {
  const auto suite = default_suite();
  CHECK(suite.size() == 10);
  std::set<std::string> families, names;
  Eigen::Index largest = 0;
  for (const auto& sc : suite) {
    names.insert(sc.name);
    families.insert(sc.pair.V.name().substr(0, 4));
    families.insert(sc.pair.W.name().substr(0, 4));
    largest = std::max(largest, sc.initial.size());
    CHECK_FALSE(sc.negative_control);
    CHECK(sc.pair.admissible());
  }
  CHECK(names.size() == 10);
  CHECK(largest == 400);
  CHECK(families == std::set<std::string>{"log", "wall", "regl", "zero"});
  CHECK(negative_control_scenario().negative_control);
}

TEST_CASE("parallel_for and run_suite are schedule independent") {
  std::vector<int> hits(50, 0);
  std::atomic<int> total{0};
  parallel_for(50, 4, [&](int i) {
    hits[i] += 1;
    total += i;
  });
  CHECK(total == 50 * 49 / 2);
  for (int h : hits) CHECK(h == 1);

  auto suite = default_suite();
  suite.resize(3);
  const auto a = run_suite(suite, 1, 7);
  const auto b = run_suite(suite, 3, 7);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].name == b[k].name);
    CHECK(a[k].trajectory.back().state.x == b[k].trajectory.back().state.x);
    REQUIRE(a[k].checks.size() == b[k].checks.size());
    for (std::size_t c = 0; c < a[k].checks.size(); ++c) CHECK(a[k].checks[c].measured == b[k].checks[c].measured);
  }
}
