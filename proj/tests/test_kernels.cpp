#include <doctest.h>

#include <cmath>
#include <random>

#include "annihilate/kernels.hpp"

using namespace annihilate;

namespace {

std::vector<KernelSpec> all_kernels() {
  return {KernelSpec::log_repulsive(), KernelSpec::wall_repulsive(), KernelSpec::regularized_log(0.1),
          KernelSpec::regularized_log(1.0 / 3.0), KernelSpec::zero()};
}

}  // namespace

TEST_CASE("eval examples") {
  CHECK(eval(KernelSpec::log_repulsive(), 0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(eval(KernelSpec::regularized_log(1.0 / 3.0), 0.0) == doctest::Approx(-std::log(3.0)).epsilon(1e-15));
  // Arbitrary-precision reference; 0.4586751 as quoted elsewhere is off in the fourth digit.
  CHECK(eval(KernelSpec::wall_repulsive(), 1.0) == doctest::Approx(0.45844874336819036).epsilon(1e-14));
  CHECK(eval(KernelSpec::zero(), 3.0) == 0.0);
}

TEST_CASE("eval_prime examples") {
  CHECK(eval_prime(KernelSpec::log_repulsive(), 0.0) == 0.0);
  CHECK(eval_prime(KernelSpec::log_repulsive(), 2.0) == -0.5);
  CHECK(eval_prime(KernelSpec::regularized_log(0.1), 0.1) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(eval_prime(KernelSpec::wall_repulsive(), 0.0) == 0.0);
}

TEST_CASE("singular kernels throw at zero") {
  CHECK_THROWS_AS(eval(KernelSpec::log_repulsive(), 0.0), std::domain_error);
  CHECK_THROWS_AS(eval(KernelSpec::wall_repulsive(), 0.0), std::domain_error);
  CHECK_NOTHROW(eval(KernelSpec::zero(), 0.0));
}

TEST_CASE("wall kernel against arbitrary-precision values") {
  struct Row {
    double r, v, vp;
  };
  const Row rows[] = {
      {1e-6, 14.122363377404495461, -999999.99999966666667},
      {5e-5, 10.210340372392849403, -19999.999983333333342},
      {1e-4, 9.5171931930829040917, -9999.9999666666667333},
      {2e-4, 8.8240460175229587572, -4999.9999333333338667},
      {0.01, 4.9120396719281478223, -99.996666733332275147},
      {0.3, 1.5256918974428420376, -3.2351079393023323012},
      {0.5, 1.0406518522564083154, -1.8413471884155846379},
      {0.75, 0.68330783410875636254, -1.1091314222357157285},
      {1.0, 0.45844874336819036061, -0.72406166096631046641},
      {2.0, 0.093114888280982752285, -0.15204365967614219851},
      {5.0, 0.00049942087046736689279, -0.00090808104700950824196},
      {20.0, 1.7418252446695514954e-16, -3.3986834042332712251e-16},
  };
  const auto k = KernelSpec::wall_repulsive();
  for (const auto& row : rows) {
    CAPTURE(row.r);
    CHECK(eval(k, row.r) == doctest::Approx(row.v).epsilon(1e-13));
    CHECK(eval(k, -row.r) == doctest::Approx(row.v).epsilon(1e-13));
    CHECK(eval_prime(k, row.r) == doctest::Approx(row.vp).epsilon(1e-13));
  }
}

TEST_CASE("derivatives match central differences") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> logr(std::log(1e-6), std::log(1e3));
  for (const auto& k : all_kernels()) {
    CAPTURE(k.name());
    for (int i = 0; i < 500; ++i) {
      double r = std::exp(logr(rng));
      if (i % 2) r = -r;
      // Relative step: h = 1e-5 max(|r|, 1) has O((h/r)^2) truncation error of order 1
      // for log-type kernels near |r| = 1e-5.
      const double h = 1e-5 * std::abs(r);
      // Long double keeps the rounding of the quotient well below the tolerance.
      const long double fd =
          (eval<long double>(k, r + h) - eval<long double>(k, r - h)) / (2.0L * static_cast<long double>(h));
      const double d = eval_prime(k, r);
      const double err = std::abs(d - static_cast<double>(fd));
      CAPTURE(r);
      CHECK(err <= 1e-6 * (1.0 + std::abs(d)));
    }
  }
}

TEST_CASE("evenness and odd derivatives") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> logr(std::log(1e-8), std::log(1e4));
  for (const auto& k : all_kernels()) {
    for (int i = 0; i < 300; ++i) {
      const double r = std::exp(logr(rng));
      const double v = eval(k, r);
      CHECK(std::abs(v - eval(k, -r)) <= 1e-14 * std::abs(v));
      CHECK(eval_prime(k, r) == -eval_prime(k, -r));
    }
  }
}

TEST_CASE("stored bounds dominate |r K'(r)|") {
  const KernelPair pairs[] = {
      KernelPair(KernelSpec::log_repulsive(), KernelSpec::regularized_log(0.3)),
      KernelPair(KernelSpec::wall_repulsive(), KernelSpec::regularized_log(0.1)),
      KernelPair(KernelSpec::wall_repulsive(), KernelSpec::zero()),
  };
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> logr(std::log(1e-8), std::log(1e4));
  for (const auto& p : pairs) {
    for (int i = 0; i < 2000; ++i) {
      const double r = std::exp(logr(rng));
      CHECK(std::abs(r * eval_prime(p.V, r)) <= p.bound_rVprime * (1 + 1e-12));
      CHECK(std::abs(r * eval_prime(p.W, r)) <= p.bound_rWprime * (1 + 1e-12));
    }
  }
  CHECK(pairs[0].bound_rVprime == doctest::Approx(1.0).epsilon(1e-12));
  // sup |r W'| = sup r^2 / (r^2 + d^2) = 1, approached at infinity.
  CHECK(pairs[0].bound_rWprime == doctest::Approx(1.0).epsilon(1e-12));
  // |r V'| = r^2 / sinh^2 r -> 1 as r -> 0.
  CHECK(pairs[1].bound_rVprime == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pairs[1].bound_W0 == doctest::Approx(std::log(0.1)).epsilon(1e-14));
}

TEST_CASE("reglog tends to log|r| as delta shrinks") {
  for (double r : {0.01, 0.5, 3.0, -2.0}) {
    double prev = INFINITY;
    for (double d : {1.0, 0.1, 1e-2, 1e-3, 1e-4}) {
      const double err = std::abs(eval(KernelSpec::regularized_log(d), r) - std::log(std::abs(r)));
      CHECK(err < prev);
      prev = err;
    }
    CHECK(prev < 1e-4);
  }
}

TEST_CASE("validate_assumptions examples") {
  const auto grid = default_sample_grid();

  SUBCASE("log with reglog passes everything") {
    const KernelPair p(KernelSpec::log_repulsive(), KernelSpec::regularized_log(0.3));
    const auto rep = validate_assumptions(p, grid);
    CHECK(rep.all_pass());
    CHECK(rep.clause("rVprime_bounded").value == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("zero as V fails the divergence clause") {
    const KernelPair p(KernelSpec::zero(KernelRole::V), KernelSpec::zero());
    const auto rep = validate_assumptions(p, grid);
    CHECK_FALSE(rep.clause("V_singular_at_zero").pass);
    CHECK_FALSE(rep.all_pass());
  }
  SUBCASE("wall with reglog reports a finite sup") {
    const KernelPair p(KernelSpec::wall_repulsive(), KernelSpec::regularized_log(0.3));
    const auto rep = validate_assumptions(p, grid);
    CHECK(rep.all_pass());
    const double sup = rep.clause("rVprime_bounded").value;
    CHECK(std::isfinite(sup));
    CHECK(sup <= 1.0 + 1e-12);
    CHECK(sup > 0.999);
  }
  SUBCASE("log as W fails regularity") {
    const KernelPair p(KernelSpec::log_repulsive(), KernelSpec::log_repulsive(KernelRole::W));
    CHECK_FALSE(validate_assumptions(p, grid).clause("W_regular_at_zero").pass);
  }
}

TEST_CASE("role admissibility") {
  CHECK_THROWS_AS(KernelPair::checked(KernelSpec::zero(), KernelSpec::zero()), std::invalid_argument);
  CHECK_THROWS_AS(KernelPair::checked(KernelSpec::regularized_log(0.1), KernelSpec::zero()), std::invalid_argument);
  CHECK_THROWS_AS(KernelPair::checked(KernelSpec::log_repulsive(), KernelSpec::wall_repulsive()),
                  std::invalid_argument);
  CHECK_NOTHROW(KernelPair::checked(KernelSpec::wall_repulsive(), KernelSpec::regularized_log(0.5)));
  CHECK_THROWS_AS(KernelSpec::regularized_log(0.0), std::invalid_argument);
}

TEST_CASE("parse_kernel round trip") {
  for (const char* text : {"log", "wall", "zero", "reglog(0.1)", "reglog(0.33333333333333331)"}) {
    const auto k = parse_kernel(text, KernelRole::W);
    CHECK(parse_kernel(k.name(), KernelRole::W).name() == k.name());
  }
  CHECK_THROWS_AS(parse_kernel("coulomb", KernelRole::V), std::invalid_argument);
  CHECK_THROWS_AS(parse_kernel("reglog(-1)", KernelRole::W), std::invalid_argument);
  CHECK_THROWS_AS(parse_kernel("reglog(x)", KernelRole::W), std::invalid_argument);
}
