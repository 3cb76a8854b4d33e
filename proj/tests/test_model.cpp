#include <doctest.h>

#include <cmath>
#include <limits>

#include "grem/calibration.hpp"
#include "grem/error.hpp"
#include "grem/model.hpp"

using namespace grem;

namespace {

ModelSpec gaussian_binary(int n) {
  ModelSpec s;
  s.offspring = OffspringLaw::binary();
  s.schedule.n = n;
  s.schedule.rule = KRule::power;
  s.schedule.alpha = 0.5;
  return s;
}

bool has_failed(const ValidationReport& r, const std::string& name) {
  for (const auto& c : r.clauses)
    if (c.name == name && !c.passed) return true;
  return false;
}

// Bisection on g(theta) = theta Lambda'(theta) - Lambda(theta) for the uniform step.
double uniform_theta_oracle(double log_m) {
  const double r3 = std::sqrt(3.0);
  auto g = [&](double t) {
    const double lam = std::log(std::sinh(r3 * t) / (r3 * t));
    const double lam1 = r3 / std::tanh(r3 * t) - 1.0 / t;
    return t * lam1 - lam;
  };
  double lo = 1e-6, hi = 50;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < log_m ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("validation accepts the clean binary Gaussian spec") {
  auto spec = gaussian_binary(100);
  CHECK(validate_spec(spec).ok());
  CHECK_NOTHROW(require_valid(spec));
}

TEST_CASE("validation names the failed clause") {
  auto spec = gaussian_binary(100);
  spec.offspring = OffspringLaw::custom({0.1, 0.0, 0.9});
  const auto rep = validate_spec(spec);
  CHECK_FALSE(rep.ok());
  CHECK(has_failed(rep, "p0=0"));

  auto lat = gaussian_binary(100);
  lat.displacement = DisplacementLaw(DisplacementPreset::two_point_lattice);
  lat.hypothesis = Hypothesis::H2;
  CHECK(has_failed(validate_spec(lat), "Cramer condition"));

  try {
    require_valid(lat);
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::validation);
    CHECK(exit_code(e.kind()) == 2);
  }
}

TEST_CASE("schedule floor arithmetic") {
  Schedule s;
  s.rule = KRule::explicit_k;
  s.n = 100;
  s.k = 10;
  CHECK(s.b_n() == 10);
  CHECK(s.n_eff() == 100);
  s.k = 7;
  CHECK(s.b_n() == 14);
  CHECK(s.n_eff() == 98);
  s.n = 16;
  s.k = 16;
  CHECK(s.b_n() == 1);
  Schedule p;
  p.n = 24;
  CHECK(p.k_n() == 4);
  CHECK(p.b_n() == 6);
}

TEST_CASE("offspring moments") {
  const auto law = OffspringLaw::custom({0.0, 0.5, 0.0, 0.5});
  CHECK(law.mean() == doctest::Approx(2.0));
  CHECK(law.second_moment() == doctest::Approx(5.0));
  CHECK(OffspringLaw::deterministic(3).fixed_count() == 3);
  CHECK(law.fixed_count() == 0);
}

TEST_CASE("log mgf of the presets") {
  const DisplacementLaw g;
  CHECK(lambda(g, 0.0) == 0.0);
  CHECK(lambda_prime(g, 0.0) == 0.0);
  CHECK(lambda_second(g, 0.0) == doctest::Approx(1.0));
  const double bc = std::sqrt(2 * std::log(2.0));
  CHECK(lambda(g, bc) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

  const DisplacementLaw u(DisplacementPreset::uniform_centered);
  CHECK(std::abs(lambda(u, 1e-9)) < 1e-15);
  CHECK(lambda_second(u, 0.0) == doctest::Approx(1.0).epsilon(1e-6));
  const double r3 = std::sqrt(3.0);
  CHECK(lambda(u, 0.7) == doctest::Approx(std::log(std::sinh(0.7 * r3) / (0.7 * r3))).epsilon(1e-13));

  const DisplacementLaw e(DisplacementPreset::shifted_exponential);
  CHECK(lambda(e, 0.5) == doctest::Approx(-0.5 - std::log(0.5)).epsilon(1e-13));
  CHECK(lambda(e, 0.999) < lambda(e, 0.9999));
  CHECK(lambda(e, 0.9999) > 8.0);
}

TEST_CASE("theta* for the Gaussian law is sqrt(2 log m)") {
  CHECK(std::abs(solve_theta_star(OffspringLaw::binary(), DisplacementLaw()) - std::sqrt(2 * std::log(2.0))) < 1e-10);
  const auto weak = OffspringLaw::custom({0.0, 0.9999, 0.0001});
  const double th = solve_theta_star(weak, DisplacementLaw());
  CHECK(th == doctest::Approx(std::sqrt(2 * std::log(1.0001))).epsilon(1e-9));
}

TEST_CASE("theta* for the uniform law matches a bisection oracle") {
  const DisplacementLaw u(DisplacementPreset::uniform_centered);
  const double oracle = uniform_theta_oracle(std::log(2.0));
  CHECK(std::abs(solve_theta_star(std::log(2.0), u) - oracle) < 1e-10);
  CHECK(legendre_gap(u, oracle) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("two-point law has no root when log m exceeds the gap supremum") {
  const DisplacementLaw lat(DisplacementPreset::two_point_lattice);
  CHECK(legendre_gap_sup(lat) == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(solve_theta_star(std::log(3.0), lat), Error);
}

TEST_CASE("centering reproduces the GREM(N^alpha) formula at alpha = 1/2") {
  auto spec = gaussian_binary(4096);
  const auto p = calibrate(spec);
  REQUIRE(p.k_n == 64);
  REQUIRE(p.b_n == 64);
  const double bc = std::sqrt(2 * std::log(2.0));
  const double expected = 4096 * bc - (2 * 0.5 + 1) / (2 * bc) * std::log(4096.0);
  CHECK(std::abs(p.m_n - expected) <= 1e-12 * expected);
  CHECK(p.beta_c == doctest::Approx(bc));
}

TEST_CASE("centering at b_n = 1 is the branching random walk one") {
  auto spec = gaussian_binary(50);
  spec.schedule.rule = KRule::explicit_k;
  spec.schedule.k = 50;
  const auto p = calibrate(spec);
  CHECK(p.m_n == doctest::Approx(50 * p.v - 1.5 / p.theta_star * std::log(50.0)).epsilon(1e-14));
  Schedule one;
  one.rule = KRule::explicit_k;
  one.n = 1;
  one.k = 1;
  CHECK(centering(p.theta_star, p.v, one).a_n == 0.0);
}

TEST_CASE("c_n and d_n defaults") {
  Schedule s;
  s.rule = KRule::given_b;
  s.n = 256;
  s.b = 16;
  CHECK(sequences_cn_dn(s).c_n == doctest::Approx(2.0));
  s.b = 1;
  s.n = 10;
  CHECK(sequences_cn_dn(s).c_n == 1.0);
  Schedule big;
  big.n = 10000;
  const double ln = std::log(10000.0);
  CHECK(sequences_cn_dn(big).d_n == doctest::Approx(ln * (1 + std::log(ln))));
}

TEST_CASE("barrier endpoints") {
  const auto p = calibrate(gaussian_binary(100));
  const auto R = barrier_R(p);
  const auto F = barrier_F(p);
  CHECK(R(0) == doctest::Approx(p.c_n));
  CHECK(F(0) == 0.0);
  CHECK(F(p.k_n) == doctest::Approx(p.m_n));
  const double kb = static_cast<double>(p.k_n) * p.b_n;
  CHECK(R(p.k_n) == doctest::Approx(kb * p.v - 1.5 / p.theta_star * std::log(kb + 1) + p.c_n));
  for (int k = 1; k < p.k_n; ++k) CHECK(F(k) == doctest::Approx(k * p.b_n * p.v + double(k) / p.k_n * p.a_n - p.c_n));
}

TEST_CASE("grid advisory flags a non-growing schedule") {
  auto spec = gaussian_binary(16);
  spec.schedule.rule = KRule::given_b;
  spec.schedule.b = 4;
  spec.hypothesis = Hypothesis::H2;
  spec.displacement = DisplacementLaw(DisplacementPreset::uniform_centered);
  CHECK_FALSE(grid_advisory(spec, {16, 32, 64}).ok());
  CHECK(grid_advisory(gaussian_binary(16), {16, 64, 256}).ok());
}
