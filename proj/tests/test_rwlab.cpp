#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "grem/error.hpp"
#include "grem/rwlab.hpp"

using namespace grem;
using namespace grem::rwlab;

namespace {

BarrierSpec flat_upper(int K, double level) {
  BarrierSpec b;
  b.K = K;
  b.upper = [level](int) { return level; };
  return b;
}

Terminal up_to(double hi) {
  Terminal t;
  t.hi = hi;
  return t;
}

// P(B1 <= 0, B1 + B2 <= 0) = int_{-inf}^0 phi(x) Phi(-x) dx by the trapezoid rule.
double orthant_oracle() {
  const double h = 1e-4;
  double s = 0;
  for (double x = -12; x <= 0; x += h) {
    const double w = (x == -12 || x + h > 0) ? 0.5 : 1.0;
    s += w * std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI) * 0.5 * std::erfc(x / std::sqrt(2.0));
  }
  return s * h;
}

// Two-point walk probability of staying <= upper(k) and ending in [lo, hi] by path enumeration.
double enumerate_two_point(int K, const std::vector<double>& upper, double lo, double hi) {
  double total = 0;
  for (std::uint32_t mask = 0; mask < (1u << K); ++mask) {
    int x = 0;
    bool ok = true;
    for (int k = 1; k <= K && ok; ++k) {
      x += (mask >> (k - 1)) & 1 ? 1 : -1;
      ok = x <= upper[k];
    }
    if (ok && x >= lo && x <= hi) total += 1;
  }
  return total / static_cast<double>(1u << K);
}

double row_ratio(const CheckReport& r, std::size_t i) { return r.rows.at(i).ratio; }

}  // namespace

TEST_CASE("grid laws conserve mass") {
  const auto g = gaussian_law(1.0, 1.0 / 64);
  CHECK(std::abs(g.mass() + g.lost_mass - 1.0) < 1e-12);
  CHECK(g.lost_mass <= 1e-30);
  CHECK(std::abs(g.mean()) < 1e-12);
  CHECK(g.variance() == doctest::Approx(1.0 + 1.0 / (12.0 * 64 * 64)).epsilon(1e-9));

  const auto tp = convolution_power(two_point_law(), 2);
  REQUIRE(tp.weights.size() == 5);
  CHECK(tp.weights[0] == doctest::Approx(0.25));
  CHECK(tp.weights[1] == doctest::Approx(0.0));
  CHECK(tp.weights[2] == doctest::Approx(0.5));
}

TEST_CASE("level step laws are centred with variance b sigma^2") {
  for (auto preset : {DisplacementPreset::standard_gaussian, DisplacementPreset::uniform_centered,
                      DisplacementPreset::shifted_exponential}) {
    const DisplacementLaw law(preset);
    const double th = solve_theta_star(std::log(2.0), law);
    const Tilt tilt = Tilt::at(law, th, std::log(2.0), 16);
    const auto step = level_step_law(law, tilt, 4.0 / 64);
    CHECK(std::abs(step.mean()) < 1e-9);
    const double want = 16 * lambda_second(law, th) + step.h * step.h / 12;
    CHECK(step.variance() == doctest::Approx(want).epsilon(2e-3));
    CHECK(std::abs(step.mass() + step.lost_mass - 1.0) < 1e-12);
  }
}

TEST_CASE("DP small-K Gaussian orthant values") {
  const auto law = gaussian_law(1.0, 1.0 / 64);
  DpOptions opt;
  opt.anchor = 0;
  CHECK(dp_barrier_prob(law, flat_upper(1, 0), up_to(0), opt).value == doctest::Approx(0.5).epsilon(1e-6));
  const double oracle = orthant_oracle();
  CHECK(oracle == doctest::Approx(0.375).epsilon(1e-6));
  CHECK(std::abs(dp_barrier_prob(law, flat_upper(2, 0), up_to(0), opt).value - oracle) < 1e-4);
}

TEST_CASE("DP equals path enumeration for the two-point walk") {
  const auto law = two_point_law();
  CHECK(std::abs(dp_barrier_prob(law, flat_upper(3, 0), up_to(0)).value - 3.0 / 8) < 1e-12);

  const int K = 20;
  std::vector<double> upper(K + 1);
  for (int k = 0; k <= K; ++k) upper[k] = 2 + ((k * 7) % 5) - (k > 12 ? 3 : 0);
  BarrierSpec b;
  b.K = K;
  b.upper = [&](int k) { return upper[k]; };
  Terminal t;
  t.lo = -6;
  t.hi = 0;
  const double dp = dp_barrier_prob(law, b, t).value;
  CHECK(std::abs(dp - enumerate_two_point(K, upper, -6, 0)) < 1e-12);
}

TEST_CASE("DP conserves probability without barriers") {
  const auto law = gaussian_law(1.0, 1.0 / 16);
  BarrierSpec b;
  b.K = 200;
  const auto r = dp_barrier_prob(law, b, Terminal{});
  CHECK(std::abs(r.value + r.lost_mass - 1.0) < 1e-10);
  CHECK(r.killed_mass == 0.0);
  REQUIRE(r.survival.size() == 201);
  for (std::size_t k = 1; k < r.survival.size(); ++k) CHECK(r.survival[k] <= r.survival[k - 1] + 1e-14);
}

TEST_CASE("DP with a barrier splits mass into kept, killed and lost") {
  const auto law = gaussian_law(1.0, 1.0 / 32);
  BarrierSpec b = flat_upper(50, 1.0);
  b.lower = [](int) { return -4.0; };
  const auto r = dp_barrier_prob(law, b, Terminal{});
  CHECK(std::abs(r.value + r.killed_mass + r.lost_mass - 1.0) < 1e-10);
  CHECK(r.killed_mass > 0.5);
}

TEST_CASE("grid refinement stays within the reported bound") {
  BarrierSpec b = flat_upper(16, 0.5);
  const auto coarse = dp_barrier_prob_refined(standard_gaussian_builder(), 1.0 / 16, b, up_to(0));
  const auto fine = dp_barrier_prob_refined(standard_gaussian_builder(), 1.0 / 32, b, up_to(0));
  CHECK(std::abs(fine.value - coarse.value) <= coarse.discretization_bound);
  CHECK(fine.discretization_bound < coarse.discretization_bound);
}

TEST_CASE("DP respects the memory budget") {
  DpOptions opt;
  opt.max_cells = 1000;
  CHECK_THROWS_AS(dp_barrier_prob(gaussian_law(1.0, 1.0 / 64), flat_upper(100, 0), Terminal{}, opt), Error);
}

TEST_CASE("renewal function identities") {
  const auto L = renewal_L(standard_gaussian_builder());
  CHECK(L(0) == 1.0);
  CHECK(std::is_sorted(L.L.begin(), L.L.end()));
  CHECK(L.tail_bound <= 0.01);

  const auto law = gaussian_law(1.0, L.h);
  for (double x : {0.0, 1.0, 5.0}) {
    const double rhs = harmonic_rhs(L, law, x);
    CHECK(std::abs(rhs - L(x)) <= 1e-3 * L(x) + L.tail_bound * L(x) * 0.01);
  }
  // Slope L(x)/x stable on [20, 40].
  double lo = 1e300, hi = 0;
  for (double x = 20; x <= 40; x += 1) {
    const double s = L(x) / x;
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  CHECK(hi / lo - 1 < 0.02);
  // Linear growth bound with a single constant.
  double C = 0;
  for (double x = 0; x <= 50; x += 0.5) C = std::max(C, L(x) / (1 + x));
  CHECK(C < 2.0);
  CHECK(L.c0() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-2));
}

TEST_CASE("ballot probability at k = 1 and its constant at large k") {
  const auto r1 = ballot_asymptotic_check(standard_gaussian_builder(), 1.0 / 64, 0.0, {1});
  CHECK(r1.rows.at(0).lhs == doctest::Approx(0.5).epsilon(1e-6));
  const auto r = ballot_asymptotic_check(standard_gaussian_builder(), 1.0 / 32, 0.0, {256, 1024});
  CHECK(std::abs(row_ratio(r, 1) - 1) < 0.05);
  CHECK(std::abs(row_ratio(r, 1) - 1) <= std::abs(row_ratio(r, 0) - 1) + 1e-4);
}

TEST_CASE("envelope constant stays bounded") {
  const auto r = envelope_check(standard_gaussian_builder(), 1.0 / 16, 1.0, {64, 128, 256});
  for (const auto& row : r.rows) {
    CHECK(row.lhs > 0);
    CHECK(row.lhs <= 1);
    CHECK(row.ratio < 10);
  }
}

TEST_CASE("local limit check") {
  const auto pb = LevelProblem::gaussian_binary(100, 100);
  const double rn = std::sqrt(100.0) / std::log(100.0);
  const auto r = stone_llt_check(pb, IntervalFn{0, 1, false}, {-rn, 0.0, rn});
  for (const auto& row : r.rows) CHECK(std::abs(row.ratio - 1) <= 0.02);
  const double e0 = std::abs(r.rows[1].ratio - 1), e1 = std::abs(r.rows[2].ratio - 1);
  CHECK(std::max(e0, e1) <= 2 * std::min(e0, e1));
  const auto z = stone_llt_check(pb, IntervalFn{0, 1, true}, {0.0});
  CHECK(z.rows[0].lhs == 0.0);
}

TEST_CASE("local limit check for a non-Gaussian law") {
  const auto pb = LevelProblem::from(DisplacementLaw(DisplacementPreset::uniform_centered), std::log(2.0), 100, 100);
  const auto r = stone_llt_check(pb, IntervalFn{0, 1, false}, {0.0});
  CHECK(std::abs(r.rows[0].ratio - 1) <= 0.02);
}

TEST_CASE("local limit under the barrier") {
  const auto table = renewal_L(standard_gaussian_builder(), RenewalOptions{1.0 / 32, 20, 0.01, 1 << 16});
  const auto pb = LevelProblem::gaussian_binary(1024, 16);
  const auto v = stone_barrier_value(pb, IntervalFn{-1, 0, false}, 0.0, BarrierKind::F_tilde, table);
  CHECK(std::abs(v.lhs / v.refined - 1) < 0.05);
  const auto z = stone_barrier_value(pb, IntervalFn{-1, 0, true}, 0.0, BarrierKind::F_tilde, table);
  CHECK(z.lhs == 0.0);
}

TEST_CASE("bridge and excursion constants settle") {
  const auto br = bridge_barrier_check({64, 128, 256}, 16, 1.0, 0.0);
  REQUIRE(br.rows.size() == 3);
  const double d1 = br.rows[1].ratio - br.rows[0].ratio, d2 = br.rows[2].ratio - br.rows[1].ratio;
  CHECK(std::abs(d2) < std::abs(d1));
  CHECK(br.rows[2].ratio / br.rows[0].ratio < 1.25);

  const double alpha = 1.5 / std::sqrt(2 * std::log(2.0));
  const auto ex = excursion_check({64, 128, 256}, 16, alpha, 0.0, -1, 0);
  REQUIRE(ex.rows.size() == 3);
  const double e1 = ex.rows[1].ratio - ex.rows[0].ratio, e2 = ex.rows[2].ratio - ex.rows[1].ratio;
  CHECK(std::abs(e2) < std::abs(e1));
  CHECK(ex.rows[2].ratio / ex.rows[0].ratio < 1.25);
}

TEST_CASE("renewal ratio deviation decreases along b") {
  const auto table = renewal_L(standard_gaussian_builder());
  const auto r = renewal_ratio_check({16, 256, 4096}, table);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[2].lhs <= r.rows[1].lhs);
  CHECK(r.rows[1].lhs <= r.rows[0].lhs);
}
