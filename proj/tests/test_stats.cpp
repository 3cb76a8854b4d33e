#include <doctest.h>

#include <cmath>
#include <vector>

#include "grem/error.hpp"
#include "grem/rng.hpp"
#include "grem/stats.hpp"

using namespace grem;
using namespace grem::stats;

namespace {

const double kTheta = std::sqrt(2 * std::log(2.0));

RunResult replicate_with(std::vector<double> values, double w = 1.0) {
  RunResult r;
  r.W = w;
  std::uint32_t i = 0;
  for (double v : values) {
    Point p;
    p.value = v;
    p.address.path = {i++, 0};
    r.points.push_back(p);
  }
  r.max_recentred = -std::numeric_limits<double>::infinity();
  for (double v : values) r.max_recentred = std::max(r.max_recentred, v);
  return r;
}

// Composite Simpson on [a, a + 60] of e^{-theta y}(1 - e^{-phi(y)}) / sqrt(2 pi sigma2).
double intensity_oracle(const TestFunction& phi, double theta, double sigma2) {
  const int n = 600000;
  const double a = phi.a(), h = 60.0 / n;
  double s = 0;
  for (int i = 0; i <= n; ++i) {
    const double y = a + i * h;
    const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    s += w * std::exp(-theta * y) * -std::expm1(-phi(y));
  }
  return s * h / 3 / std::sqrt(2 * M_PI * sigma2);
}

double gumbel_sample(double u, double theta, double sigma2) {
  const double c = 1.0 / (theta * std::sqrt(2 * M_PI * sigma2));
  return -std::log(-std::log(u) / c) / theta;
}

}  // namespace

TEST_CASE("test function presets") {
  CHECK(TestFunction::parse("zero")(3.0) == 0.0);
  const auto s = TestFunction::parse("step:1:2.5");
  CHECK(s(0.999) == 0.0);
  CHECK(s(1.0) == 2.5);
  CHECK(TestFunction::parse("step:0:inf")(0.0) == kIndicatorCap);
  const auto e = TestFunction::parse("exp_bump:0:2");
  CHECK(e(0.5) == doctest::Approx(1.0));
  CHECK(e(-0.1) == 0.0);
  const auto c = TestFunction::parse("capped_linear:0:0.5");
  CHECK(c(1.0) == doctest::Approx(0.5));
  CHECK(c(9.0) == 1.0);
  CHECK(TestFunction::parse(c.id()).id() == c.id());
  CHECK_THROWS_AS(TestFunction::parse("bogus:1"), Error);
  CHECK(TestFunction::zero().support_lo() == std::numeric_limits<double>::infinity());
}

TEST_CASE("intensity integrals match quadrature") {
  for (const char* id : {"step:0", "step:1:inf", "exp_bump:0:1", "capped_linear:0:1", "exp_bump:-0.5:3"}) {
    const auto phi = TestFunction::parse(id);
    CHECK(intensity_integral(phi, kTheta, 1.0) == doctest::Approx(intensity_oracle(phi, kTheta, 1.0)).epsilon(1e-8));
  }
  CHECK(intensity_integral(TestFunction::zero(), kTheta, 1.0) == 0.0);
}

TEST_CASE("laplace limit closed forms") {
  const std::vector<double> one = {1.0};
  CHECK(laplace_limit(TestFunction::zero(), kTheta, 1.0, one) == 1.0);
  const double want = std::exp(-(1 - std::exp(-kIndicatorCap)) / (kTheta * std::sqrt(2 * M_PI)));
  CHECK(laplace_limit(TestFunction::parse("step:0:inf"), kTheta, 1.0, one) == doctest::Approx(want).epsilon(1e-14));
  const std::vector<double> w = {0.5, 1.5};
  const double I = intensity_integral(TestFunction::parse("step:0"), kTheta, 1.0);
  CHECK(laplace_limit(TestFunction::parse("step:0"), kTheta, 1.0, w) ==
        doctest::Approx(0.5 * (std::exp(-0.5 * I) + std::exp(-1.5 * I))));
}

TEST_CASE("prelimit closed form approaches the limit") {
  const auto phi = TestFunction::parse("step:0");
  const auto two = OffspringLaw::deterministic(2);
  const double lim = laplace_limit(phi, kTheta, 1.0, {});
  CHECK(prelimit_laplace(TestFunction::zero(), kTheta, 1.0, two, 4, 1, 1) == 1.0);
  CHECK(std::abs(prelimit_laplace(phi, kTheta, 1.0, two, 16, 1, 1) - lim) < 1e-4);
  double prev = 1.0;
  for (int b : {2, 4, 8, 16}) {
    const double gap = std::abs(prelimit_laplace(phi, kTheta, 1.0, two, b, 1, 1) - lim);
    CHECK(gap <= prev);
    prev = gap;
  }
  const double I = intensity_integral(phi, kTheta, 1.0);
  CHECK(prelimit_laplace(phi, kTheta, 1.0, two, 3, 1, 1) == doctest::Approx(std::pow(1 - I / 8, 8)).epsilon(1e-14));
  const std::vector<double> z = {1.0};
  CHECK_THROWS_AS(prelimit_laplace(2.0, std::log(2.0), 1, z), Error);
}

TEST_CASE("empirical Laplace functional") {
  std::vector<RunResult> batch = {replicate_with({0.5, 2.0}), replicate_with({}), replicate_with({-1.0})};
  const auto zero = laplace_empirical(batch, TestFunction::zero(), -3);
  CHECK(zero.value == 1.0);
  CHECK(zero.se == 0.0);
  const auto step = laplace_empirical(batch, TestFunction::parse("step:0:inf"), -3);
  // Estimates P(max < 0): one of three replicates has a point above 0.
  CHECK(step.value == doctest::Approx(2.0 / 3 + std::exp(-2 * kIndicatorCap) / 3));
  CHECK(step.se > 0);
  CHECK_THROWS_AS(laplace_empirical(batch, TestFunction::parse("step:-4"), -3), Error);
}

TEST_CASE("counts and the factorial gap") {
  std::vector<RunResult> batch = {replicate_with({0.5, 2.0}), replicate_with({}), replicate_with({-1.0, 0.1, 3})};
  const auto c = counts_above(batch, 0.0);
  CHECK(c == std::vector<double>{2, 0, 2});
  CHECK(counts_above(batch, 50.0) == std::vector<double>{0, 0, 0});
  CHECK(count_limit(0.0, kTheta, 1.0) == doctest::Approx(1.0 / (kTheta * std::sqrt(2 * M_PI))));
  const auto curve = count_curve(batch, {0.0, 1.0}, kTheta, 1.0, -3);
  CHECK(curve[1].mean == doctest::Approx(2.0 / 3));

  // Poisson counts have E N(N-1) = (E N)^2.
  std::vector<RunResult> pois;
  rng::Stream st(4, rng::Purpose::weights);
  const double lam = 1.3;
  for (int r = 0; r < 20000; ++r) {
    double u = st.uniform(), p = std::exp(-lam), cdf = p;
    int k = 0;
    while (u > cdf) {
      p *= lam / ++k;
      cdf += p;
    }
    pois.push_back(replicate_with(std::vector<double>(k, 1.0)));
  }
  const auto gap = factorial_gap(pois, 0.0);
  CHECK(gap.se > 0);
  CHECK(std::abs(gap.value) <= 3 * gap.se);
}

TEST_CASE("KS statistic accepts samples drawn from the mixture") {
  const int R = 5000;
  std::vector<double> xs;
  rng::Stream st(99, rng::Purpose::weights);
  for (int i = 0; i < R; ++i) xs.push_back(gumbel_sample(st.uniform(), kTheta, 1.0));
  const std::vector<double> one = {1.0};
  const auto ks = ks_statistic(xs, [&](double x) { return mixture_cdf(x, kTheta, 1.0, one); });
  CHECK(ks.samples == R);
  CHECK(ks.critical_1pct == doctest::Approx(1.63 / std::sqrt(R)));
  CHECK(ks.statistic < ks.critical_1pct);
  // A shifted sample is rejected.
  for (double& x : xs) x += 0.3;
  CHECK(ks_statistic(xs, [&](double x) { return mixture_cdf(x, kTheta, 1.0, one); }).statistic > 1.63 / std::sqrt(R));
}

TEST_CASE("overlap statistic") {
  std::vector<RunResult> single = {replicate_with({1.0}), replicate_with({0.2})};
  for (auto& r : single) r.overlap_histogram = overlap_histogram(r.points, 2);
  const auto o = overlap_vanishing(single, 0.0);
  CHECK(o.pairs.value == 0.0);
  CHECK(o.fraction == 0.0);

  RunResult shared;
  for (std::uint32_t j : {0u, 1u}) {
    Point p;
    p.value = 1.0;
    p.address.path = {3, j};
    shared.points.push_back(p);
  }
  Point far;
  far.value = 1.0;
  far.address.path = {5, 0};
  shared.points.push_back(far);
  std::vector<RunResult> b = {shared};
  const auto s = overlap_vanishing(b, 0.0);
  CHECK(s.pairs.value == 1.0);
  CHECK(s.fraction == doctest::Approx(1.0 / 3));
}

TEST_CASE("violation rate") {
  std::vector<RunResult> b(4);
  b[1].violated_R = true;
  const auto v = barrier_violation_rate(b);
  CHECK(v.value == 0.25);
  CHECK(v.se > 0);
}
