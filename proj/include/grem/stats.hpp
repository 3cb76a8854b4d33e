#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "grem/calibration.hpp"
#include "grem/manytoone.hpp"
#include "grem/model.hpp"
#include "grem/simulate.hpp"

namespace grem::stats {

enum class PhiKind { zero, step, exp_bump, capped_linear };

inline constexpr double kIndicatorCap = 50.0;

// Non-negative test function with support bounded on the left.
class TestFunction {
 public:
  static TestFunction zero();
  // height * 1{x >= a}; height = inf is realized as kIndicatorCap.
  static TestFunction step(double a, double height = 1.0);
  // rate (x - a) e^{1 - rate (x - a)} on x >= a, peak 1 at a + 1/rate.
  static TestFunction exp_bump(double a, double rate);
  // min(s (x - a)_+, 1)
  static TestFunction capped_linear(double a, double s);
  // zero | step:a[:height|inf] | exp_bump:a:rate | capped_linear:a:s
  static TestFunction parse(const std::string& text);

  double operator()(double x) const;
  PhiKind kind() const { return kind_; }
  double a() const { return a_; }
  double param() const { return p_; }
  // Infimum of the support (+inf for zero).
  double support_lo() const;
  std::string id() const;

 private:
  TestFunction(PhiKind k, double a, double p) : kind_(k), a_(a), p_(p) {}
  PhiKind kind_;
  double a_;
  double p_;
};

using Batch = std::span<const RunResult>;

Estimate laplace_empirical(Batch batch, const TestFunction& phi, double window);

// (1 / sqrt(2 pi sigma2)) int e^{-theta y} (1 - e^{-phi(y)}) dy
double intensity_integral(const TestFunction& phi, double theta, double sigma2);
double laplace_limit(const TestFunction& phi, double theta, double sigma2, std::span<const double> w_samples);
std::vector<double> w_samples(Batch batch);

// Mean of (1 - m^{-b} I(phi))^{Z_b}; closed form when the offspring count is fixed.
double prelimit_laplace(const TestFunction& phi, double theta, double sigma2, const OffspringLaw& offspring, int b,
                        std::uint64_t samples, std::uint64_t seed);
double prelimit_laplace(double intensity, double log_m, int b, std::span<const double> z_samples);

struct CountRow {
  double a = 0;
  double mean = 0;
  double se = 0;
  double limit = 0;
};

// Number of points >= a per replicate.
std::vector<double> counts_above(Batch batch, double a);
std::vector<CountRow> count_curve(Batch batch, const std::vector<double>& a_grid, double theta, double sigma2,
                                  double window);
// Expected count above a in the limit: e^{-theta a} / (theta sqrt(2 pi sigma2)).
double count_limit(double a, double theta, double sigma2);

double mixture_cdf(double x, double theta, double sigma2, std::span<const double> w_samples);

struct KsResult {
  double statistic = 0;
  double critical_1pct = 0;
  std::size_t samples = 0;
};

// sup_x |F_R(x) - F(x)| over x >= floor; values below floor count as -inf.
KsResult ks_statistic(std::vector<double> values, const std::function<double(double)>& cdf,
                      double floor = -std::numeric_limits<double>::infinity());
KsResult max_gumbel_test(Batch batch, double theta, double sigma2, double window);

struct OverlapStat {
  Estimate pairs;   // mean number of pairs above a with |u ^ v| >= 1
  double fraction = 0;  // those pairs over all pairs above a
  double fraction_se = 0;
};

OverlapStat overlap_vanishing(Batch batch, double a);

Estimate barrier_violation_rate(Batch batch);

// E N(N-1) - (E N)^2 for N = count above a, with a delta-method SE.
Estimate factorial_gap(Batch batch, double a);

struct LaplaceRow {
  std::string phi_id;
  Estimate empirical;
  double limit = 0;
  double prelimit = 0;
};

struct StatsReport {
  int n = 0;
  std::size_t replicates = 0;  // an empty batch leaves every table empty
  std::vector<LaplaceRow> laplace;
  std::vector<CountRow> counts;
  KsResult ks;
  OverlapStat overlap;
  Estimate violation;
  Estimate factorial;
};

struct AnalyzeOptions {
  std::vector<std::string> phis = {"step:0", "step:1:inf", "exp_bump:0:1", "capped_linear:0:1"};
  std::vector<double> a_grid = {0, 0.5, 1, 1.5, 2};
  double overlap_a = 0;
  std::uint64_t prelimit_samples = 20000;
  std::uint64_t seed = 1;
};

StatsReport analyze(Batch batch, const ModelSpec& spec, const CalibratedParams& params, double window,
                    const AnalyzeOptions& options = {});

}  // namespace grem::stats
