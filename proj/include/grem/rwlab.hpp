#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "grem/calibration.hpp"
#include "grem/manytoone.hpp"
#include "grem/model.hpp"

namespace grem::rwlab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Step law on the lattice offset + j h, j = j_min .. j_min + weights.size() - 1.
// Density laws carry the mass of the cell [(j - 1/2) h, (j + 1/2) h]; lattice laws
// carry point masses.
struct GridLaw {
  double h = 1;
  int j_min = 0;
  std::vector<double> weights;
  double offset = 0;
  double lost_mass = 0;
  bool lattice = false;

  int j_max() const { return j_min + static_cast<int>(weights.size()) - 1; }
  double mass() const;
  double mean() const;
  double variance() const;
};

using LawBuilder = std::function<GridLaw(double h)>;

GridLaw gaussian_law(double variance, double h, double trunc_sigmas = 12.0);
GridLaw cdf_law(const std::function<double(double)>& cdf, double lo, double hi, double h);
GridLaw two_point_law();
// b-fold convolution, dropping tail cells below eps (their mass goes to lost_mass).
GridLaw convolution_power(const GridLaw& law, int b, double eps = 1e-300);
// Law of T-bar_1 (tilted level step minus b v).
GridLaw level_step_law(const DisplacementLaw& law, const Tilt& tilt, double h);
// Same law with every position divided by `scale` (grid step h / scale).
GridLaw rescaled(GridLaw law, double scale);
// Moves a fractional offset into the weights by linear interpolation so offset = 0.
GridLaw absorb_offset(const GridLaw& law);

// Standard Gaussian walk builder, the default carrier for B = T-bar / sqrt(b).
LawBuilder standard_gaussian_builder();
// B = T-bar / sqrt(b) for a calibrated law; grid step h in B units.
LawBuilder standardized_level_builder(const DisplacementLaw& law, const Tilt& tilt);

struct BarrierSpec {
  int K = 0;
  std::function<double(int)> upper;  // stay <= upper(k) for k = 1..K; empty for none
  std::function<double(int)> lower;  // stay >= lower(k) for k = 1..K; empty for none
};

struct Terminal {
  double lo = -kInf;
  double hi = kInf;
  std::function<double(double)> weight;  // smooth factor, 1 when empty
};

struct DpOptions {
  double start = 0;
  // Value placed on a cell edge (density laws). NaN puts `start` on a cell centre.
  double anchor = std::numeric_limits<double>::quiet_NaN();
  double range_sigmas = 12.0;
  double range_lo = std::numeric_limits<double>::quiet_NaN();
  double range_hi = std::numeric_limits<double>::quiet_NaN();
  std::size_t max_cells = std::size_t{1} << 24;
};

struct DpResult {
  double value = 0;
  double lost_mass = 0;    // mass carried out of the grid range
  double killed_mass = 0;  // mass removed by the barrier
  double discretization_bound = std::numeric_limits<double>::quiet_NaN();
  std::size_t cells = 0;
  std::vector<double> survival;  // survival[k] = surviving mass after k steps
};

DpResult dp_barrier_prob(const GridLaw& law, const BarrierSpec& barrier, const Terminal& terminal,
                         const DpOptions& options = {});
// Runs at h and 2h; the difference is reported as the discretization bound.
DpResult dp_barrier_prob_refined(const LawBuilder& builder, double h, const BarrierSpec& barrier,
                                 const Terminal& terminal, const DpOptions& options = {});

struct RenewalTable {
  double h = 0;
  std::vector<double> x;  // edges 0, h, 2h, ...
  std::vector<double> L;
  int K_max = 0;
  double tail_bound = 0;  // mass whose ladder height is taken from the stationary-excess law
  double ladder_mean = 0;
  double lost_mass = 0;

  double operator()(double y) const;
  double c0() const { return 1.0 / ladder_mean; }
};

struct RenewalOptions {
  double h = 1.0 / 32;
  double x_max = 50;
  double eps_tail = 0.01;
  int K_budget = 1 << 16;
};

RenewalTable renewal_L(const GridLaw& law, const RenewalOptions& options = {});
RenewalTable renewal_L(const LawBuilder& builder, const RenewalOptions& options = {});

// E[L(x + B(1)); x + B(1) >= 0] evaluated on the grid law.
double harmonic_rhs(const RenewalTable& table, const GridLaw& law, double x);

struct CheckRow {
  std::string params;
  double lhs = 0;
  double rhs = 0;
  double ratio = 0;
  double error_bound = 0;
};

struct CheckReport {
  std::string check;
  std::vector<CheckRow> rows;
};

inline constexpr double kBallotC1 = 0.56418958354775628695;  // 1/sqrt(pi)

// P(min_{j<=k} B_j >= -y) against C1 L(y) / sqrt(k).
CheckReport ballot_asymptotic_check(const LawBuilder& builder, double h, double y, const std::vector<int>& k_grid);
// P(B_j >= -(j^{0.4} + y), j <= K) * sqrt(K) / (1 + y).
CheckReport envelope_check(const LawBuilder& builder, double h, double y, const std::vector<int>& k_grid);

struct LevelProblem {
  DisplacementLaw law;
  double theta = 0;
  double v = 0;
  double sigma2 = 1;
  double log_m = 0;
  int n = 0;  // enters a_n through log n
  int k_n = 1;
  int b_n = 1;
  double c_n = 1;

  double a_n() const;
  static LevelProblem gaussian_binary(int k_n, int b_n);
  static LevelProblem from(const DisplacementLaw& law, double log_m, int k_n, int b_n);
};

struct IntervalFn {
  double a = 0;
  double b = 1;
  bool zero = false;
};

// E f(T-bar_{k_n} - a_n + x) e^{-theta T-bar_{k_n}} against the local-limit asymptotic.
CheckReport stone_llt_check(const LevelProblem& pb, const IntervalFn& f, const std::vector<double>& x_grid,
                            double h = 0);

struct StoneBarrierValue {
  double lhs = 0;      // E h(T-bar - a_n + x) 1{T-bar_k <= barrier(k) - x}, h(z) = e^{-theta z} f(z)
  double limit = 0;    // k^{-3/2} (2 pi b)^{-1/2} int h L(-x / sqrt b)
  double refined = 0;  // same with the terminal factor int h(y) L(-y / sqrt b) dy
  double error_bound = 0;
};

StoneBarrierValue stone_barrier_value(const LevelProblem& pb, const IntervalFn& f, double x, BarrierKind kind,
                                      const RenewalTable& table, double h = 0);
CheckReport stone_barrier_check(const LevelProblem& pb, const IntervalFn& f, const std::vector<double>& x_grid,
                                BarrierKind kind = BarrierKind::F_bar, double h = 0);

// Barrier bounds on the standard Gaussian walk.
CheckReport bridge_barrier_check(const std::vector<int>& k_grid, int b, double a, double x, double h = 1.0 / 32);
CheckReport excursion_check(const std::vector<int>& k_grid, int b, double alpha, double x, double lo, double hi,
                            double h = 0);
CheckReport renewal_ratio_check(const std::vector<int>& b_grid, const RenewalTable& table);

}  // namespace grem::rwlab
