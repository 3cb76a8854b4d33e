#include <algorithm>
#include <cmath>
#include <memory>

#include "convolver.hpp"
#include "grem/error.hpp"
#include "grem/rwlab.hpp"

namespace grem::rwlab {

double RenewalTable::operator()(double y) const {
  if (y < 0) return 0.0;
  if (L.empty()) return 1.0;
  const double s = y / h;
  const auto i = static_cast<std::size_t>(std::floor(s));
  if (i + 1 >= L.size()) {
    // Linear extrapolation from the last two edges.
    const std::size_t n = L.size();
    const double slope = n > 1 ? (L[n - 1] - L[n - 2]) / h : 0.0;
    return L[n - 1] + slope * (y - x[n - 1]);
  }
  const double f = s - static_cast<double>(i);
  return (1 - f) * L[i] + f * L[i + 1];
}

RenewalTable renewal_L(const GridLaw& input, const RenewalOptions& opt) {
  if (input.lattice) fail(ErrorKind::validation, "renewal_L needs a density grid law");
  const GridLaw law = absorb_offset(input);
  const double h = law.h;
  const double sd = std::sqrt(law.variance());
  const long W = static_cast<long>(law.weights.size());
  const long jmin = law.j_min;
  const long J = std::max(-jmin, 1L);  // deepest landing below 0, in cells

  // Walk killed at its first visit to (-inf, 0]. Cell i >= 0 holds [i h, (i+1) h].
  // The grid grows with the horizon: 8 sd sqrt(2 k_cap) above the largest x of interest.
  int k_cap = 64;
  auto grid_cells = [&](int cap) {
    const double top = 8.0 * sd * std::sqrt(2.0 * cap) + opt.x_max;
    return static_cast<std::size_t>(std::ceil(top / h)) + static_cast<std::size_t>(W);
  };
  std::size_t N = grid_cells(k_cap);
  std::vector<double> state(N, 0.0), out;
  std::vector<double> ladder(static_cast<std::size_t>(J) + 1, 0.0);  // ladder[c]: height in [c h, (c+1) h]
  double lost = 0;

  // First step from the edge 0: centres j h split evenly onto the cells either side.
  for (long t = 0; t < W; ++t) {
    const long j = t + jmin;
    const double m = 0.5 * law.weights[static_cast<std::size_t>(t)];
    for (long cell : {j - 1, j}) {
      if (cell < 0) {
        ladder[static_cast<std::size_t>(-cell - 1)] += m;
      } else if (cell < static_cast<long>(N)) {
        state[static_cast<std::size_t>(cell)] += m;
      } else {
        lost += m;
      }
    }
  }
  lost += law.lost_mass;

  auto conv = std::make_unique<detail::Convolver>(law.weights, N);
  double alive = 0;
  for (double m : state) alive += m;
  int k = 1;
  while (alive > opt.eps_tail && k < opt.K_budget) {
    if (k >= k_cap) {
      k_cap *= 2;
      N = grid_cells(k_cap);
      state.resize(N, 0.0);
      conv = std::make_unique<detail::Convolver>(law.weights, N);
    }
    conv->apply(state, out);
    lost += law.lost_mass * alive;
    std::fill(state.begin(), state.end(), 0.0);
    for (long t = 0; t < static_cast<long>(out.size()); ++t) {
      const long cell = t + jmin;
      const double m = out[static_cast<std::size_t>(t)];
      if (cell < 0) {
        ladder[static_cast<std::size_t>(-cell - 1)] += m;
      } else if (cell < static_cast<long>(N)) {
        state[static_cast<std::size_t>(cell)] = m;
      } else {
        lost += m;
      }
    }
    alive = 0;
    for (double m : state) alive += m;
    ++k;
  }
  if (alive > opt.eps_tail)
    fail(ErrorKind::convergence, "renewal tail bound " + std::to_string(alive) + " not reached within " +
                                     std::to_string(opt.K_budget) + " steps");

  // Complete the unresolved mass with the stationary-excess law (1 - G(y)) / E H.
  double g_mass = 0;
  for (double g : ladder) g_mass += g;
  std::vector<double> excess(ladder.size(), 0.0);
  double tail = 1.0, e_sum = 0;
  for (std::size_t c = 0; c < ladder.size(); ++c) {
    const double g = ladder[c] / g_mass;
    excess[c] = std::max(0.0, tail - 0.5 * g);
    tail -= g;
    e_sum += excess[c];
  }
  const double missing = 1.0 - g_mass;
  for (std::size_t c = 0; c < ladder.size(); ++c) ladder[c] += missing * excess[c] / e_sum;

  // Renewal equation U(y) = 1 + int U(y - s) dG(s) on edges y = m h, trapezoid within cells.
  const std::size_t M = static_cast<std::size_t>(std::ceil(opt.x_max / h)) + 1;
  RenewalTable table;
  table.h = h;
  table.K_max = k;
  table.tail_bound = alive;
  table.lost_mass = lost;
  table.x.resize(M + 1);
  table.L.resize(M + 1);
  table.L[0] = 1.0;
  table.x[0] = 0.0;
  const double g0 = ladder[0];
  for (std::size_t m = 1; m <= M; ++m) {
    double acc = 1.0 + 0.5 * g0 * table.L[m - 1];
    const std::size_t cmax = std::min(m - 1, ladder.size() - 1);
    for (std::size_t c = 1; c <= cmax; ++c) acc += 0.5 * ladder[c] * (table.L[m - c - 1] + table.L[m - c]);
    table.L[m] = acc / (1.0 - 0.5 * g0);
    table.x[m] = static_cast<double>(m) * h;
  }

  double mean = 0;
  for (std::size_t c = 0; c < ladder.size(); ++c) mean += ladder[c] * (static_cast<double>(c) + 0.5) * h;
  table.ladder_mean = mean;
  return table;
}

RenewalTable renewal_L(const LawBuilder& builder, const RenewalOptions& options) {
  return renewal_L(builder(options.h), options);
}

double harmonic_rhs(const RenewalTable& table, const GridLaw& input, double x) {
  const GridLaw law = absorb_offset(input);
  const double h = law.h;
  double sum = 0;
  for (std::size_t t = 0; t < law.weights.size(); ++t) {
    const double c = x + (law.j_min + static_cast<double>(t)) * h;
    const double a = std::max(c - 0.5 * h, 0.0);
    const double b = c + 0.5 * h;
    if (b <= a) continue;
    const double frac = (b - a) / h;
    sum += law.weights[t] * frac * table(0.5 * (a + b));
  }
  return sum;
}

}  // namespace grem::rwlab
