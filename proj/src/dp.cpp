#include <algorithm>
#include <cmath>

#include "convolver.hpp"
#include "grem/error.hpp"
#include "grem/rwlab.hpp"

namespace grem::rwlab {

namespace {

constexpr double kLatticeTol = 1e-9;

// Fraction of the cell [c - h/2, c + h/2] inside [lo, hi], and the midpoint of the overlap.
std::pair<double, double> cell_overlap(double c, double h, double lo, double hi) {
  const double a = std::max(c - 0.5 * h, lo);
  const double b = std::min(c + 0.5 * h, hi);
  if (b <= a) return {0.0, c};
  return {(b - a) / h, 0.5 * (a + b)};
}

}  // namespace

DpResult dp_barrier_prob(const GridLaw& law, const BarrierSpec& barrier, const Terminal& terminal,
                         const DpOptions& opt) {
  const int K = barrier.K;
  if (K < 0) fail(ErrorKind::validation, "barrier horizon K must be >= 0");
  const double h = law.h;
  const double off = law.offset;
  // Work in the frame moving with `offset`: position = rel + k * offset.
  const double rel_drift = law.mean() - off;
  const double sd = std::sqrt(std::max(law.variance(), h * h));
  const double spread = opt.range_sigmas * sd * std::sqrt(std::max(K, 1)) + (std::abs(law.j_min) + law.j_max() + 2) * h;
  double lo = opt.start + std::min(0.0, K * rel_drift) - spread;
  double hi = opt.start + std::max(0.0, K * rel_drift) + spread;
  if (barrier.upper) {
    double top = -kInf;
    for (int k = 1; k <= K; ++k) top = std::max(top, barrier.upper(k) - k * off);
    hi = std::min(hi, std::max(top, opt.start) + 2 * h);
  }
  if (barrier.lower) {
    double bottom = kInf;
    for (int k = 1; k <= K; ++k) bottom = std::min(bottom, barrier.lower(k) - k * off);
    lo = std::max(lo, std::min(bottom, opt.start) - 2 * h);
  }
  if (!std::isnan(opt.range_lo)) lo = opt.range_lo;
  if (!std::isnan(opt.range_hi)) hi = opt.range_hi;

  double base;
  if (!law.lattice && !std::isnan(opt.anchor)) {
    base = opt.anchor + 0.5 * h + h * std::floor((lo - opt.anchor - 0.5 * h) / h);
  } else {
    base = opt.start + h * std::floor((lo - opt.start) / h);
  }
  const double cells_d = std::ceil((hi - base) / h) + 1;
  if (!(cells_d <= static_cast<double>(opt.max_cells)))
    fail(ErrorKind::budget, "DP grid of " + std::to_string(cells_d) + " cells exceeds the memory budget");
  const std::size_t N = static_cast<std::size_t>(cells_d);

  DpResult res;
  res.cells = N;
  std::vector<double> state(N, 0.0), out;
  {
    const double f = (opt.start - base) / h;
    const double i0 = std::floor(f);
    const double frac = f - i0;
    const auto idx = static_cast<std::size_t>(i0);
    if (frac < kLatticeTol) {
      state[idx] = 1;
    } else if (frac > 1 - kLatticeTol) {
      state[idx + 1] = 1;
    } else {
      if (law.lattice) fail(ErrorKind::validation, "start point is off the lattice");
      state[idx] = 1 - frac;
      state[idx + 1] = frac;
    }
  }
  res.survival.push_back(1.0);

  detail::Convolver conv(law.weights, N);
  const long jmin = law.j_min;
  const long n_cells = static_cast<long>(N);
  for (int k = 1; k <= K; ++k) {
    conv.apply(state, out);
    res.lost_mass += law.lost_mass * res.survival.back();
    const double shift = base + k * off;
    const double u = barrier.upper ? barrier.upper(k) : kInf;
    const double l = barrier.lower ? barrier.lower(k) : -kInf;
    for (long t = 0; t < static_cast<long>(out.size()); ++t) {
      const long i = t + jmin;
      if (i >= 0 && i < n_cells) {
        state[static_cast<std::size_t>(i)] = out[static_cast<std::size_t>(t)];
        continue;
      }
      const double x = shift + static_cast<double>(i) * h;
      const double m = out[static_cast<std::size_t>(t)];
      if (x > u || x < l) {
        res.killed_mass += m;
      } else {
        res.lost_mass += m;
      }
    }
    if (barrier.upper) {
      const double s = (u - shift) / h;
      long first_dead;
      if (law.lattice) {
        first_dead = static_cast<long>(std::floor(s + kLatticeTol)) + 1;
      } else {
        const long part = static_cast<long>(std::floor(s + 0.5));
        first_dead = part + 1;
        if (part >= 0 && part < n_cells) {
          const double keep = std::clamp(s - (static_cast<double>(part) - 0.5), 0.0, 1.0);
          double& cell = state[static_cast<std::size_t>(part)];
          res.killed_mass += (1 - keep) * cell;
          cell *= keep;
        }
      }
      for (long i = std::max(0L, first_dead); i < n_cells; ++i) {
        res.killed_mass += state[static_cast<std::size_t>(i)];
        state[static_cast<std::size_t>(i)] = 0;
      }
    }
    if (barrier.lower) {
      const double s = (l - shift) / h;
      long last_dead;
      if (law.lattice) {
        last_dead = static_cast<long>(std::ceil(s - kLatticeTol)) - 1;
      } else {
        last_dead = static_cast<long>(std::floor(s - 0.5));
        const long part = last_dead + 1;
        if (part >= 0 && part < n_cells) {
          const double keep = std::clamp(static_cast<double>(part) + 0.5 - s, 0.0, 1.0);
          double& cell = state[static_cast<std::size_t>(part)];
          res.killed_mass += (1 - keep) * cell;
          cell *= keep;
        }
      }
      for (long i = std::min(last_dead, n_cells - 1); i >= 0; --i) {
        res.killed_mass += state[static_cast<std::size_t>(i)];
        state[static_cast<std::size_t>(i)] = 0;
      }
    }
    double alive = 0;
    for (double m : state) alive += m;
    res.survival.push_back(alive);
  }

  const double shift = base + K * off;
  double value = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const double m = state[i];
    if (m == 0) continue;
    const double x = shift + static_cast<double>(i) * h;
    double frac, at;
    if (law.lattice) {
      frac = (x >= terminal.lo - kLatticeTol && x <= terminal.hi + kLatticeTol) ? 1.0 : 0.0;
      at = x;
    } else {
      std::tie(frac, at) = cell_overlap(x, h, terminal.lo, terminal.hi);
    }
    if (frac == 0) continue;
    value += m * frac * (terminal.weight ? terminal.weight(at) : 1.0);
  }
  res.value = value;
  return res;
}

DpResult dp_barrier_prob_refined(const LawBuilder& builder, double h, const BarrierSpec& barrier,
                                 const Terminal& terminal, const DpOptions& options) {
  DpResult fine = dp_barrier_prob(builder(h), barrier, terminal, options);
  const DpResult coarse = dp_barrier_prob(builder(2 * h), barrier, terminal, options);
  fine.discretization_bound = std::abs(fine.value - coarse.value);
  return fine;
}

}  // namespace grem::rwlab
