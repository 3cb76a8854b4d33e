#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "grem/calibration.hpp"
#include "grem/model.hpp"
#include "grem/rng.hpp"

namespace grem {

// Exponential tilt of the fine step at theta. The level speed is
// v = (log m + Lambda(theta)) / theta; at theta = theta* this is the calibrated v.
struct Tilt {
  double theta = 0;
  double v = 0;
  int b = 1;
  double log_m = 0;

  static Tilt at(const DisplacementLaw& law, double theta, double log_m, int b);
  static Tilt calibrated(const CalibratedParams& p);
};

// Quantile of the fine-step law tilted by e^{theta y - Lambda(theta)}.
double tilted_quantile(const DisplacementLaw& law, double theta, double u);

// T-bar_1 = T_1 - b v for one level.
double sample_tilted_step(const DisplacementLaw& law, const Tilt& tilt, rng::Stream& stream);

// g receives the level positions (S_{u_1}, ..., S_{u_j}).
using PathFunctional = std::function<double(std::span<const double>)>;

struct Estimate {
  double value = 0;
  double se = 0;
};

Estimate expected_count_mc(const DisplacementLaw& law, const Tilt& tilt, const PathFunctional& g, int levels,
                           std::uint64_t samples, std::uint64_t seed);

// E[e^{-theta T-bar_j} g(T-bar_i + i b v)] summed exactly over the finite support (lattice laws).
double tilted_exact_sum(const DisplacementLaw& law, const Tilt& tilt, const PathFunctional& g, int levels);

inline constexpr std::uint64_t kBruteForceCap = 1'000'000;

// E sum_{|u|=j} g(S_{u_1..u_j}) by enumerating offspring patterns and displacements.
double brute_force_count(const OffspringLaw& offspring, const DisplacementLaw& law, int b, const PathFunctional& g,
                         int levels, std::uint64_t cap = kBruteForceCap);

// Functional presets for the CLI: const | indicator:a | exp:theta, relative to `shift`.
PathFunctional parse_functional(const std::string& text, double shift);

}  // namespace grem
