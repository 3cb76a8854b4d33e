#include <algorithm>
#include <cmath>

#include "convolver.hpp"
#include "grem/calibration.hpp"
#include "grem/error.hpp"
#include "grem/normal.hpp"
#include "grem/rwlab.hpp"

namespace grem::rwlab {

namespace {

constexpr double kTrim = 1e-30;

// Drops leading and trailing cells below kTrim * max into lost_mass.
void trim(GridLaw& law) {
  auto& w = law.weights;
  if (w.empty()) return;
  const double cut = kTrim * *std::max_element(w.begin(), w.end());
  std::size_t lo = 0, hi = w.size();
  while (lo + 1 < hi && w[lo] <= cut) law.lost_mass += w[lo++];
  while (hi > lo + 1 && w[hi - 1] <= cut) law.lost_mass += w[--hi];
  law.j_min += static_cast<int>(lo);
  w = std::vector<double>(w.begin() + static_cast<std::ptrdiff_t>(lo), w.begin() + static_cast<std::ptrdiff_t>(hi));
}

// Shifts whole cells out of the offset so |offset| <= h/2.
void normalize_offset(GridLaw& law) {
  const double s = std::round(law.offset / law.h);
  law.j_min += static_cast<int>(s);
  law.offset -= s * law.h;
}

}  // namespace

double GridLaw::mass() const {
  double s = 0;
  for (double w : weights) s += w;
  return s;
}

double GridLaw::mean() const {
  double s = 0, m = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    s += weights[i];
    m += weights[i] * (j_min + static_cast<double>(i));
  }
  return offset + h * m / s;
}

double GridLaw::variance() const {
  double s = 0, m = 0, q = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double j = j_min + static_cast<double>(i);
    s += weights[i];
    m += weights[i] * j;
    q += weights[i] * j * j;
  }
  m /= s;
  return h * h * (q / s - m * m);
}

GridLaw gaussian_law(double variance, double h, double trunc_sigmas) {
  if (!(variance > 0) || !(h > 0)) fail(ErrorKind::validation, "gaussian_law needs variance > 0 and h > 0");
  const double sd = std::sqrt(variance);
  const int J = static_cast<int>(std::ceil(trunc_sigmas * sd / h));
  GridLaw law;
  law.h = h;
  law.j_min = -J;
  law.weights.resize(2 * static_cast<std::size_t>(J) + 1);
  for (int j = -J; j <= J; ++j) {
    const double lo = (std::abs(j) - 0.5) * h / sd;
    const double hi = (std::abs(j) + 0.5) * h / sd;
    law.weights[static_cast<std::size_t>(j + J)] = j == 0 ? 1.0 - 2.0 * norm_sf(hi) : norm_sf(lo) - norm_sf(hi);
  }
  law.lost_mass = 2.0 * norm_sf((J + 0.5) * h / sd);
  return law;
}

GridLaw cdf_law(const std::function<double(double)>& cdf, double lo, double hi, double h) {
  if (!(h > 0) || !(hi > lo)) fail(ErrorKind::validation, "cdf_law needs h > 0 and hi > lo");
  const int j0 = static_cast<int>(std::floor(lo / h + 0.5));
  const int j1 = static_cast<int>(std::ceil(hi / h - 0.5));
  GridLaw law;
  law.h = h;
  law.j_min = j0;
  double prev = cdf((j0 - 0.5) * h);
  law.lost_mass = prev;
  for (int j = j0; j <= j1; ++j) {
    const double next = cdf((j + 0.5) * h);
    law.weights.push_back(std::max(0.0, next - prev));
    prev = next;
  }
  law.lost_mass += 1.0 - prev;
  return law;
}

GridLaw two_point_law() {
  GridLaw law;
  law.h = 1;
  law.j_min = -1;
  law.weights = {0.5, 0.0, 0.5};
  law.lattice = true;
  return law;
}

GridLaw convolution_power(const GridLaw& law, int b, double eps) {
  if (b < 1) fail(ErrorKind::validation, "convolution power needs b >= 1");
  GridLaw out;
  out.h = law.h;
  out.lattice = law.lattice;
  out.j_min = law.j_min * b;
  out.offset = law.offset * b;
  out.weights = detail::fft_power(law.weights, b);
  out.lost_mass = 1.0 - std::pow(1.0 - law.lost_mass, b);
  trim(out);
  if (eps > 0) {
    auto& w = out.weights;
    std::size_t lo = 0, hi = w.size();
    while (lo + 1 < hi && w[lo] < eps) out.lost_mass += w[lo++];
    while (hi > lo + 1 && w[hi - 1] < eps) out.lost_mass += w[--hi];
    out.j_min += static_cast<int>(lo);
    w = std::vector<double>(w.begin() + static_cast<std::ptrdiff_t>(lo), w.begin() + static_cast<std::ptrdiff_t>(hi));
  }
  normalize_offset(out);
  return out;
}

GridLaw level_step_law(const DisplacementLaw& law, const Tilt& tilt, double h) {
  const double b = tilt.b;
  const double theta = tilt.theta;
  GridLaw out;
  if (law.gaussian()) {
    out = gaussian_law(b, h);
    out.offset = b * (theta - tilt.v);
    normalize_offset(out);
    return out;
  }
  if (law.lattice()) {
    if (std::abs(h - 1.0) > 1e-12) fail(ErrorKind::validation, "two-point level law lives on the unit lattice");
    GridLaw fine = two_point_law();
    const double p_plus = 1.0 / (1.0 + std::exp(-2 * theta));
    fine.weights = {1.0 - p_plus, 0.0, p_plus};
    out = convolution_power(fine, tilt.b);
    out.offset -= b * tilt.v;
    normalize_offset(out);
    return out;
  }
  // Fine steps live on an odd subdivision h / r of the level grid with h / r <= sd / 32.
  const double sd = std::sqrt(lambda_second(law, theta));
  int r = std::max(1, static_cast<int>(std::ceil(32.0 * h / sd)));
  if (r % 2 == 0) ++r;
  const double hf = h / r;
  GridLaw fine;
  if (law.preset() == DisplacementPreset::uniform_centered) {
    const double w = 2 * kSqrt3;
    auto cdf = [=](double y) {
      if (y <= -kSqrt3) return 0.0;
      if (y >= kSqrt3) return 1.0;
      if (std::abs(theta) < 1e-12) return (y + kSqrt3) / w;
      if (theta > 0) return -std::expm1(-theta * (y + kSqrt3)) * std::exp(theta * (y - kSqrt3)) / -std::expm1(-w * theta);
      return std::expm1(theta * (y + kSqrt3)) / std::expm1(w * theta);
    };
    fine = cdf_law(cdf, -kSqrt3, kSqrt3, hf);
  } else {
    const double rate = 1.0 - theta;
    auto cdf = [=](double y) { return y <= -1 ? 0.0 : -std::expm1(-rate * (y + 1)); };
    fine = cdf_law(cdf, -1, -1 + 45.0 / rate, hf);
  }
  const GridLaw sum = convolution_power(fine, tilt.b);
  // Fine cell i falls in level cell floor((i + (r - 1) / 2) / r).
  const auto level_cell = [r](long i) {
    const long s = i + (r - 1) / 2;
    return s >= 0 ? s / r : -((-s + r - 1) / r);
  };
  const long c0 = level_cell(sum.j_min);
  const long c1 = level_cell(sum.j_max());
  out.h = h;
  out.j_min = static_cast<int>(c0);
  out.weights.assign(static_cast<std::size_t>(c1 - c0 + 1), 0.0);
  for (std::size_t i = 0; i < sum.weights.size(); ++i)
    out.weights[static_cast<std::size_t>(level_cell(sum.j_min + static_cast<long>(i)) - c0)] += sum.weights[i];
  out.lost_mass = sum.lost_mass;
  // Exact level mean b (Lambda'(theta) - v); the grid mean differs by O(hf^2).
  out.offset = sum.offset;
  out.offset += b * (lambda_prime(law, theta) - tilt.v) - out.mean();
  normalize_offset(out);
  return out;
}

GridLaw rescaled(GridLaw law, double scale) {
  law.h /= scale;
  law.offset /= scale;
  return law;
}

GridLaw absorb_offset(const GridLaw& law) {
  if (law.lattice && law.offset != 0) fail(ErrorKind::validation, "cannot interpolate a lattice law");
  const double s = law.offset / law.h;
  const double fl = std::floor(s);
  const double frac = s - fl;
  GridLaw out = law;
  out.offset = 0;
  out.j_min = law.j_min + static_cast<int>(fl);
  out.weights.assign(law.weights.size() + 1, 0.0);
  for (std::size_t i = 0; i < law.weights.size(); ++i) {
    out.weights[i] += (1 - frac) * law.weights[i];
    out.weights[i + 1] += frac * law.weights[i];
  }
  trim(out);
  return out;
}

LawBuilder standard_gaussian_builder() {
  return [](double h) { return gaussian_law(1.0, h); };
}

LawBuilder standardized_level_builder(const DisplacementLaw& law, const Tilt& tilt) {
  const double sb = std::sqrt(static_cast<double>(tilt.b));
  return [law, tilt, sb](double h) { return rescaled(level_step_law(law, tilt, h * sb), sb); };
}

}  // namespace grem::rwlab
