#include "grem/manytoone.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <vector>

#include "grem/error.hpp"
#include "grem/normal.hpp"

namespace grem {

namespace {

using Rational = boost::multiprecision::cpp_rational;

std::vector<Rational> convolve(const std::vector<Rational>& a, const std::vector<Rational>& b) {
  std::vector<Rational> out(a.size() + b.size() - 1);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

// Law of Z_b as exact rationals, index = count.
std::vector<Rational> exact_generation_law(const OffspringLaw& offspring, int b) {
  std::vector<Rational> p;
  for (double w : offspring.weights()) p.emplace_back(w);
  std::vector<Rational> z{Rational(0), Rational(1)};
  for (int t = 0; t < b; ++t) {
    std::vector<Rational> next{Rational(0)};
    std::vector<Rational> power{Rational(1)};  // p^{*k}
    for (std::size_t k = 0; k < z.size(); ++k) {
      if (k > 0) power = convolve(power, p);
      if (z[k] == 0) continue;
      if (next.size() < power.size()) next.resize(power.size());
      for (std::size_t i = 0; i < power.size(); ++i) next[i] += z[k] * power[i];
    }
    z = std::move(next);
  }
  return z;
}

struct Atom {
  double value;
  Rational prob;
};

// Law of Y_b for the two-point law: value 2i - b with probability C(b,i) / 2^b.
std::vector<Atom> exact_level_displacement(const DisplacementLaw& law, int b) {
  if (!law.lattice()) fail(ErrorKind::validation, "exact enumeration needs a finite-support displacement law");
  std::vector<Rational> w{Rational(1)};
  const std::vector<Rational> step{Rational(1, 2), Rational(0), Rational(1, 2)};
  for (int i = 0; i < b; ++i) w = convolve(w, step);
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] != 0) atoms.push_back({static_cast<double>(i) - b, w[i]});
  }
  return atoms;
}

}  // namespace

Tilt Tilt::at(const DisplacementLaw& law, double theta, double log_m, int b) {
  Tilt t;
  t.theta = theta;
  t.v = (log_m + lambda(law, theta)) / theta;
  t.b = b;
  t.log_m = log_m;
  return t;
}

Tilt Tilt::calibrated(const CalibratedParams& p) { return Tilt{p.theta_star, p.v, p.b_n, p.log_m}; }

double tilted_quantile(const DisplacementLaw& law, double theta, double u) {
  switch (law.preset()) {
    case DisplacementPreset::standard_gaussian:
      return theta + norm_quantile(u);
    case DisplacementPreset::uniform_centered: {
      if (std::abs(theta) < 1e-12) return law.quantile(u);
      if (theta > 0) return kSqrt3 + std::log(u + (1 - u) * std::exp(-2 * kSqrt3 * theta)) / theta;
      return -kSqrt3 + std::log(1 - u + u * std::exp(2 * kSqrt3 * theta)) / theta;
    }
    case DisplacementPreset::shifted_exponential:
      return -std::log1p(-u) / (1.0 - theta) - 1.0;
    case DisplacementPreset::two_point_lattice:
      return u < 1.0 / (1.0 + std::exp(2 * theta)) ? -1.0 : 1.0;
  }
  return 0;
}

double sample_tilted_step(const DisplacementLaw& law, const Tilt& tilt, rng::Stream& stream) {
  const double b = tilt.b;
  if (law.gaussian()) return b * tilt.theta + std::sqrt(b) * norm_quantile(stream.uniform()) - b * tilt.v;
  double sum = 0;
  for (int i = 0; i < tilt.b; ++i) sum += tilted_quantile(law, tilt.theta, stream.uniform());
  return sum - b * tilt.v;
}

Estimate expected_count_mc(const DisplacementLaw& law, const Tilt& tilt, const PathFunctional& g, int levels,
                           std::uint64_t samples, std::uint64_t seed) {
  if (samples == 0) fail(ErrorKind::validation, "sample count must be >= 1");
  if (levels < 1) fail(ErrorKind::validation, "level count must be >= 1");
  const std::uint64_t root = rng::root_key(seed, 0);
  std::vector<double> pos(static_cast<std::size_t>(levels));
  double mean = 0, m2 = 0;
  for (std::uint64_t s = 0; s < samples; ++s) {
    rng::Stream st(rng::child_key(root, s), rng::Purpose::spine);
    double tbar = 0;
    for (int i = 0; i < levels; ++i) {
      tbar += sample_tilted_step(law, tilt, st);
      pos[i] = tbar + (i + 1) * static_cast<double>(tilt.b) * tilt.v;
    }
    const double val = std::exp(-tilt.theta * tbar) * g(pos);
    const double d = val - mean;
    mean += d / static_cast<double>(s + 1);
    m2 += d * (val - mean);
  }
  Estimate e;
  e.value = mean;
  e.se = samples > 1 ? std::sqrt(m2 / static_cast<double>(samples - 1) / static_cast<double>(samples)) : 0.0;
  return e;
}

double tilted_exact_sum(const DisplacementLaw& law, const Tilt& tilt, const PathFunctional& g, int levels) {
  if (!law.lattice()) fail(ErrorKind::validation, "exact tilted summation needs a finite-support law");
  const int b = tilt.b;
  if (std::pow(b + 1.0, levels) > 1e7) fail(ErrorKind::size, "tilted support too large to sum exactly");
  // Y_b = 2i - b with tilted weight C(b,i) p_+^i p_-^{b-i}.
  const double p_plus = 1.0 / (1.0 + std::exp(-2 * tilt.theta));
  const double p_minus = 1.0 - p_plus;
  std::vector<double> val, prob;
  for (int i = 0; i <= b; ++i) {
    val.push_back(2.0 * i - b);
    prob.push_back(std::exp(std::lgamma(b + 1.0) - std::lgamma(i + 1.0) - std::lgamma(b - i + 1.0)) *
                   std::pow(p_plus, i) * std::pow(p_minus, b - i));
  }
  std::vector<double> pos(static_cast<std::size_t>(levels));
  long double total = 0;
  auto rec = [&](auto&& self, int level, double tsum, long double weight) -> void {
    if (level == levels) {
      const double tbar = tsum - levels * static_cast<double>(b) * tilt.v;
      total += weight * std::exp(-tilt.theta * tbar) * g(pos);
      return;
    }
    for (std::size_t a = 0; a < val.size(); ++a) {
      const double t = tsum + val[a];
      pos[level] = t;  // T-bar_i + i b v = T_i
      self(self, level + 1, t, weight * prob[a]);
    }
  };
  rec(rec, 0, 0.0, 1.0L);
  return static_cast<double>(total);
}

double brute_force_count(const OffspringLaw& offspring, const DisplacementLaw& law, int b, const PathFunctional& g,
                         int levels, std::uint64_t cap) {
  if (levels < 1) fail(ErrorKind::validation, "level count must be >= 1");
  const auto z = exact_generation_law(offspring, b);
  const auto y = exact_level_displacement(law, b);
  double per_level = 0;
  for (std::size_t c = 0; c < z.size(); ++c) {
    if (z[c] != 0) per_level += static_cast<double>(c);
  }
  per_level *= static_cast<double>(y.size());
  if (std::pow(per_level, levels) > static_cast<double>(cap))
    fail(ErrorKind::size, "brute-force enumeration exceeds the path cap");

  std::vector<double> pos(static_cast<std::size_t>(levels));
  auto rec = [&](auto&& self, int level, double x) -> Rational {
    if (level == levels) return Rational(g(pos));
    Rational sum(0);
    for (std::size_t c = 0; c < z.size(); ++c) {
      if (z[c] == 0) continue;
      Rational per_count(0);
      for (std::size_t child = 0; child < c; ++child) {
        for (const auto& atom : y) {
          pos[level] = x + atom.value;
          per_count += atom.prob * self(self, level + 1, x + atom.value);
        }
      }
      sum += z[c] * per_count;
    }
    return sum;
  };
  return rec(rec, 0, 0.0).convert_to<double>();
}

PathFunctional parse_functional(const std::string& text, double shift) {
  if (text == "const") return [](std::span<const double>) { return 1.0; };
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::string kind = text.substr(0, colon);
    double param = 0;
    try {
      param = std::stod(text.substr(colon + 1));
    } catch (const std::exception&) {
      fail(ErrorKind::validation, "bad functional parameter in '" + text + "'");
    }
    if (kind == "indicator")
      return [=](std::span<const double> x) { return x.back() > shift + param ? 1.0 : 0.0; };
    if (kind == "exp") return [=](std::span<const double> x) { return std::exp(param * (x.back() - shift)); };
  }
  fail(ErrorKind::validation, "unknown functional '" + text + "' (const | indicator:a | exp:theta)");
}

}  // namespace grem
