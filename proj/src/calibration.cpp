#include "grem/calibration.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "grem/error.hpp"
#include "grem/normal.hpp"

namespace grem {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLn2 = 0.69314718055994530942;

void check_domain(const DisplacementLaw& law, double theta) {
  if (!law.in_domain(theta)) {
    std::ostringstream os;
    os << "theta=" << theta << " outside the mgf domain of " << to_string(law.preset());
    fail(ErrorKind::domain, os.str());
  }
}

// log(sinh(s)/s) for s >= 0.
double log_sinhc(double s) {
  if (s < 0.05) {
    const double s2 = s * s;
    return s2 * (1.0 / 6 + s2 * (-1.0 / 180 + s2 * (1.0 / 2835 - s2 / 37800)));
  }
  if (s > 20) return s + std::log1p(-std::exp(-2 * s)) - kLn2 - std::log(s);
  return std::log(std::sinh(s) / s);
}

// coth(s) - 1/s for s >= 0.
double langevin(double s) {
  if (s < 0.05) {
    const double s2 = s * s;
    return s * (1.0 / 3 + s2 * (-1.0 / 45 + s2 * (2.0 / 945 - s2 / 4725)));
  }
  return 1.0 / std::tanh(s) - 1.0 / s;
}

// 1/s^2 - 1/sinh(s)^2 for s >= 0.
double langevin_prime(double s) {
  if (s < 0.05) {
    const double s2 = s * s;
    return 1.0 / 3 + s2 * (-1.0 / 15 + s2 * (2.0 / 189 - s2 / 675));
  }
  const double sh = std::sinh(s);
  return 1.0 / (s * s) - (s > 300 ? 0.0 : 1.0 / (sh * sh));
}

}  // namespace

double lambda(const DisplacementLaw& law, double theta) {
  check_domain(law, theta);
  switch (law.preset()) {
    case DisplacementPreset::standard_gaussian:
      return 0.5 * theta * theta;
    case DisplacementPreset::uniform_centered:
      return log_sinhc(kSqrt3 * std::abs(theta));
    case DisplacementPreset::shifted_exponential:
      if (std::abs(theta) < 1e-4) return theta * theta * (0.5 + theta * (1.0 / 3 + theta / 4));
      return -theta - std::log1p(-theta);
    case DisplacementPreset::two_point_lattice: {
      const double a = std::abs(theta);
      if (a > 20) return a + std::log1p(std::exp(-2 * a)) - kLn2;
      const double sh = std::sinh(0.5 * a);
      return std::log1p(2 * sh * sh);
    }
  }
  return 0;
}

double lambda_prime(const DisplacementLaw& law, double theta) {
  check_domain(law, theta);
  switch (law.preset()) {
    case DisplacementPreset::standard_gaussian:
      return theta;
    case DisplacementPreset::uniform_centered: {
      const double s = kSqrt3 * theta;
      return kSqrt3 * (s < 0 ? -langevin(-s) : langevin(s));
    }
    case DisplacementPreset::shifted_exponential:
      return theta / (1.0 - theta);
    case DisplacementPreset::two_point_lattice:
      return std::tanh(theta);
  }
  return 0;
}

double lambda_second(const DisplacementLaw& law, double theta) {
  check_domain(law, theta);
  switch (law.preset()) {
    case DisplacementPreset::standard_gaussian:
      return 1.0;
    case DisplacementPreset::uniform_centered:
      return 3.0 * langevin_prime(kSqrt3 * std::abs(theta));
    case DisplacementPreset::shifted_exponential:
      return 1.0 / ((1.0 - theta) * (1.0 - theta));
    case DisplacementPreset::two_point_lattice: {
      const double c = std::cosh(theta);
      return std::isfinite(c) ? 1.0 / (c * c) : 0.0;
    }
  }
  return 0;
}

double legendre_gap(const DisplacementLaw& law, double theta) {
  if (law.preset() == DisplacementPreset::two_point_lattice && theta > 20) {
    // log 2 minus a deficit that would cancel catastrophically
    const double e = std::exp(-2 * theta);
    return kLn2 - (2 * theta * e / (1 + e) + std::log1p(e));
  }
  return theta * lambda_prime(law, theta) - lambda(law, theta);
}

double legendre_gap_sup(const DisplacementLaw& law) {
  // The two-point law has an atom of mass 1/2 at its upper end: sup g = -log(1/2).
  return law.preset() == DisplacementPreset::two_point_lattice ? kLn2 : kInf;
}

double solve_theta_star(const OffspringLaw& offspring, const DisplacementLaw& law) {
  if (!(offspring.mean() > 1.0)) fail(ErrorKind::validation, "theta* needs mean offspring m > 1");
  return solve_theta_star(std::log(offspring.mean()), law);
}

double solve_theta_star(double log_m, const DisplacementLaw& law) {
  const double sup = legendre_gap_sup(law);
  if (!(log_m < sup)) {
    std::ostringstream os;
    os << "no theta* for " << to_string(law.preset()) << ": sup g = " << sup << " <= log m = " << log_m;
    fail(ErrorKind::no_root, os.str());
  }
  auto g = [&](double th) { return legendre_gap(law, th) - log_m; };

  double lo = 1e-8;
  if (g(lo) >= 0) fail(ErrorKind::no_root, "log m too small to bracket theta*");
  double hi;
  const double dom_hi = law.mgf_hi();
  if (std::isfinite(dom_hi)) {
    hi = lo;
    double gap = dom_hi - lo;
    for (int j = 0;; ++j) {
      gap *= 0.5;
      hi = dom_hi - gap;
      if (g(hi) > 0) break;
      lo = hi;
      if (j > 60) fail(ErrorKind::no_root, "theta* bracket did not close before the mgf domain end");
    }
  } else {
    hi = 1.0;
    while (!(g(hi) > 0)) {
      lo = hi;
      hi *= 2;
      if (hi > 1e8) fail(ErrorKind::no_root, "theta* bracket exceeded 1e8");
    }
  }

  double th = 0.5 * (lo + hi);
  for (int it = 0; it < 300; ++it) {
    const double gv = g(th);
    if (gv == 0) return th;
    if (gv > 0) hi = th; else lo = th;
    if (std::abs(gv) <= 1e-14 * std::max(1.0, log_m) || hi - lo <= 4 * std::numeric_limits<double>::epsilon() * hi) break;
    const double slope = th * lambda_second(law, th);
    double next = slope > 0 ? th - gv / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    th = next;
  }
  if (!(std::abs(g(th)) <= kThetaTolerance)) {
    std::ostringstream os;
    os << "theta* solver residual " << g(th) << " above tolerance";
    fail(ErrorKind::convergence, os.str());
  }
  return th;
}

Sequences sequences_cn_dn(const Schedule& schedule) {
  Sequences s;
  const double b = schedule.b_n();
  const double n = schedule.n;
  s.c_n = std::max(1.0, std::pow(b, 0.25));
  s.d_n = std::log(n) * (1.0 + std::log(std::log(std::max(n, 3.0))));
  if (s.d_n * s.d_n >= b) {
    s.warning = true;
    std::ostringstream os;
    os << "d_n^2 = " << s.d_n * s.d_n << " >= b_n = " << b << " at n = " << schedule.n;
    s.message = os.str();
  }
  return s;
}

Centering centering(double theta_star, double v, const Schedule& schedule) {
  const double n = schedule.n;
  const double b = schedule.b_n();
  const double k = schedule.k_n();
  const double a_n = -(3.0 / (2.0 * theta_star)) * std::log(n) + std::log(b) / theta_star;
  return {k * b * v + a_n, a_n};
}

CalibratedParams calibrate(const ModelSpec& spec, const CalibrationOverrides& overrides) {
  require_valid(spec);
  CalibratedParams p;
  p.log_m = std::log(spec.offspring.mean());
  p.theta_star = solve_theta_star(p.log_m, spec.displacement);
  p.v = (p.log_m + lambda(spec.displacement, p.theta_star)) / p.theta_star;
  p.sigma2 = lambda_second(spec.displacement, p.theta_star);
  const auto c = centering(p.theta_star, p.v, spec.schedule);
  p.m_n = c.m_n;
  p.a_n = c.a_n;
  const auto seq = sequences_cn_dn(spec.schedule);
  p.c_n = overrides.c_n.value_or(seq.c_n);
  p.d_n = overrides.d_n.value_or(seq.d_n);
  p.schedule_warning = p.d_n * p.d_n >= spec.schedule.b_n();
  p.beta_c = std::sqrt(2.0 * kLn2);
  p.n = spec.schedule.n;
  p.k_n = spec.schedule.k_n();
  p.b_n = spec.schedule.b_n();
  return p;
}

double Barrier::operator()(int k) const {
  const double kb = static_cast<double>(k) * p_.b_n;
  const bool interior = k != 0 && k != p_.k_n;
  switch (kind_) {
    case BarrierKind::none:
      return kInf;
    case BarrierKind::R: {
      const double top = static_cast<double>(p_.k_n) * p_.b_n + 1.0;
      const double rest = static_cast<double>(p_.k_n - k) * p_.b_n + 1.0;
      return kb * p_.v - (3.0 / (2.0 * p_.theta_star)) * std::log(top / rest) + p_.c_n;
    }
    case BarrierKind::F:
      return kb * p_.v + (static_cast<double>(k) / p_.k_n) * p_.a_n - (interior ? p_.c_n : 0.0);
    case BarrierKind::F_bar:
      return (static_cast<double>(k) / p_.k_n) * p_.a_n - (interior ? p_.c_n : 0.0);
    case BarrierKind::F_tilde:
      return (static_cast<double>(k) / p_.k_n) * p_.a_n;
  }
  return kInf;
}

Barrier barrier_R(const CalibratedParams& p) { return Barrier(BarrierKind::R, p); }
Barrier barrier_F(const CalibratedParams& p) { return Barrier(BarrierKind::F, p); }

std::string to_string(BarrierKind k) {
  switch (k) {
    case BarrierKind::none: return "none";
    case BarrierKind::R: return "R";
    case BarrierKind::F: return "F";
    case BarrierKind::F_bar: return "F_bar";
    case BarrierKind::F_tilde: return "F_tilde";
  }
  return "?";
}

BarrierKind barrier_kind_from(const std::string& s) {
  if (s == "none") return BarrierKind::none;
  if (s == "R") return BarrierKind::R;
  if (s == "F") return BarrierKind::F;
  if (s == "F_bar") return BarrierKind::F_bar;
  if (s == "F_tilde") return BarrierKind::F_tilde;
  fail(ErrorKind::validation, "unknown barrier '" + s + "'");
}

}  // namespace grem
