#include "grem/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "grem/calibration.hpp"
#include "grem/error.hpp"
#include "grem/normal.hpp"

namespace grem {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

OffspringLaw::OffspringLaw(OffspringPreset preset, std::vector<double> weights)
    : preset_(preset), weights_(std::move(weights)) {
  while (weights_.size() > 1 && weights_.back() == 0.0) weights_.pop_back();
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    mean_ += static_cast<double>(k) * weights_[k];
    second_moment_ += static_cast<double>(k * k) * weights_[k];
    if (weights_[k] == 1.0) fixed_ = static_cast<int>(k);
  }
}

OffspringLaw OffspringLaw::deterministic(int r) {
  if (r < 1) fail(ErrorKind::validation, "deterministic offspring needs r >= 1");
  std::vector<double> w(static_cast<std::size_t>(r) + 1, 0.0);
  w[static_cast<std::size_t>(r)] = 1.0;
  return OffspringLaw(OffspringPreset::deterministic, std::move(w));
}

OffspringLaw OffspringLaw::binary() { return OffspringLaw(OffspringPreset::binary, {0.0, 0.0, 1.0}); }

OffspringLaw OffspringLaw::custom(std::vector<double> weights) {
  if (weights.empty()) fail(ErrorKind::validation, "custom offspring law has no weights");
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) fail(ErrorKind::validation, "offspring weights must be finite and >= 0");
  }
  return OffspringLaw(OffspringPreset::custom, std::move(weights));
}

double DisplacementLaw::mgf_lo() const { return -kInf; }

double DisplacementLaw::mgf_hi() const {
  return preset_ == DisplacementPreset::shifted_exponential ? 1.0 : kInf;
}

double DisplacementLaw::support_lo() const {
  switch (preset_) {
    case DisplacementPreset::standard_gaussian: return -kInf;
    case DisplacementPreset::uniform_centered: return -kSqrt3;
    case DisplacementPreset::shifted_exponential: return -1.0;
    case DisplacementPreset::two_point_lattice: return -1.0;
  }
  return -kInf;
}

double DisplacementLaw::support_hi() const {
  switch (preset_) {
    case DisplacementPreset::uniform_centered: return kSqrt3;
    case DisplacementPreset::two_point_lattice: return 1.0;
    default: return kInf;
  }
}

double DisplacementLaw::cdf(double y) const {
  switch (preset_) {
    case DisplacementPreset::standard_gaussian:
      return norm_cdf(y);
    case DisplacementPreset::uniform_centered:
      if (y <= -kSqrt3) return 0.0;
      if (y >= kSqrt3) return 1.0;
      return (y + kSqrt3) / (2.0 * kSqrt3);
    case DisplacementPreset::shifted_exponential:
      return y <= -1.0 ? 0.0 : -std::expm1(-(y + 1.0));
    case DisplacementPreset::two_point_lattice:
      if (y < -1.0) return 0.0;
      return y < 1.0 ? 0.5 : 1.0;
  }
  return 0.0;
}

double DisplacementLaw::quantile(double u) const {
  switch (preset_) {
    case DisplacementPreset::standard_gaussian:
      return norm_quantile(u);
    case DisplacementPreset::uniform_centered:
      return -kSqrt3 + 2.0 * kSqrt3 * u;
    case DisplacementPreset::shifted_exponential:
      return -std::log1p(-u) - 1.0;
    case DisplacementPreset::two_point_lattice:
      return u < 0.5 ? -1.0 : 1.0;
  }
  return 0.0;
}

int Schedule::k_n() const {
  switch (rule) {
    case KRule::constant:
    case KRule::explicit_k:
      return k;
    case KRule::power:
      return static_cast<int>(std::floor(std::pow(static_cast<double>(n), alpha) + 1e-9));
    case KRule::given_b:
      return b > 0 ? n / b : 0;
  }
  return 0;
}

int effective_generations(const Schedule& schedule) { return schedule.k_n() * schedule.b_n(); }

bool ValidationReport::ok() const {
  for (const auto& c : clauses) {
    if (!c.passed) return false;
  }
  return true;
}

std::string ValidationReport::failures() const {
  std::ostringstream os;
  for (const auto& c : clauses) {
    if (!c.passed) os << "failed clause \"" << c.name << "\": " << c.detail << "\n";
  }
  return os.str();
}

ValidationReport validate_spec(const ModelSpec& spec) {
  ValidationReport rep;
  auto add = [&](std::string name, bool ok, std::string detail = {}) {
    rep.clauses.push_back({std::move(name), ok, std::move(detail)});
  };

  const auto& w = spec.offspring.weights();
  double total = 0;
  for (double p : w) total += p;
  add("p0=0", w.empty() || w[0] == 0.0, "offspring law puts mass " + std::to_string(w.empty() ? 0.0 : w[0]) + " on 0");
  add("sum p(k) = 1", std::abs(total - 1.0) <= 1e-12, "weights sum to " + std::to_string(total));
  add("m > 1", spec.offspring.mean() > 1.0, "mean offspring " + std::to_string(spec.offspring.mean()));
  add("E Z^2 finite", std::isfinite(spec.offspring.second_moment()), "finite support");

  const auto& law = spec.displacement;
  add("Lambda finite near 0", law.in_domain(0.5 * std::min(1.0, law.mgf_hi())), "no theta > 0 with finite mgf");

  const int k = spec.schedule.k_n();
  const int n = spec.schedule.n;
  bool sched_ok = n >= 1 && k >= 1 && k <= n && spec.schedule.b_n() >= 1;
  add("1 <= k_n <= n", sched_ok, "n=" + std::to_string(n) + " k_n=" + std::to_string(k));

  switch (spec.hypothesis) {
    case Hypothesis::H1:
      add("H1 Gaussian steps", law.gaussian(), to_string(law.preset()) + " is not Gaussian");
      break;
    case Hypothesis::H2:
      add("Cramer condition", law.cramer(), "lattice law has limsup |phi| = 1");
      break;
    case Hypothesis::oracle_only:
      break;
  }

  if (rep.ok()) {
    try {
      const double th = solve_theta_star(spec.offspring, law);
      add("theta* exists", true);
      add("Lambda finite beyond theta*", law.in_domain(th * (1.0 + 1e-3)),
          "Lambda infinite at theta*(1+1e-3)");
    } catch (const Error& e) {
      add("theta* exists", false, e.what());
    }
  }
  return rep;
}

void require_valid(const ModelSpec& spec) {
  auto rep = validate_spec(spec);
  if (!rep.ok()) fail(ErrorKind::validation, rep.failures());
}

ValidationReport grid_advisory(const ModelSpec& spec, const std::vector<int>& n_grid) {
  ValidationReport rep;
  if (n_grid.size() < 2) return rep;
  bool growing = true;
  for (std::size_t i = 1; i < n_grid.size(); ++i) {
    const double prev_n = n_grid[i - 1];
    const double cur_n = n_grid[i];
    const double bp = spec.schedule.with_n(n_grid[i - 1]).b_n();
    const double bc = spec.schedule.with_n(n_grid[i]).b_n();
    if (spec.hypothesis == Hypothesis::H2) {
      const double lp = std::log(std::max(prev_n, 3.0));
      const double lc = std::log(std::max(cur_n, 3.0));
      if (bc / (lc * lc) < bp / (lp * lp)) growing = false;
    } else if (bc < bp) {
      growing = false;
    }
  }
  const char* name = spec.hypothesis == Hypothesis::H2 ? "b_n/log(n)^2 increasing on grid" : "b_n increasing on grid";
  rep.clauses.push_back({name, growing, "schedule does not grow along the n-grid"});
  return rep;
}

std::string to_string(OffspringPreset p) {
  switch (p) {
    case OffspringPreset::deterministic: return "deterministic";
    case OffspringPreset::binary: return "binary";
    case OffspringPreset::custom: return "custom";
  }
  return "?";
}

std::string to_string(DisplacementPreset p) {
  switch (p) {
    case DisplacementPreset::standard_gaussian: return "standard_gaussian";
    case DisplacementPreset::uniform_centered: return "uniform_centered";
    case DisplacementPreset::shifted_exponential: return "shifted_exponential";
    case DisplacementPreset::two_point_lattice: return "two_point_lattice";
  }
  return "?";
}

std::string to_string(KRule r) {
  switch (r) {
    case KRule::constant: return "constant";
    case KRule::power: return "power";
    case KRule::given_b: return "given_b";
    case KRule::explicit_k: return "explicit";
  }
  return "?";
}

std::string to_string(Hypothesis h) {
  switch (h) {
    case Hypothesis::H1: return "H1";
    case Hypothesis::H2: return "H2";
    case Hypothesis::oracle_only: return "oracle_only";
  }
  return "?";
}

DisplacementPreset displacement_preset_from(const std::string& s) {
  if (s == "standard_gaussian" || s == "gaussian") return DisplacementPreset::standard_gaussian;
  if (s == "uniform_centered" || s == "uniform") return DisplacementPreset::uniform_centered;
  if (s == "shifted_exponential") return DisplacementPreset::shifted_exponential;
  if (s == "two_point_lattice" || s == "two_point") return DisplacementPreset::two_point_lattice;
  fail(ErrorKind::validation, "unknown displacement preset '" + s + "'");
}

KRule k_rule_from(const std::string& s) {
  if (s == "constant") return KRule::constant;
  if (s == "power") return KRule::power;
  if (s == "given_b") return KRule::given_b;
  if (s == "explicit") return KRule::explicit_k;
  fail(ErrorKind::validation, "unknown k_n rule '" + s + "'");
}

Hypothesis hypothesis_from(const std::string& s) {
  if (s == "H1") return Hypothesis::H1;
  if (s == "H2") return Hypothesis::H2;
  if (s == "oracle_only") return Hypothesis::oracle_only;
  fail(ErrorKind::validation, "unknown hypothesis '" + s + "'");
}

}  // namespace grem
