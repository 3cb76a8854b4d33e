#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace grem {

enum class OffspringPreset { deterministic, binary, custom };

// Offspring law on a finite support. weights()[k] is p(k).
class OffspringLaw {
 public:
  static OffspringLaw deterministic(int r);
  static OffspringLaw binary();
  static OffspringLaw custom(std::vector<double> weights);

  OffspringPreset preset() const { return preset_; }
  const std::vector<double>& weights() const { return weights_; }
  double mean() const { return mean_; }
  double second_moment() const { return second_moment_; }
  int max_children() const { return static_cast<int>(weights_.size()) - 1; }
  // r for a law with p(r) = 1, otherwise 0.
  int fixed_count() const { return fixed_; }

 private:
  OffspringLaw(OffspringPreset preset, std::vector<double> weights);

  OffspringPreset preset_;
  std::vector<double> weights_;
  double mean_ = 0;
  double second_moment_ = 0;
  int fixed_ = 0;
};

enum class DisplacementPreset { standard_gaussian, uniform_centered, shifted_exponential, two_point_lattice };

// One fine step Y_1: centred, unit variance.
class DisplacementLaw {
 public:
  explicit DisplacementLaw(DisplacementPreset preset = DisplacementPreset::standard_gaussian) : preset_(preset) {}

  DisplacementPreset preset() const { return preset_; }
  bool gaussian() const { return preset_ == DisplacementPreset::standard_gaussian; }
  bool cramer() const { return preset_ != DisplacementPreset::two_point_lattice; }
  bool oracle_only() const { return preset_ == DisplacementPreset::two_point_lattice; }
  bool lattice() const { return preset_ == DisplacementPreset::two_point_lattice; }

  // Open interval of theta with finite Lambda.
  double mgf_lo() const;
  double mgf_hi() const;
  bool in_domain(double theta) const { return theta > mgf_lo() && theta < mgf_hi(); }

  double cdf(double y) const;
  double quantile(double u) const;
  // Support bounds (infinite where unbounded).
  double support_lo() const;
  double support_hi() const;

 private:
  DisplacementPreset preset_;
};

enum class KRule { constant, power, given_b, explicit_k };

struct Schedule {
  int n = 1;
  KRule rule = KRule::power;
  double alpha = 0.5;  // power rule
  int k = 1;           // constant / explicit rule
  int b = 1;           // given_b rule

  int k_n() const;
  int b_n() const { return n / k_n(); }
  int n_eff() const { return k_n() * b_n(); }
  Schedule with_n(int new_n) const {
    Schedule s = *this;
    s.n = new_n;
    return s;
  }
};

int effective_generations(const Schedule& schedule);

enum class Hypothesis { H1, H2, oracle_only };

struct ModelSpec {
  OffspringLaw offspring = OffspringLaw::binary();
  DisplacementLaw displacement;
  Schedule schedule;
  Hypothesis hypothesis = Hypothesis::H1;
};

struct ValidationClause {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationClause> clauses;
  bool ok() const;
  std::string failures() const;
};

ValidationReport validate_spec(const ModelSpec& spec);
// Throws ErrorKind::validation with the failed clauses.
void require_valid(const ModelSpec& spec);

// Advisory for an n-grid: b_n -> infinity (H1) or b_n / log(n)^2 -> infinity (H2).
ValidationReport grid_advisory(const ModelSpec& spec, const std::vector<int>& n_grid);

std::string to_string(OffspringPreset p);
std::string to_string(DisplacementPreset p);
std::string to_string(KRule r);
std::string to_string(Hypothesis h);
DisplacementPreset displacement_preset_from(const std::string& s);
KRule k_rule_from(const std::string& s);
Hypothesis hypothesis_from(const std::string& s);

}  // namespace grem
