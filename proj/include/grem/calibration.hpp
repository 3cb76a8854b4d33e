#pragma once

#include <optional>
#include <string>

#include "grem/model.hpp"

namespace grem {

double lambda(const DisplacementLaw& law, double theta);
double lambda_prime(const DisplacementLaw& law, double theta);
double lambda_second(const DisplacementLaw& law, double theta);

// g(theta) = theta * Lambda'(theta) - Lambda(theta), increasing in theta > 0.
double legendre_gap(const DisplacementLaw& law, double theta);
// Supremum of g over the mgf domain (infinite unless the law has an atom at its upper end).
double legendre_gap_sup(const DisplacementLaw& law);

inline constexpr double kThetaTolerance = 1e-10;

// Root of g(theta) = log m. Throws ErrorKind::no_root when sup g <= log m.
double solve_theta_star(const OffspringLaw& offspring, const DisplacementLaw& law);
double solve_theta_star(double log_m, const DisplacementLaw& law);

struct Sequences {
  double c_n = 1;
  double d_n = 0;
  bool warning = false;  // d_n^2 >= b_n
  std::string message;
};

Sequences sequences_cn_dn(const Schedule& schedule);

struct CalibratedParams {
  double theta_star = 0;
  double v = 0;
  double sigma2 = 0;
  double m_n = 0;
  double a_n = 0;
  double c_n = 1;
  double d_n = 0;
  double beta_c = 0;
  double log_m = 0;
  int n = 0;
  int k_n = 0;
  int b_n = 0;
  bool schedule_warning = false;
};

struct CalibrationOverrides {
  std::optional<double> c_n;
  std::optional<double> d_n;
};

// a_n = -(3 / (2 theta)) log n + log(b_n) / theta; m_n = k_n b_n v + a_n.
struct Centering {
  double m_n;
  double a_n;
};
Centering centering(double theta_star, double v, const Schedule& schedule);

CalibratedParams calibrate(const ModelSpec& spec, const CalibrationOverrides& overrides = {});

enum class BarrierKind { none, R, F, F_bar, F_tilde };

// Evaluator k -> bound for k = 0..k_n.
class Barrier {
 public:
  Barrier() = default;
  Barrier(BarrierKind kind, const CalibratedParams& p) : kind_(kind), p_(p) {}

  BarrierKind kind() const { return kind_; }
  double operator()(int k) const;

 private:
  BarrierKind kind_ = BarrierKind::none;
  CalibratedParams p_;
};

// R_n(k) = k b v - (3/(2 theta)) log((k_n b + 1) / ((k_n - k) b + 1)) + c_n
Barrier barrier_R(const CalibratedParams& p);
// F_n(k) = k b v + (k/k_n) a_n - c_n 1{k != 0, k_n}
Barrier barrier_F(const CalibratedParams& p);

std::string to_string(BarrierKind k);
BarrierKind barrier_kind_from(const std::string& s);

}  // namespace grem
