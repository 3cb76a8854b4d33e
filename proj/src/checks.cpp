#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <sstream>

#include "grem/error.hpp"
#include "grem/normal.hpp"
#include "grem/rwlab.hpp"

namespace grem::rwlab {

namespace {

std::string fmt(std::initializer_list<std::pair<const char*, double>> kv) {
  std::ostringstream os;
  os.precision(10);
  bool first = true;
  for (const auto& [k, v] : kv) {
    if (!first) os << ';';
    os << k << '=' << v;
    first = false;
  }
  return os.str();
}

template <class F>
double integrate(F f, double a, double b) {
  if (!(b > a)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 8, 1e-13);
}

double default_h(int b) { return std::sqrt(static_cast<double>(b)) / 64.0; }

// Survival curves at h and 2h under a lower barrier, start 0 anchored on -y.
std::pair<DpResult, DpResult> lower_barrier_curves(const LawBuilder& builder, double h, int K,
                                                    std::function<double(int)> lower, double anchor) {
  BarrierSpec spec;
  spec.K = K;
  spec.lower = std::move(lower);
  DpOptions opt;
  opt.anchor = anchor;
  return {dp_barrier_prob(builder(h), spec, Terminal{}, opt), dp_barrier_prob(builder(2 * h), spec, Terminal{}, opt)};
}

}  // namespace

CheckReport ballot_asymptotic_check(const LawBuilder& builder, double h, double y, const std::vector<int>& k_grid) {
  CheckReport rep{"ballot", {}};
  if (k_grid.empty()) return rep;
  const int K = *std::max_element(k_grid.begin(), k_grid.end());
  const auto [fine, coarse] = lower_barrier_curves(builder, h, K, [y](int) { return -y; }, -y);
  double Ly = 1.0;
  if (y > 0) {
    RenewalOptions ro;
    ro.h = h;
    ro.x_max = std::max(10.0, 2 * y);
    Ly = renewal_L(builder, ro)(y);
  }
  for (int k : k_grid) {
    CheckRow row;
    row.params = fmt({{"k", k}, {"y", y}});
    row.lhs = fine.survival[static_cast<std::size_t>(k)];
    row.rhs = kBallotC1 * Ly / std::sqrt(static_cast<double>(k));
    row.ratio = row.lhs / row.rhs;
    row.error_bound = std::abs(row.lhs - coarse.survival[static_cast<std::size_t>(k)]) + fine.lost_mass;
    rep.rows.push_back(row);
  }
  return rep;
}

CheckReport envelope_check(const LawBuilder& builder, double h, double y, const std::vector<int>& k_grid) {
  CheckReport rep{"envelope", {}};
  if (k_grid.empty()) return rep;
  const int K = *std::max_element(k_grid.begin(), k_grid.end());
  const auto [fine, coarse] = lower_barrier_curves(
      builder, h, K, [y](int k) { return -(std::pow(static_cast<double>(k), 0.4) + y); }, std::numeric_limits<double>::quiet_NaN());
  for (int k : k_grid) {
    CheckRow row;
    row.params = fmt({{"k", k}, {"y", y}});
    row.lhs = fine.survival[static_cast<std::size_t>(k)];
    row.rhs = (1 + y) / std::sqrt(static_cast<double>(k));
    row.ratio = row.lhs / row.rhs;
    row.error_bound = std::abs(row.lhs - coarse.survival[static_cast<std::size_t>(k)]) + fine.lost_mass;
    rep.rows.push_back(row);
  }
  return rep;
}

double LevelProblem::a_n() const {
  return -(1.5 / theta) * std::log(static_cast<double>(n)) + std::log(static_cast<double>(b_n)) / theta;
}

LevelProblem LevelProblem::gaussian_binary(int k_n, int b_n) {
  LevelProblem pb;
  pb.law = DisplacementLaw(DisplacementPreset::standard_gaussian);
  pb.log_m = std::log(2.0);
  pb.theta = std::sqrt(2 * pb.log_m);
  pb.v = pb.theta;
  pb.sigma2 = 1;
  pb.k_n = k_n;
  pb.b_n = b_n;
  pb.n = k_n * b_n;
  pb.c_n = std::max(1.0, std::pow(static_cast<double>(b_n), 0.25));
  return pb;
}

LevelProblem LevelProblem::from(const DisplacementLaw& law, double log_m, int k_n, int b_n) {
  LevelProblem pb;
  pb.law = law;
  pb.log_m = log_m;
  pb.theta = solve_theta_star(log_m, law);
  pb.v = (log_m + lambda(law, pb.theta)) / pb.theta;
  pb.sigma2 = lambda_second(law, pb.theta);
  pb.k_n = k_n;
  pb.b_n = b_n;
  pb.n = k_n * b_n;
  pb.c_n = std::max(1.0, std::pow(static_cast<double>(b_n), 0.25));
  return pb;
}

namespace {

Tilt tilt_of(const LevelProblem& pb) { return Tilt{pb.theta, pb.v, pb.b_n, pb.log_m}; }

double exp_integral(double theta, double a, double b) {
  // int_a^b e^{-theta y} dy
  return (std::exp(-theta * a) - std::exp(-theta * b)) / theta;
}

}  // namespace

CheckReport stone_llt_check(const LevelProblem& pb, const IntervalFn& f, const std::vector<double>& x_grid,
                            double h) {
  CheckReport rep{"stone", {}};
  const double th = pb.theta;
  const double an = pb.a_n();
  const double V = pb.sigma2 * pb.k_n * static_cast<double>(pb.b_n);
  const double integral = f.zero ? 0.0 : exp_integral(th, f.a, f.b);

  GridLaw total;
  const bool grid = !pb.law.gaussian();
  if (grid) {
    if (h <= 0) h = default_h(pb.b_n);
    total = convolution_power(level_step_law(pb.law, tilt_of(pb), h), pb.k_n);
  }
  const double mean_step = pb.b_n * (pb.theta - pb.v);  // Gaussian tilted drift per level
  for (double x : x_grid) {
    CheckRow row;
    row.params = fmt({{"k_n", pb.k_n}, {"b_n", pb.b_n}, {"x", x}, {"a", f.a}, {"b", f.b}});
    row.rhs = std::exp(th * (x - an)) / std::sqrt(2 * kPi * V) * integral;
    if (f.zero) {
      row.lhs = 0;
    } else if (!grid) {
      const double mu = pb.k_n * mean_step;
      row.lhs = integrate(
          [&](double z) {
            const double t = z + an - x;
            return std::exp(-th * t - (t - mu) * (t - mu) / (2 * V)) / std::sqrt(2 * kPi * V);
          },
          f.a, f.b);
    } else {
      double s = 0;
      for (std::size_t i = 0; i < total.weights.size(); ++i) {
        const double c = total.offset + (total.j_min + static_cast<double>(i)) * total.h;
        const double lo = std::max(c - 0.5 * total.h, f.a + an - x);
        const double hi = std::min(c + 0.5 * total.h, f.b + an - x);
        if (hi <= lo) continue;
        s += total.weights[i] * (hi - lo) / total.h * std::exp(-th * 0.5 * (lo + hi));
      }
      row.lhs = s;
      row.error_bound = total.lost_mass * std::exp(-th * (f.a + an - x));
    }
    row.ratio = row.rhs != 0 ? row.lhs / row.rhs : (row.lhs == 0 ? 1.0 : kInf);
    rep.rows.push_back(row);
  }
  return rep;
}

StoneBarrierValue stone_barrier_value(const LevelProblem& pb, const IntervalFn& f, double x, BarrierKind kind,
                                      const RenewalTable& table, double h) {
  StoneBarrierValue out;
  if (f.zero) return out;
  if (kind != BarrierKind::F_bar && kind != BarrierKind::F_tilde)
    fail(ErrorKind::validation, "stone barrier check takes F_bar or F_tilde");
  if (h <= 0) h = default_h(pb.b_n);
  const double th = pb.theta;
  const double an = pb.a_n();
  const int K = pb.k_n;
  const double cn = kind == BarrierKind::F_bar ? pb.c_n : 0.0;

  BarrierSpec spec;
  spec.K = K;
  spec.upper = [=](int k) { return (static_cast<double>(k) / K) * an - (k != K ? cn : 0.0) - x; };
  Terminal term;
  term.lo = an - x + f.a;
  term.hi = an - x + f.b;
  term.weight = [=](double t) { return std::exp(-th * (t - an + x)); };
  const LawBuilder builder = [&pb](double hh) { return level_step_law(pb.law, tilt_of(pb), hh); };
  const DpResult r = dp_barrier_prob_refined(builder, h, spec, term);
  out.lhs = r.value;
  out.error_bound = r.discretization_bound + r.lost_mass * std::exp(-th * f.a);

  const double sb = std::sqrt(static_cast<double>(pb.b_n));
  const double pref = std::pow(static_cast<double>(K), -1.5) / std::sqrt(2 * kPi * pb.sigma2 * pb.b_n);
  const double start_factor = table(-x / sb);
  out.limit = pref * exp_integral(th, f.a, f.b) * start_factor;
  out.refined = pref * start_factor *
                integrate([&](double y) { return std::exp(-th * y) * table(-y / sb); }, f.a, std::min(f.b, 0.0));
  return out;
}

CheckReport stone_barrier_check(const LevelProblem& pb, const IntervalFn& f, const std::vector<double>& x_grid,
                                BarrierKind kind, double h) {
  CheckReport rep{"stone-barrier", {}};
  RenewalOptions ro;
  ro.x_max = 20;
  const LawBuilder std_builder =
      pb.law.gaussian() ? standard_gaussian_builder() : standardized_level_builder(pb.law, tilt_of(pb));
  const RenewalTable table = renewal_L(std_builder, ro);
  for (double x : x_grid) {
    const StoneBarrierValue v = stone_barrier_value(pb, f, x, kind, table, h);
    for (int refined = 0; refined < 2; ++refined) {
      CheckRow row;
      row.params = fmt({{"k_n", pb.k_n}, {"b_n", pb.b_n}, {"x", x}, {"refined_limit", refined}}) + ";barrier=" +
                   to_string(kind);
      row.lhs = v.lhs;
      row.rhs = refined ? v.refined : v.limit;
      row.ratio = row.rhs != 0 ? row.lhs / row.rhs : (row.lhs == 0 ? 1.0 : kInf);
      row.error_bound = v.error_bound;
      rep.rows.push_back(row);
    }
  }
  return rep;
}

CheckReport bridge_barrier_check(const std::vector<int>& k_grid, int b, double a, double x, double h) {
  CheckReport rep{"bridge", {}};
  const double sb = std::sqrt(static_cast<double>(b));
  const double delta = 1.0 / 16;
  const LawBuilder builder = standard_gaussian_builder();
  for (int K : k_grid) {
    BarrierSpec spec;
    spec.K = K;
    spec.upper = [=](int k) { return (a * std::log(std::min(k, K - k) * static_cast<double>(b) + 1) + x) / sb; };
    const Terminal pin{-delta, delta, {}};
    const DpResult joint = dp_barrier_prob_refined(builder, h, spec, pin);
    BarrierSpec free_spec;
    free_spec.K = K;
    const DpResult free = dp_barrier_prob_refined(builder, h, free_spec, pin);
    CheckRow row;
    row.params = fmt({{"k_n", K}, {"b_n", b}, {"a", a}, {"x", x}});
    row.lhs = joint.value / free.value;
    row.rhs = (1 + x / sb) * (1 + x / sb) / K;
    row.ratio = row.lhs / row.rhs;
    row.error_bound =
        (joint.discretization_bound + joint.lost_mass) / free.value +
        row.lhs * (free.discretization_bound + free.lost_mass) / free.value;
    rep.rows.push_back(row);
  }
  return rep;
}

CheckReport excursion_check(const std::vector<int>& k_grid, int b, double alpha, double x, double lo, double hi,
                            double h) {
  CheckReport rep{"excursion", {}};
  if (h <= 0) h = default_h(b);
  const double bd = b;
  const double sb = std::sqrt(bd);
  const LawBuilder builder = [bd](double hh) { return gaussian_law(bd, hh); };
  for (int K : k_grid) {
    auto fk = [=](int j) { return alpha * std::log(((K - j) * bd + 1) / (K * bd)); };
    BarrierSpec spec;
    spec.K = K;
    spec.upper = [=](int j) { return fk(j) + x; };
    const Terminal term{fk(K) + lo, fk(K) + hi, {}};
    const DpResult r = dp_barrier_prob_refined(builder, h, spec, term);
    CheckRow row;
    row.params = fmt({{"k", K}, {"b_n", b}, {"alpha", alpha}, {"x", x}, {"lo", lo}, {"hi", hi}});
    row.lhs = r.value;
    row.rhs = (hi - lo) * (1 + x / sb) * (1 + x / sb) / (sb * std::pow(static_cast<double>(K), 1.5));
    row.ratio = row.lhs / row.rhs;
    row.error_bound = r.discretization_bound + r.lost_mass;
    rep.rows.push_back(row);
  }
  return rep;
}

CheckReport renewal_ratio_check(const std::vector<int>& b_grid, const RenewalTable& table) {
  CheckReport rep{"renewal-ratio", {}};
  const double u_max = table.x.empty() ? 0.0 : table.x.back();
  for (int b : b_grid) {
    const double sb = std::sqrt(static_cast<double>(b));
    const double c = std::max(1.0, std::pow(static_cast<double>(b), 0.25));
    double sup = 0;
    const int steps = 4000;
    const double x_hi = u_max * sb;
    for (int i = 0; i <= steps; ++i) {
      const double xv = c + (x_hi - c) * i / steps;
      sup = std::max(sup, std::abs(table((xv - c) / sb) / table(xv / sb) - 1));
    }
    CheckRow row;
    row.params = fmt({{"b_n", b}, {"c_n", c}});
    row.lhs = sup;
    row.rhs = 0;
    row.ratio = sup;
    row.error_bound = 0;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace grem::rwlab
