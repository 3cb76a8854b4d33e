#include "grem/stats.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <map>
#include <sstream>

#include "grem/error.hpp"
#include "grem/normal.hpp"

namespace grem::stats {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Estimate mean_se(const std::vector<double>& xs) {
  Estimate e;
  if (xs.empty()) return e;
  double mean = 0, m2 = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = xs[i] - mean;
    mean += d / static_cast<double>(i + 1);
    m2 += d * (xs[i] - mean);
  }
  e.value = mean;
  if (xs.size() > 1) e.se = std::sqrt(m2 / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  return e;
}

double parse_number(const std::string& s, const std::string& whole) {
  if (s == "inf") return kInf;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::validation, "bad number '" + s + "' in test function '" + whole + "'");
}

template <class F>
double quad(F f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-12);
}

}  // namespace

TestFunction TestFunction::zero() { return TestFunction(PhiKind::zero, 0, 0); }

TestFunction TestFunction::step(double a, double height) {
  if (!(height >= 0)) fail(ErrorKind::validation, "step height must be >= 0");
  return TestFunction(PhiKind::step, a, std::min(height, kIndicatorCap));
}

TestFunction TestFunction::exp_bump(double a, double rate) {
  if (!(rate > 0) || !std::isfinite(rate)) fail(ErrorKind::validation, "exp_bump rate must be finite and > 0");
  return TestFunction(PhiKind::exp_bump, a, rate);
}

TestFunction TestFunction::capped_linear(double a, double s) {
  if (!(s > 0) || !std::isfinite(s)) fail(ErrorKind::validation, "capped_linear slope must be finite and > 0");
  return TestFunction(PhiKind::capped_linear, a, s);
}

TestFunction TestFunction::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.empty()) fail(ErrorKind::validation, "empty test function");
  const std::string& kind = parts[0];
  if (kind == "zero" && parts.size() == 1) return zero();
  if (kind == "step" && (parts.size() == 2 || parts.size() == 3))
    return step(parse_number(parts[1], text), parts.size() == 3 ? parse_number(parts[2], text) : 1.0);
  if (kind == "exp_bump" && parts.size() == 3) return exp_bump(parse_number(parts[1], text), parse_number(parts[2], text));
  if (kind == "capped_linear" && parts.size() == 3)
    return capped_linear(parse_number(parts[1], text), parse_number(parts[2], text));
  fail(ErrorKind::validation,
       "unknown test function '" + text + "' (zero | step:a[:height] | exp_bump:a:rate | capped_linear:a:s)");
}

double TestFunction::operator()(double x) const {
  switch (kind_) {
    case PhiKind::zero:
      return 0;
    case PhiKind::step:
      return x >= a_ ? p_ : 0.0;
    case PhiKind::exp_bump: {
      if (x < a_) return 0;
      const double t = p_ * (x - a_);
      return t * std::exp(1 - t);
    }
    case PhiKind::capped_linear:
      return x <= a_ ? 0.0 : std::min(p_ * (x - a_), 1.0);
  }
  return 0;
}

double TestFunction::support_lo() const { return kind_ == PhiKind::zero ? kInf : a_; }

std::string TestFunction::id() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case PhiKind::zero:
      return "zero";
    case PhiKind::step:
      os << "step:" << a_ << ':';
      if (p_ >= kIndicatorCap) {
        os << "inf";
      } else {
        os << p_;
      }
      break;
    case PhiKind::exp_bump:
      os << "exp_bump:" << a_ << ':' << p_;
      break;
    case PhiKind::capped_linear:
      os << "capped_linear:" << a_ << ':' << p_;
      break;
  }
  return os.str();
}

Estimate laplace_empirical(Batch batch, const TestFunction& phi, double window) {
  if (phi.support_lo() < window)
    fail(ErrorKind::window, "test function support starts at " + std::to_string(phi.support_lo()) +
                                " below the recorded window " + std::to_string(window));
  if (phi.kind() == PhiKind::zero) return Estimate{1.0, 0.0};
  std::vector<double> vals;
  vals.reserve(batch.size());
  for (const auto& r : batch) {
    double s = 0;
    for (const auto& p : r.points) s += phi(p.value);
    vals.push_back(std::exp(-s));
  }
  return mean_se(vals);
}

double intensity_integral(const TestFunction& phi, double theta, double sigma2) {
  const double norm = 1.0 / std::sqrt(2 * kPi * sigma2);
  const double a = phi.a();
  const double p = phi.param();
  switch (phi.kind()) {
    case PhiKind::zero:
      return 0;
    case PhiKind::step:
      return norm * (-std::expm1(-p)) * std::exp(-theta * a) / theta;
    case PhiKind::exp_bump: {
      auto f = [&](double y) { return std::exp(-theta * y) * -std::expm1(-phi(y)); };
      const double peak = a + 1.0 / p;
      return norm * (quad(f, a, peak) + quad(f, peak, kInf));
    }
    case PhiKind::capped_linear: {
      auto f = [&](double y) { return std::exp(-theta * y) * -std::expm1(-phi(y)); };
      const double kink = a + 1.0 / p;
      return norm * (quad(f, a, kink) + (-std::expm1(-1.0)) * std::exp(-theta * kink) / theta);
    }
  }
  return 0;
}

double laplace_limit(const TestFunction& phi, double theta, double sigma2, std::span<const double> w) {
  const double I = intensity_integral(phi, theta, sigma2);
  if (w.empty()) return std::exp(-I);
  double s = 0;
  for (double x : w) s += std::exp(-x * I);
  return s / static_cast<double>(w.size());
}

std::vector<double> w_samples(Batch batch) {
  std::vector<double> w;
  w.reserve(batch.size());
  for (const auto& r : batch) w.push_back(r.W);
  return w;
}

double prelimit_laplace(double intensity, double log_m, int b, std::span<const double> z) {
  const double q = intensity * std::exp(-b * log_m);
  if (!(q < 1)) fail(ErrorKind::validation, "prelimit needs m^{-b} I(phi) < 1");
  if (z.empty()) return 1.0;
  double s = 0;
  for (double c : z) s += std::exp(c * std::log1p(-q));
  return s / static_cast<double>(z.size());
}

double prelimit_laplace(const TestFunction& phi, double theta, double sigma2, const OffspringLaw& offspring, int b,
                        std::uint64_t samples, std::uint64_t seed) {
  const double I = intensity_integral(phi, theta, sigma2);
  const double log_m = std::log(offspring.mean());
  if (offspring.fixed_count() > 0) {
    const double z = std::exp(b * log_m);
    const double one[] = {std::round(z)};
    return prelimit_laplace(I, log_m, b, one);
  }
  std::vector<double> z;
  z.reserve(samples);
  const std::uint64_t root = rng::root_key(seed, 0);
  for (std::uint64_t s = 0; s < samples; ++s) {
    rng::Stream st(rng::child_key(root, s), rng::Purpose::offspring);
    z.push_back(static_cast<double>(sample_offspring_count(offspring, b, st)));
  }
  return prelimit_laplace(I, log_m, b, z);
}

std::vector<double> counts_above(Batch batch, double a) {
  std::vector<double> c;
  c.reserve(batch.size());
  for (const auto& r : batch) {
    std::size_t k = 0;
    for (const auto& p : r.points) k += p.value >= a ? 1 : 0;
    c.push_back(static_cast<double>(k));
  }
  return c;
}

double count_limit(double a, double theta, double sigma2) {
  return std::exp(-theta * a) / (theta * std::sqrt(2 * kPi * sigma2));
}

std::vector<CountRow> count_curve(Batch batch, const std::vector<double>& a_grid, double theta, double sigma2,
                                  double window) {
  std::vector<CountRow> rows;
  for (double a : a_grid) {
    if (a < window) fail(ErrorKind::window, "count level " + std::to_string(a) + " is below the recorded window");
    const Estimate e = mean_se(counts_above(batch, a));
    rows.push_back(CountRow{a, e.value, e.se, count_limit(a, theta, sigma2)});
  }
  return rows;
}

double mixture_cdf(double x, double theta, double sigma2, std::span<const double> w) {
  const double scale = std::exp(-theta * x) / (theta * std::sqrt(2 * kPi * sigma2));
  if (w.empty()) return std::exp(-scale);
  double s = 0;
  for (double v : w) s += std::exp(-v * scale);
  return s / static_cast<double>(w.size());
}

KsResult ks_statistic(std::vector<double> values, const std::function<double(double)>& cdf, double floor) {
  KsResult res;
  res.samples = values.size();
  if (values.empty()) return res;
  std::sort(values.begin(), values.end());
  const double R = static_cast<double>(values.size());
  double d = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= floor)) continue;
    if (i > 0 && values[i] == values[i - 1]) continue;
    std::size_t j = i;
    while (j + 1 < values.size() && values[j + 1] == values[i]) ++j;
    const double F = cdf(values[i]);
    d = std::max(d, std::abs(F - static_cast<double>(i) / R));
    d = std::max(d, std::abs(static_cast<double>(j + 1) / R - F));
  }
  res.statistic = d;
  res.critical_1pct = 1.63 / std::sqrt(R);
  return res;
}

KsResult max_gumbel_test(Batch batch, double theta, double sigma2, double window) {
  std::vector<double> maxima;
  maxima.reserve(batch.size());
  for (const auto& r : batch) maxima.push_back(r.max_recentred);
  const auto w = w_samples(batch);
  return ks_statistic(std::move(maxima), [&](double x) { return mixture_cdf(x, theta, sigma2, w); }, window);
}

OverlapStat overlap_vanishing(Batch batch, double a) {
  OverlapStat out;
  std::vector<double> close_pairs, all_pairs;
  for (const auto& r : batch) {
    std::map<std::uint32_t, double> by_first;
    double n = 0;
    for (const auto& p : r.points) {
      if (p.value < a || p.address.path.empty()) continue;
      by_first[p.address.path[0]] += 1;
      n += 1;
    }
    double close = 0;
    for (const auto& [first, c] : by_first) close += c * (c - 1) / 2;
    close_pairs.push_back(close);
    all_pairs.push_back(n * (n - 1) / 2);
  }
  out.pairs = mean_se(close_pairs);
  const Estimate all = mean_se(all_pairs);
  if (all.value > 0) {
    out.fraction = out.pairs.value / all.value;
    // Ratio estimator: SE of mean(close - fraction * all) / mean(all).
    std::vector<double> resid;
    for (std::size_t i = 0; i < close_pairs.size(); ++i) resid.push_back(close_pairs[i] - out.fraction * all_pairs[i]);
    out.fraction_se = mean_se(resid).se / all.value;
  }
  return out;
}

Estimate barrier_violation_rate(Batch batch) {
  std::vector<double> v;
  v.reserve(batch.size());
  for (const auto& r : batch) v.push_back(r.violated_R ? 1.0 : 0.0);
  return mean_se(v);
}

Estimate factorial_gap(Batch batch, double a) {
  const auto n = counts_above(batch, a);
  const Estimate mu = mean_se(n);
  std::vector<double> ff, psi;
  for (double x : n) {
    ff.push_back(x * (x - 1));
    psi.push_back(x * (x - 1) - 2 * mu.value * x);
  }
  Estimate out;
  out.value = mean_se(ff).value - mu.value * mu.value;
  out.se = mean_se(psi).se;
  return out;
}

StatsReport analyze(Batch batch, const ModelSpec& spec, const CalibratedParams& params, double window,
                    const AnalyzeOptions& options) {
  StatsReport rep;
  rep.n = params.n;
  rep.replicates = batch.size();
  if (batch.empty()) return rep;
  const double th = params.theta_star;
  const double s2 = params.sigma2;
  const auto w = w_samples(batch);
  for (const auto& text : options.phis) {
    const TestFunction phi = TestFunction::parse(text);
    LaplaceRow row;
    row.phi_id = phi.id();
    row.empirical = laplace_empirical(batch, phi, window);
    row.limit = laplace_limit(phi, th, s2, w);
    row.prelimit =
        prelimit_laplace(phi, th, s2, spec.offspring, params.b_n, options.prelimit_samples, options.seed);
    rep.laplace.push_back(row);
  }
  rep.counts = count_curve(batch, options.a_grid, th, s2, window);
  rep.ks = max_gumbel_test(batch, th, s2, window);
  rep.overlap = overlap_vanishing(batch, std::max(options.overlap_a, window));
  rep.violation = barrier_violation_rate(batch);
  rep.factorial = factorial_gap(batch, std::max(options.overlap_a, window));
  return rep;
}

}  // namespace grem::stats
