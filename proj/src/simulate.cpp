#include "grem/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

#include "grem/error.hpp"
#include "grem/normal.hpp"

namespace grem {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log P(Y_r > g) bound: exact for the Gaussian law, Chernoff otherwise.
double log_tail_bound(const DisplacementLaw& law, int r, double g) {
  if (g <= 0) return 0.0;
  if (law.gaussian()) {
    const double z = g / std::sqrt(static_cast<double>(r));
    const double sf = norm_sf(z);
    if (sf > 0) return std::log(sf);
    return -0.5 * z * z - std::log(z * kSqrt2Pi);
  }
  const double mean_step = g / r;
  if (mean_step > law.support_hi()) return -kInf;
  const double th_max = std::min(50.0, std::isfinite(law.mgf_hi()) ? law.mgf_hi() * (1 - 1e-9) : 50.0);
  double lo = 0, hi = th_max;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (lambda_prime(law, mid) < mean_step) lo = mid; else hi = mid;
  }
  const double th = 0.5 * (lo + hi);
  return std::min(0.0, -th * g + r * lambda(law, th));
}

class Replicate {
 public:
  Replicate(const SimulationSetup& s, std::uint64_t seed, std::uint64_t rep)
      : s_(s), k_n_(s.params.k_n), b_(s.params.b_n), result_() {
    result_.replicate_id = rep;
    result_.seed = rng::root_key(seed, rep);
    const auto& p = s.params;
    gaussian_ = s.spec.displacement.gaussian();
    sqrt_b_ = std::sqrt(static_cast<double>(b_));
    m_n_ = p.m_n;
    floor_abs_ = p.m_n + s.window;

    const Barrier rbar = barrier_R(p);
    r_bar_.resize(k_n_ + 1);
    for (int k = 0; k <= k_n_; ++k) r_bar_[k] = rbar(k);

    upper_.assign(k_n_ + 1, kInf);
    lower_.assign(k_n_ + 1, -kInf);
    if (s.prune.enabled) {
      const double margin = s.prune.margin.value_or(default_margin(p, s.window));
      if (s.prune.reference != BarrierKind::none) {
        const Barrier ref(s.prune.reference, p);
        for (int k = 1; k <= k_n_; ++k) upper_[k] = ref(k) + margin;
      }
      if (s.prune.reach) {
        for (int k = 1; k < k_n_; ++k) lower_[k] = reach_threshold(k);
      }
    }

    const int fixed = s.spec.offspring.fixed_count();
    if (fixed > 0) {
      fixed_children_ = checked_power(static_cast<std::uint64_t>(fixed), b_, s.limits.max_children);
      subtree_leaves_.assign(k_n_ + 1, 1);
      for (int k = k_n_ - 1; k >= 0; --k) {
        const auto prev = subtree_leaves_[k + 1];
        if (prev > std::numeric_limits<std::uint64_t>::max() / fixed_children_)
          fail(ErrorKind::capacity, "leaf count exceeds 64 bits");
        subtree_leaves_[k] = prev * fixed_children_;
      }
    }
    path_.reserve(k_n_);
  }

  RunResult run() {
    expand(0, 0.0, result_.seed);
    finish();
    return std::move(result_);
  }

 private:
  static std::uint64_t checked_power(std::uint64_t r, int b, std::uint64_t cap) {
    std::uint64_t z = 1;
    for (int t = 0; t < b; ++t) {
      if (z > cap / r) fail(ErrorKind::overflow, "offspring count exceeds the per-node cap");
      z *= r;
    }
    return z;
  }

  // Largest x at level k with every reach bound below epsilon.
  double reach_threshold(int k) const {
    const double log_m = s_.params.log_m;
    const double log_eps = std::log(s_.prune.reach_epsilon);
    const auto& law = s_.spec.displacement;
    auto log_bound = [&](double x) {
      double total = -kInf;
      auto add = [&](double lb) {
        if (lb == -kInf) return;
        total = total == -kInf ? lb : std::max(total, lb) + std::log1p(std::exp(-std::abs(total - lb)));
      };
      for (int j = k + 1; j <= k_n_; ++j) {
        const int r = (j - k) * b_;
        add(r * log_m + log_tail_bound(law, r, r_bar_[j] - x));
      }
      const int r = (k_n_ - k) * b_;
      add(r * log_m + log_tail_bound(law, r, floor_abs_ - x));
      return total;
    };
    double hi = floor_abs_;
    if (log_bound(hi) <= log_eps) return hi;
    double step = 1.0 + sqrt_b_;
    double lo = hi - step;
    while (log_bound(lo) > log_eps) {
      hi = lo;
      step *= 2;
      lo -= step;
      if (step > 1e9) return -kInf;
    }
    for (int it = 0; it < 100 && hi - lo > 1e-9 * (1 + std::abs(lo)); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (log_bound(mid) > log_eps) hi = mid; else lo = mid;
    }
    return lo;
  }

  std::uint64_t children(std::uint64_t key) {
    if (fixed_children_ > 0) return fixed_children_;
    rng::Stream st(key, rng::Purpose::offspring);
    return sample_offspring_count(s_.spec.offspring, b_, st, s_.limits.max_children);
  }

  std::uint64_t count_leaves(int k, std::uint64_t key) {
    if (k == k_n_) return 1;
    if (fixed_children_ > 0) return subtree_leaves_[k];
    const std::uint64_t z = children(key);
    if (k + 1 == k_n_) return z;
    std::uint64_t total = 0;
    for (std::uint64_t i = 0; i < z; ++i) total += count_leaves(k + 1, rng::child_key(key, i));
    return total;
  }

  // Lowest uniform that can map above `level` from x, with slack for rounding.
  double u_cut(double x, double level) const {
    if (level == -kInf) return 0.0;
    if (level == kInf) return 2.0;
    return norm_cdf((level - x) / sqrt_b_) * (1.0 - 1e-9);
  }

  void record_leaf(double y, std::uint64_t i) {
    const int c = k_n_;
    if (y > r_bar_[c]) result_.violated_R = true;
    const double rel = y - m_n_;
    if (rel >= s_.window && y <= upper_[c]) {
      if (result_.points.size() >= s_.limits.max_points)
        fail(ErrorKind::capacity, "recorded points exceed the configured budget");
      Point pt;
      pt.value = rel;
      pt.address.path = path_;
      pt.address.path.push_back(static_cast<std::uint32_t>(i));
      result_.points.push_back(std::move(pt));
    }
  }

  // Gaussian leaves: jump geometrically between children landing above the lower of
  // the window floor and R_n, then draw each such child from the conditional tail.
  void expand_gaussian_leaves(double x, std::uint64_t key, std::uint64_t z) {
    const double level = std::min(floor_abs_, r_bar_[k_n_]);
    const double q = norm_sf((level - x) / sqrt_b_);
    const double log_miss = std::log1p(-q);
    if (!(q > 0) || log_miss == 0.0) return;
    rng::Stream st(key, rng::Purpose::leaf_skip);
    std::uint64_t i = 0;
    for (;;) {
      if (q < 1.0) {
        const double gap = std::floor(std::log(st.uniform()) / log_miss);
        if (gap >= static_cast<double>(z - i)) return;
        i += static_cast<std::uint64_t>(gap);
      }
      const double t = -norm_quantile(q * st.uniform());
      record_leaf(x + sqrt_b_ * t, i);
      if (++i >= z) return;
    }
  }

  void expand(int k, double x, std::uint64_t key) {
    ++result_.nodes_expanded;
    const std::uint64_t z = children(key);
    const int c = k + 1;
    const bool leaf = c == k_n_;
    if (leaf) {
      result_.leaf_count += z;
      if (gaussian_) {
        expand_gaussian_leaves(x, key, z);
        return;
      }
    }

    double u_need = 2.0;
    if (gaussian_) {
      u_need = std::min(u_cut(x, lower_[c]), u_cut(x, r_bar_[c]));
    }

    for (std::uint64_t i = 0; i < z; ++i) {
      const std::uint64_t ck = rng::child_key(key, i);
      rng::Stream st(ck, rng::Purpose::displacement);
      double y;
      if (gaussian_) {
        const double u = st.uniform();
        if (u < u_need) {
          // Certainly below the reach threshold and R_n.
          ++pruned_;
          if (fixed_children_ == 0) result_.leaf_count += count_leaves(c, ck);
          continue;
        }
        y = x + sqrt_b_ * norm_quantile(u);
      } else {
        y = x + sample_edge_displacement(s_.spec.displacement, b_, st);
      }
      if (leaf) {
        record_leaf(y, i);
        continue;
      }
      if (y > r_bar_[c]) result_.violated_R = true;
      if (y < lower_[c] || y > upper_[c]) {
        if (y < lower_[c]) ++pruned_;
        if (fixed_children_ == 0) result_.leaf_count += count_leaves(c, ck);
        continue;
      }
      path_.push_back(static_cast<std::uint32_t>(i));
      expand(c, y, ck);
      path_.pop_back();
    }
  }

  void finish() {
    if (fixed_children_ > 0 && k_n_ > 0) result_.leaf_count = subtree_leaves_[0];
    result_.W = static_cast<double>(result_.leaf_count) /
                std::pow(s_.spec.offspring.mean(), static_cast<double>(k_n_) * b_);
    result_.pruned_mass_bound = static_cast<double>(pruned_) * (s_.prune.enabled ? s_.prune.reach_epsilon : 0.0);
    result_.max_recentred = -kInf;
    for (const auto& p : result_.points) result_.max_recentred = std::max(result_.max_recentred, p.value);
    result_.overlap_histogram = overlap_histogram(result_.points, k_n_);
  }

  const SimulationSetup& s_;
  int k_n_;
  int b_;
  bool gaussian_ = false;
  double sqrt_b_ = 1;
  double m_n_ = 0;
  double floor_abs_ = 0;
  std::vector<double> r_bar_;
  std::vector<double> upper_;
  std::vector<double> lower_;
  std::uint64_t fixed_children_ = 0;
  std::vector<std::uint64_t> subtree_leaves_;
  std::vector<std::uint32_t> path_;
  std::uint64_t pruned_ = 0;
  RunResult result_;
};

}  // namespace

bool operator==(const NodeAddress& a, const NodeAddress& b) { return a.path == b.path; }
bool operator==(const Point& a, const Point& b) { return a.value == b.value && a.address == b.address; }

int overlap(const NodeAddress& a, const NodeAddress& b) {
  const std::size_t n = std::min(a.path.size(), b.path.size());
  std::size_t j = 0;
  while (j < n && a.path[j] == b.path[j]) ++j;
  return static_cast<int>(j);
}

std::vector<std::uint64_t> overlap_histogram(const std::vector<Point>& pts, int k_n) {
  std::vector<std::uint64_t> hist(static_cast<std::size_t>(std::max(k_n, 1)), 0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const auto o = static_cast<std::size_t>(overlap(pts[i].address, pts[j].address));
      ++hist[std::min(o, hist.size() - 1)];
    }
  }
  return hist;
}

double default_window(const CalibratedParams& p) { return -6.0 / p.theta_star; }

double default_margin(const CalibratedParams& p, double window) {
  return std::abs(window) + 3.0 / p.theta_star + 5.0 * std::sqrt(p.sigma2 * p.b_n);
}

std::uint64_t sample_offspring_count(const OffspringLaw& offspring, int b, rng::Stream& stream, std::uint64_t cap) {
  const int fixed = offspring.fixed_count();
  std::uint64_t z = 1;
  if (fixed > 0) {
    for (int t = 0; t < b; ++t) {
      if (z > cap / static_cast<std::uint64_t>(fixed)) fail(ErrorKind::overflow, "offspring count exceeds the per-node cap");
      z *= static_cast<std::uint64_t>(fixed);
    }
    return z;
  }
  const auto& w = offspring.weights();
  const std::size_t top = w.size() - 1;
  for (int t = 0; t < b; ++t) {
    std::uint64_t next = 0;
    for (std::uint64_t i = 0; i < z; ++i) {
      const double u = stream.uniform();
      std::size_t k = 0;
      double acc = w[0];
      while (u > acc && k < top) acc += w[++k];
      next += k;
      if (next > cap) fail(ErrorKind::overflow, "offspring count exceeds the per-node cap");
    }
    z = next;
  }
  return z;
}

double sample_edge_displacement(const DisplacementLaw& law, int b, rng::Stream& stream) {
  if (law.gaussian()) return std::sqrt(static_cast<double>(b)) * norm_quantile(stream.uniform());
  double sum = 0;
  for (int i = 0; i < b; ++i) sum += law.quantile(stream.uniform());
  return sum;
}

SimulationSetup make_setup(const ModelSpec& spec, const CalibratedParams& params, const PruneConfig& prune,
                           std::optional<double> window) {
  SimulationSetup s;
  s.spec = spec;
  s.params = params;
  s.prune = prune;
  s.window = window.value_or(default_window(params));
  if (!std::isfinite(s.window)) fail(ErrorKind::validation, "window floor must be finite");
  if (prune.margin && *prune.margin < 0) fail(ErrorKind::validation, "prune margin must be >= 0");
  if (!(prune.reach_epsilon > 0)) fail(ErrorKind::validation, "reach epsilon must be > 0");
  return s;
}

RunResult run_replicate(const SimulationSetup& setup, std::uint64_t master_seed, std::uint64_t replicate_id) {
  return Replicate(setup, master_seed, replicate_id).run();
}

std::vector<RunResult> run_batch(const SimulationSetup& setup, std::uint64_t master_seed, std::uint64_t replicates,
                                 unsigned threads) {
  if (replicates == 0) fail(ErrorKind::validation, "replicate count must be >= 1");
  std::vector<RunResult> out(replicates);
  std::vector<std::exception_ptr> errors(replicates);
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::uint64_t r = next.fetch_add(1);
      if (r >= replicates) return;
      try {
        out[r] = run_replicate(setup, master_seed, r);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::min<std::uint64_t>(replicates, 1024))));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::uint64_t r = 0; r < replicates; ++r) {
    if (!errors[r]) continue;
    try {
      std::rethrow_exception(errors[r]);
    } catch (const Error& e) {
      throw Error(e.kind(), "replicate " + std::to_string(r) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace grem
