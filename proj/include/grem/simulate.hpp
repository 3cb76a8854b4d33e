#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "grem/calibration.hpp"
#include "grem/model.hpp"
#include "grem/rng.hpp"

namespace grem {

struct PruneConfig {
  bool enabled = true;
  // Upper prune: a node at level k is expanded only if x <= barrier(k) + margin.
  BarrierKind reference = BarrierKind::F;
  std::optional<double> margin;  // default |a_win| + 3/theta* + 5 sigma sqrt(b_n)
  // Reach prune: skip a subtree whose expected number of descendants reaching the
  // window (or crossing R_n) is below reach_epsilon.
  bool reach = true;
  double reach_epsilon = 1e-12;
};

struct SimulationLimits {
  std::uint64_t max_children = std::uint64_t{1} << 31;
  std::uint64_t max_points = 20'000'000;
};

struct NodeAddress {
  std::vector<std::uint32_t> path;
  int level() const { return static_cast<int>(path.size()); }
};

struct Point {
  double value = 0;  // S_u - m_n
  NodeAddress address;
};

struct RunResult {
  std::uint64_t replicate_id = 0;
  std::uint64_t seed = 0;
  std::vector<Point> points;
  std::uint64_t leaf_count = 0;
  double W = 0;
  double max_recentred = 0;  // -inf when no point reached the window
  bool violated_R = false;
  // overlap_histogram[j] = number of unordered point pairs with |u^v| = j.
  std::vector<std::uint64_t> overlap_histogram;
  double pruned_mass_bound = 0;
  std::uint64_t nodes_expanded = 0;

  bool operator==(const RunResult&) const = default;
};

bool operator==(const NodeAddress& a, const NodeAddress& b);
bool operator==(const Point& a, const Point& b);

// Generation of the most recent common ancestor of two leaves.
int overlap(const NodeAddress& a, const NodeAddress& b);
// hist[j] = number of unordered pairs with overlap j, j < k_n.
std::vector<std::uint64_t> overlap_histogram(const std::vector<Point>& points, int k_n);

double default_window(const CalibratedParams& p);
double default_margin(const CalibratedParams& p, double window);

// Z_{b} of a Galton-Watson process started from one individual.
std::uint64_t sample_offspring_count(const OffspringLaw& offspring, int b, rng::Stream& stream,
                                     std::uint64_t cap = std::uint64_t{1} << 31);

// Y_b: sum of b fine steps (drawn directly as N(0, b) for the Gaussian law).
double sample_edge_displacement(const DisplacementLaw& law, int b, rng::Stream& stream);

struct SimulationSetup {
  ModelSpec spec;
  CalibratedParams params;
  PruneConfig prune;
  double window = 0;  // a_win, relative to m_n
  SimulationLimits limits;
};

SimulationSetup make_setup(const ModelSpec& spec, const CalibratedParams& params, const PruneConfig& prune = {},
                           std::optional<double> window = std::nullopt);

RunResult run_replicate(const SimulationSetup& setup, std::uint64_t master_seed, std::uint64_t replicate_id);

// Replicates 0..R-1; identical output for every thread count.
std::vector<RunResult> run_batch(const SimulationSetup& setup, std::uint64_t master_seed, std::uint64_t replicates,
                                 unsigned threads = 1);

}  // namespace grem
