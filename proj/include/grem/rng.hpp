#pragma once

#include <cstdint>

// Counter-based hierarchical generator. A node key is a hash of its parent key and
// child index; every draw is a hash of (key, purpose, counter), so any node's
// randomness can be reproduced without replaying its siblings.

namespace grem::rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t child_key(std::uint64_t parent, std::uint64_t index) {
  return mix64(parent ^ mix64(index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL));
}

inline std::uint64_t root_key(std::uint64_t master_seed, std::uint64_t replicate_id) {
  return child_key(mix64(master_seed ^ 0x6a09e667f3bcc909ULL), replicate_id);
}

enum class Purpose : std::uint64_t {
  offspring = 0x243f6a8885a308d3ULL,
  displacement = 0x13198a2e03707344ULL,
  spine = 0xa4093822299f31d0ULL,
  weights = 0x082efa98ec4e6c89ULL,
  leaf_skip = 0xbe5466cf34e90c6cULL,
};

// Maps 52 random bits to the open interval (0,1) as (2j+1) 2^-53; 1-u is exact.
inline double to_unit(std::uint64_t bits) {
  return static_cast<double>((bits >> 12) * 2 + 1) * 0x1.0p-53;
}

class Stream {
 public:
  Stream(std::uint64_t key, Purpose purpose) : state_(mix64(key ^ static_cast<std::uint64_t>(purpose))) {}

  std::uint64_t next_u64() { return mix64(state_ + (++counter_) * kGolden); }
  double uniform() { return to_unit(next_u64()); }

 private:
  std::uint64_t state_;
  std::uint64_t counter_ = 0;
};

}  // namespace grem::rng
