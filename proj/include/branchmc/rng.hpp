#pragma once

#include <cstdint>
#include <stdexcept>

namespace branchmc {

// Key identifying a single standard-normal variate. Every Brownian increment
// in the library is a pure function of one of these, which is what makes
// tree branching and deterministic parallel sampling possible: any path
// segment can be replayed from its keys alone.
struct StreamKey {
  std::uint64_t master_seed = 0;
  std::uint32_t level = 0;
  std::uint64_t replicate = 0;
  std::uint64_t branch_code = 0;  // bit j = child choice at depth j (+1 -> 1)
  std::uint32_t branch_depth = 0;
  std::uint32_t segment = 0;      // inter-branch-time segment index
  std::uint32_t step = 0;         // increment counter within segment
  std::uint32_t channel = 0;      // Brownian component index

  friend bool operator==(const StreamKey&, const StreamKey&) = default;
};

// Deterministic standard normal variate; counter-based (keyed hash of the
// full tuple -> uniform -> inverse CDF). Stateless and thread-safe.
double standard_normal(const StreamKey& key) noexcept;

// Uniform in (0,1), same keying scheme.
double standard_uniform(const StreamKey& key) noexcept;

// Extends branch_code by one symbol (child = +1 or -1), resets step to 0 and
// advances segment to the next index. Throws on depth overflow (>= 63).
StreamKey child_key(const StreamKey& parent, int child);

// Inverse of the standard normal CDF (Wichura's AS241 rational
// approximation, double precision). Exposed for tests.
double inverse_normal_cdf(double p);

// Standard normal CDF via erfc.
double normal_cdf(double x) noexcept;

}  // namespace branchmc
