#pragma once

#include <cstdint>
#include <vector>

#include "branchmc/estimators.hpp"

namespace branchmc {

// Streaming raw moments of the correction samples plus accumulated work.
struct MomentAccumulator {
  std::uint64_t n = 0;
  double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  double work = 0;

  void add(double y, double w);
  void merge(const MomentAccumulator& o);

  double mean() const;
  double variance() const;  // population second central moment
  double m2() const { return variance(); }
  double m4() const;  // fourth central moment
  // m4 / m2^2; degenerate (all samples equal) accumulators report +inf and
  // set *degenerate when asked.
  double kurtosis(bool* degenerate = nullptr) const;
  double mean_work() const { return n ? work / double(n) : 0.0; }
};

// N_ell = ceil(2 eps^-2 sqrt(V_ell / W_ell) * sum_k sqrt(W_k V_k)),
// floored at 1 sample per level.
std::vector<std::uint64_t> allocate_samples(const std::vector<double>& V,
                                            const std::vector<double>& W,
                                            double eps);

// Draws n replicates (indices rep_begin .. rep_begin+n-1) of the level
// estimator, split over 64 fixed shards by replicate index mod 64 and merged
// in shard order, so the result is bit-identical for any thread count.
// Returns the 64 per-shard accumulators (some possibly empty).
std::vector<MomentAccumulator> sample_level_shards(const EstimatorConfig& cfg,
                                                   int level,
                                                   std::uint64_t rep_begin,
                                                   std::uint64_t n,
                                                   int threads);

MomentAccumulator sample_level(const EstimatorConfig& cfg, int level,
                               std::uint64_t rep_begin, std::uint64_t n,
                               int threads);

struct MlmcLevelReport {
  int level = 0;
  std::uint64_t n = 0;
  double mean = 0, variance = 0, mean_work = 0, kurtosis = 0;
};

struct MlmcConfig {
  double eps = 0.01;
  double alpha = 1.0;  // weak rate for the bias proxy; 0 = fit when L >= 4
  int min_level = 2;   // finest level the driver starts from
  int max_level = 10;
  std::uint64_t warmup = 10000;
  int threads = 1;
};

struct MlmcResult {
  double estimate = 0;
  double eps = 0;
  int levels_used = 0;  // L (finest level)
  double bias_estimate = 0;
  double total_work = 0;
  bool bias_unconverged = false;
  std::vector<MlmcLevelReport> per_level;
};

// Standard MLMC driver: warmup samples per level, allocate to meet the
// eps^2/2 variance budget, extend L until |mean_L| / (M^alpha - 1) <=
// eps/sqrt(2) or max_level is hit (then bias_unconverged is set).
MlmcResult run_mlmc(const MlmcConfig& mc, const EstimatorConfig& cfg);

}  // namespace branchmc
