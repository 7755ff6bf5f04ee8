#include "branchmc/mlmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace branchmc {

void MomentAccumulator::add(double y, double w) {
  n++;
  s1 += y;
  double y2 = y * y;
  s2 += y2;
  s3 += y2 * y;
  s4 += y2 * y2;
  work += w;
}

void MomentAccumulator::merge(const MomentAccumulator& o) {
  n += o.n;
  s1 += o.s1;
  s2 += o.s2;
  s3 += o.s3;
  s4 += o.s4;
  work += o.work;
}

double MomentAccumulator::mean() const { return n ? s1 / double(n) : 0.0; }

double MomentAccumulator::variance() const {
  if (n < 2) return 0.0;
  double m = mean();
  return std::max(0.0, s2 / double(n) - m * m);
}

double MomentAccumulator::m4() const {
  if (n == 0) return 0.0;
  double m = mean();
  double dn = double(n);
  // E[(Y-m)^4] expanded in raw moments.
  double c4 = s4 / dn - 4 * m * s3 / dn + 6 * m * m * s2 / dn - 3 * m * m * m * m;
  return std::max(0.0, c4);
}

double MomentAccumulator::kurtosis(bool* degenerate) const {
  double v = variance();
  if (degenerate) *degenerate = false;
  if (v <= 0 || n < 2) {
    if (degenerate) *degenerate = true;
    return std::numeric_limits<double>::infinity();
  }
  return m4() / (v * v);
}

std::vector<std::uint64_t> allocate_samples(const std::vector<double>& V,
                                            const std::vector<double>& W,
                                            double eps) {
  if (V.size() != W.size())
    throw std::runtime_error("allocate_samples: V and W size mismatch");
  if (!(eps > 0)) throw std::runtime_error("allocate_samples: eps must be > 0");
  double total = 0.0;
  for (std::size_t l = 0; l < V.size(); ++l) {
    if (V[l] < 0 || W[l] <= 0)
      throw std::runtime_error("allocate_samples: need V >= 0 and W > 0");
    total += std::sqrt(W[l] * V[l]);
  }
  std::vector<std::uint64_t> N(V.size());
  for (std::size_t l = 0; l < V.size(); ++l) {
    double nl = 2.0 / (eps * eps) * std::sqrt(V[l] / W[l]) * total;
    N[l] = std::max<std::uint64_t>(1, std::uint64_t(std::ceil(nl)));
  }
  return N;
}

namespace {
constexpr int kShards = 64;

void run_shard_range(const EstimatorConfig& cfg, const BranchSchedule& sched,
                     int level, std::uint64_t rep_begin, std::uint64_t n,
                     int shard_lo, int shard_hi,
                     std::vector<MomentAccumulator>& shards) {
  std::vector<LeafOutcome> scratch;
  for (int s = shard_lo; s < shard_hi; ++s) {
    MomentAccumulator& acc = shards[s];
    for (std::uint64_t i = std::uint64_t(s); i < n; i += kShards) {
      LevelSample smp =
          branching_sample(cfg, sched, level, rep_begin + i, scratch);
      acc.add(smp.value, smp.work);
    }
  }
}
}  // namespace

std::vector<MomentAccumulator> sample_level_shards(const EstimatorConfig& cfg,
                                                   int level,
                                                   std::uint64_t rep_begin,
                                                   std::uint64_t n,
                                                   int threads) {
  BranchSchedule sched = schedule_for(cfg, level);
  std::vector<MomentAccumulator> shards(kShards);
  threads = std::clamp(threads, 1, kShards);
  if (threads == 1) {
    run_shard_range(cfg, sched, level, rep_begin, n, 0, kShards, shards);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      int lo = t * kShards / threads;
      int hi = (t + 1) * kShards / threads;
      pool.emplace_back(run_shard_range, std::cref(cfg), std::cref(sched),
                        level, rep_begin, n, lo, hi, std::ref(shards));
    }
    for (auto& th : pool) th.join();
  }
  return shards;
}

MomentAccumulator sample_level(const EstimatorConfig& cfg, int level,
                               std::uint64_t rep_begin, std::uint64_t n,
                               int threads) {
  auto shards = sample_level_shards(cfg, level, rep_begin, n, threads);
  MomentAccumulator out;
  for (const auto& s : shards) out.merge(s);
  return out;
}

namespace {
double fit_alpha(const std::vector<MomentAccumulator>& acc, int M) {
  // Regress log_M |mean_l| on l over levels 1..L; fall back to 1.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t l = 1; l < acc.size(); ++l) {
    double m = std::abs(acc[l].mean());
    if (m <= 0) continue;
    double x = double(l), y = -std::log(m) / std::log(double(M));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    n++;
  }
  if (n < 3) return 1.0;
  double denom = double(n) * sxx - sx * sx;
  if (denom <= 0) return 1.0;
  double a = (double(n) * sxy - sx * sy) / denom;
  return std::max(0.5, a);
}
}  // namespace

MlmcResult run_mlmc(const MlmcConfig& mc, const EstimatorConfig& cfg) {
  if (!(mc.eps > 0)) throw std::runtime_error("eps must be > 0");
  if (mc.max_level < mc.min_level)
    throw std::runtime_error("max_level must be >= min_level");

  int L = mc.min_level;
  std::vector<MomentAccumulator> acc(std::size_t(L) + 1);
  std::vector<std::uint64_t> next_rep(std::size_t(L) + 1, 0);

  auto ensure = [&](int level, std::uint64_t want) {
    MomentAccumulator& a = acc[std::size_t(level)];
    if (a.n >= want) return;
    std::uint64_t extra = want - a.n;
    a.merge(sample_level(cfg, level, next_rep[std::size_t(level)], extra,
                         mc.threads));
    next_rep[std::size_t(level)] += extra;
  };

  MlmcResult res;
  res.eps = mc.eps;
  const int M = cfg.refinement;

  while (true) {
    for (int l = 0; l <= L; ++l) ensure(l, mc.warmup);

    // Re-allocate until the drawn counts support the eps^2/2 budget; the
    // variance estimates move as samples come in, so iterate a few times.
    for (int pass = 0; pass < 8; ++pass) {
      std::vector<double> V, W;
      for (int l = 0; l <= L; ++l) {
        V.push_back(std::max(acc[std::size_t(l)].variance(), 1e-16));
        W.push_back(std::max(acc[std::size_t(l)].mean_work(), 1.0));
      }
      auto N = allocate_samples(V, W, mc.eps);
      bool grew = false;
      for (int l = 0; l <= L; ++l) {
        if (acc[std::size_t(l)].n < N[std::size_t(l)]) {
          ensure(l, N[std::size_t(l)]);
          grew = true;
        }
      }
      if (!grew) break;
    }

    double alpha = mc.alpha;
    if (alpha <= 0) alpha = L >= 4 ? fit_alpha(acc, M) : 1.0;
    double denom = std::pow(double(M), alpha) - 1.0;
    res.bias_estimate = std::abs(acc[std::size_t(L)].mean()) / denom;
    if (res.bias_estimate <= mc.eps / std::sqrt(2.0)) break;
    if (L == mc.max_level) {
      res.bias_unconverged = true;
      break;
    }
    ++L;
    acc.emplace_back();
    next_rep.push_back(0);
  }

  res.levels_used = L;
  for (int l = 0; l <= L; ++l) {
    const MomentAccumulator& a = acc[std::size_t(l)];
    res.estimate += a.mean();
    res.total_work += a.work;
    MlmcLevelReport r;
    r.level = l;
    r.n = a.n;
    r.mean = a.mean();
    r.variance = a.variance();
    r.mean_work = a.mean_work();
    bool deg = false;
    r.kurtosis = a.kurtosis(&deg);
    if (deg) r.kurtosis = std::numeric_limits<double>::quiet_NaN();
    res.per_level.push_back(r);
  }
  return res;
}

}  // namespace branchmc
