#include "branchmc/estimators.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace branchmc {

bool DigitalSet::contains(const double* x, int d) const {
  switch (kind) {
    case Kind::GbmMeanBelow: {
      double m = 0;
      for (int i = 0; i < d; ++i) m += x[i];
      return m / d < threshold;
    }
    case Kind::CcCorner:
      return x[0] >= threshold && x[1] >= threshold;
    case Kind::CcHalfplaneX1:
      return x[0] >= threshold;
    case Kind::CcHalfplaneX2:
      return x[1] >= threshold;
    case Kind::All:
      return true;
  }
  return false;
}

double DigitalSet::dist(const double* x, int d) const {
  switch (kind) {
    case Kind::GbmMeanBelow: {
      double m = 0;
      for (int i = 0; i < d; ++i) m += x[i];
      // Euclidean distance to the hyperplane {mean = K}.
      return std::abs(m / d - threshold) * std::sqrt(double(d));
    }
    case Kind::CcCorner: {
      double a = x[0] - threshold, b = x[1] - threshold;
      if (a >= 0 && b >= 0) return std::min(a, b);      // inside
      if (a < 0 && b < 0) return std::hypot(a, b);      // opposite corner
      return std::min(std::abs(a), std::abs(b));
    }
    case Kind::CcHalfplaneX1:
      return std::abs(x[0] - threshold);
    case Kind::CcHalfplaneX2:
      return std::abs(x[1] - threshold);
    case Kind::All:
      return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

DigitalSet make_set(const std::string& name, double threshold) {
  DigitalSet s;
  s.threshold = threshold;
  if (name == "gbm-mean-below") {
    s.kind = DigitalSet::Kind::GbmMeanBelow;
  } else if (name == "cc-corner") {
    s.kind = DigitalSet::Kind::CcCorner;
  } else if (name == "cc-halfplane" || name == "cc-halfplane-x2") {
    s.kind = DigitalSet::Kind::CcHalfplaneX2;
  } else if (name == "cc-halfplane-x1") {
    s.kind = DigitalSet::Kind::CcHalfplaneX1;
  } else if (name == "all") {
    s.kind = DigitalSet::Kind::All;
  } else {
    throw std::runtime_error("unknown digital set: " + name);
  }
  s.name = name;
  return s;
}

double delta_p_plain(const StateVec& fine, const StateVec& coarse,
                     const DigitalSet& set, int d, int level) {
  double pf = set.contains(fine.data(), d) ? 1.0 : 0.0;
  if (level == 0) return pf;
  double pc = set.contains(coarse.data(), d) ? 1.0 : 0.0;
  return pf - pc;
}

double delta_p_antithetic(const StateVec& fine, const StateVec& anti,
                          const StateVec& coarse, const DigitalSet& set, int d,
                          int level) {
  double pf = set.contains(fine.data(), d) ? 1.0 : 0.0;
  if (level == 0) return pf;
  double pa = set.contains(anti.data(), d) ? 1.0 : 0.0;
  double pc = set.contains(coarse.data(), d) ? 1.0 : 0.0;
  return 0.5 * (pf + pa) - pc;
}

void validate(EstimatorConfig& cfg) {
  if (cfg.refinement < 2)
    throw std::runtime_error("refinement factor must be >= 2");
  if (!(cfg.h0 > 0) || cfg.h0 > 1.0)
    throw std::runtime_error("h0 must lie in (0, 1]");
  double steps0 = 1.0 / cfg.h0;
  if (std::abs(steps0 - std::round(steps0)) > 1e-9)
    throw std::runtime_error("1/h0 must be an integer number of steps");
  if (!(cfg.tau0 > 0) || cfg.tau0 > 1.0)
    throw std::runtime_error("tau0 must lie in (0, 1]");
  if (!(cfg.eta > 0)) throw std::runtime_error("eta must be > 0");
  if (cfg.scheme == Scheme::AntitheticCC) {
    if (cfg.model.kind != ModelKind::ClarkCameron)
      throw std::runtime_error(
          "scheme antithetic requires model clark-cameron");
    cfg.align = AlignMode::SnapToCoarseGrid;
  }
  if (cfg.scheme == Scheme::Milstein && !cfg.model.supports_milstein)
    throw std::runtime_error("model " + cfg.model.name +
                             " has no Milstein scheme");
}

BranchSchedule schedule_for(const EstimatorConfig& cfg, int level) {
  if (!cfg.branching) {
    BranchSchedule s = make_schedule(level, cfg.h0, cfg.refinement, cfg.tau0,
                                     cfg.eta, cfg.align);
    s.depth = 0;
    s.branch_times.clear();
    s.merged_events = 0;
    return s;
  }
  return make_schedule(level, cfg.h0, cfg.refinement, cfg.tau0, cfg.eta,
                       cfg.align);
}

LevelSample branching_sample(const EstimatorConfig& cfg, int level,
                             std::uint64_t replicate) {
  BranchSchedule sched = schedule_for(cfg, level);
  std::vector<LeafOutcome> leaves;
  return branching_sample(cfg, sched, level, replicate, leaves);
}

LevelSample branching_sample(const EstimatorConfig& cfg,
                             const BranchSchedule& sched, int level,
                             std::uint64_t replicate,
                             std::vector<LeafOutcome>& leaves) {
  WorkCounter wc = simulate_tree(cfg.model, cfg.scheme, sched, replicate,
                                 cfg.master_seed, leaves);
  double sum = 0.0;
  int d = cfg.model.d;
  for (const LeafOutcome& leaf : leaves) {
    if (cfg.scheme == Scheme::AntitheticCC && leaf.has_anti)
      sum += delta_p_antithetic(leaf.fine, leaf.anti, leaf.coarse, cfg.set, d,
                                level);
    else
      sum += delta_p_plain(leaf.fine, leaf.coarse, cfg.set, d, level);
  }
  LevelSample out;
  out.value = sum / double(leaves.size());
  out.work = double(wc.increments_generated);
  return out;
}

}  // namespace branchmc
