#pragma once

#include <cstdint>
#include <string>

#include "branchmc/branching.hpp"
#include "branchmc/models.hpp"
#include "branchmc/schemes.hpp"

namespace branchmc {

// Digital payoff region S with a membership test and a distance used by the
// conditional-density diagnostics.
struct DigitalSet {
  enum class Kind { GbmMeanBelow, CcCorner, CcHalfplaneX1, CcHalfplaneX2, All };
  Kind kind = Kind::All;
  std::string name = "all";
  double threshold = 1.0;

  bool contains(const double* x, int d) const;
  // Scaled distance to the boundary of S (sign-free).
  double dist(const double* x, int d) const;
};

// Known names: gbm-mean-below, cc-corner, cc-halfplane (alias of
// cc-halfplane-x2), cc-halfplane-x1, cc-halfplane-x2, all.
DigitalSet make_set(const std::string& name, double threshold);

// Level correction from one coupled pair: 1{fine in S} - 1{coarse in S};
// at level 0 just the fine indicator.
double delta_p_plain(const StateVec& fine, const StateVec& coarse,
                     const DigitalSet& set, int d, int level);

// Antithetic variant: (1{fine} + 1{anti})/2 - 1{coarse}.
double delta_p_antithetic(const StateVec& fine, const StateVec& anti,
                          const StateVec& coarse, const DigitalSet& set, int d,
                          int level);

struct LevelSample {
  double value = 0.0;
  double work = 0.0;  // Brownian vector increments generated
};

// Everything needed to draw one multilevel correction sample.
struct EstimatorConfig {
  ModelSpec model;
  Scheme scheme = Scheme::Euler;
  DigitalSet set;
  double h0 = 0.5;
  int refinement = 2;  // M
  bool branching = true;
  double tau0 = 0.5;
  double eta = 1.0;
  AlignMode align = AlignMode::SplitIncrement;
  std::uint64_t master_seed = 0;
};

// Validates cross-field constraints and fills the alignment default
// (snap-to-coarse-grid for the antithetic scheme, split otherwise).
void validate(EstimatorConfig& cfg);

// Schedule for level `level` under cfg; depth 0 when branching is off.
BranchSchedule schedule_for(const EstimatorConfig& cfg, int level);

// One replicate of the level-`level` estimator: average of the leaf
// corrections of one branching tree (a single path pair when depth is 0).
LevelSample branching_sample(const EstimatorConfig& cfg, int level,
                             std::uint64_t replicate);

// Hot-loop variant: reuses a precomputed schedule and a leaf buffer.
LevelSample branching_sample(const EstimatorConfig& cfg,
                             const BranchSchedule& sched, int level,
                             std::uint64_t replicate,
                             std::vector<LeafOutcome>& scratch);

}  // namespace branchmc
