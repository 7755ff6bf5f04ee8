#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "branchmc/models.hpp"
#include "branchmc/rng.hpp"
#include "branchmc/schemes.hpp"

namespace branchmc {

// How branch times that fall off the discretization grid are handled:
// either the straddled increment is split into a shared part and per-child
// parts, or the branch time is rounded to the nearest coarse timestep.
enum class AlignMode { SplitIncrement, SnapToCoarseGrid };

AlignMode align_from_string(const std::string& s);
std::string to_string(AlignMode m);

// Node label u in {-1,+1}^depth, bit j = child choice at depth j (+1 -> 1).
struct BranchIndex {
  std::uint64_t code = 0;
  std::uint32_t depth = 0;

  BranchIndex parent() const;
  int symbol(std::uint32_t j) const;  // +1 or -1
  // Length of the longest common prefix |u ^ v|_0.
  static std::uint32_t meet_depth(const BranchIndex& u, const BranchIndex& v);
  friend bool operator==(const BranchIndex&, const BranchIndex&) = default;
};

// hat(ell) = max(0, floor(log2(tau0/h)/eta)).
std::uint32_t compute_depth(double h, double tau0, double eta);

// Where and how a level-ell tree branches: events at times 1 - tau_k with
// tau_k = tau0 2^{-eta k}, k = 0..depth-1.
struct BranchSchedule {
  int level = 0;
  double h_fine = 0.5;
  double h_coarse = 1.0;  // = M * h_fine; meaningful for level >= 1
  int refinement = 2;     // M
  double tau0 = 0.5;
  double eta = 1.0;
  AlignMode align = AlignMode::SplitIncrement;
  std::uint32_t depth = 0;           // hat(ell)
  std::vector<double> branch_times;  // non-decreasing, size = depth
  int merged_events = 0;             // snapped collisions (reported, not fatal)

  std::uint64_t leaf_count() const { return std::uint64_t(1) << depth; }
};

BranchSchedule make_schedule(int level, double h0, int M, double tau0,
                             double eta, AlignMode align);

// 0 < t_1 < ... < 1 with duplicate (merged) branch times collapsed.
std::vector<double> segment_times(const BranchSchedule& sched);

// census[m] = number of ordered pairs (u,v), u != v, of depth-hat(ell)
// leaves whose meet depth is m; equals 2^{2 depth - m - 1}.
std::vector<std::uint64_t> pair_meet_census(std::uint32_t depth);

struct WorkCounter {
  std::uint64_t increments_generated = 0;
};

struct LeafOutcome {
  BranchIndex leaf;
  StateVec fine{};
  StateVec coarse{};
  StateVec anti{};
  bool has_coarse = false;
  bool has_anti = false;
};

// A coupled fine/coarse (and, for the antithetic scheme, antithetic) path
// advanced increment by increment from keyed noise. Copyable: a copy forks
// the path, sharing all history including any partially consumed timestep.
class CoupledPath {
 public:
  CoupledPath(const ModelSpec& model, Scheme scheme, int level, double h0,
              int M);

  void set_key(const StreamKey& k) { key_ = k; }
  const StreamKey& key() const { return key_; }

  // Advances all carried paths to t_target in [t(), 1], drawing increments
  // from the current key stream.
  void advance_to(double t_target, WorkCounter& work);

  double t() const { return t_; }
  int level() const { return level_; }
  double h_fine() const { return h_fine_; }

  // Terminal (or current grid-time) states; valid once t() is on the fine
  // (and for coarse, the coarse) grid.
  StateVec fine_state() const;
  StateVec coarse_state() const;
  StateVec anti_state() const;
  bool has_coarse() const { return level_ > 0; }
  bool has_anti() const { return scheme_ == Scheme::AntitheticCC && level_ > 0; }

 private:
  void draw_increment(double dt, double* dW, WorkCounter& work);
  void finish_fine_step(WorkCounter& work);

  const ModelSpec* model_;
  Scheme scheme_;
  int level_;
  int refinement_;
  double h_fine_;
  double h_coarse_;
  StreamKey key_;
  double t_ = 0.0;
  std::int64_t n_fine_ = 0;   // completed fine steps
  std::int64_t n_coarse_ = 0;
  // Euler / Milstein coupled pair.
  StateVec fine_{};
  StateVec coarse_{};
  DriveVec pend_fine_{};    // increments inside the current fine step
  DriveVec pend_coarse_{};  // fine-step increments inside the current coarse step
  // Clark-Cameron antithetic triple.
  double w1_ = 0.0;             // exact W_1 at the current fine grid time
  double w1_coarse_ = 0.0;      // W_1 at the current coarse step start
  double x2f_ = 0.0, x2a_ = 0.0, x2c_ = 0.0;
  std::array<double, 2> cc_first_{};  // stashed first fine increment of a pair
  bool cc_mid_pair_ = false;
};

// Walks the branching tree of `sched` depth-first: particles share keyed
// increments up to each branch time and fork into two children consuming
// independent streams afterwards. Returns the leaves (DFS order, -1 child
// first) and counts every Brownian vector increment drawn.
WorkCounter simulate_tree(const ModelSpec& model, Scheme scheme,
                          const BranchSchedule& sched, std::uint64_t replicate,
                          std::uint64_t master_seed,
                          std::vector<LeafOutcome>& leaves);

}  // namespace branchmc
