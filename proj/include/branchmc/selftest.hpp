#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "branchmc/branching.hpp"

namespace branchmc {

// Independent count of the Brownian vector increments a tree walk must
// draw: segment by segment, each of the 2^s particles alive in segment s
// needs one draw per sub-interval cut by the fine grid. Never touches the
// path code's counter.
std::uint64_t closed_form_tree_work(const BranchSchedule& sched);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Fast internal consistency checks (keyed noise, estimator identities,
// sample allocation, determinism). Intended to finish in well under a
// minute.
std::vector<CheckResult> run_selftest(std::uint64_t seed, int threads);

}  // namespace branchmc
