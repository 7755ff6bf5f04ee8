#include "branchmc/branching.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace branchmc {

namespace {
constexpr double kTimeEps = 1e-12;
}

AlignMode align_from_string(const std::string& s) {
  if (s == "split-increment" || s == "split") return AlignMode::SplitIncrement;
  if (s == "snap-to-coarse-grid" || s == "snap")
    return AlignMode::SnapToCoarseGrid;
  throw std::runtime_error("unknown alignment mode: " + s);
}

std::string to_string(AlignMode m) {
  return m == AlignMode::SplitIncrement ? "split-increment"
                                        : "snap-to-coarse-grid";
}

BranchIndex BranchIndex::parent() const {
  if (depth == 0) throw std::logic_error("root has no parent");
  BranchIndex p;
  p.depth = depth - 1;
  p.code = code & ((std::uint64_t(1) << p.depth) - 1);
  return p;
}

int BranchIndex::symbol(std::uint32_t j) const {
  if (j >= depth) throw std::out_of_range("symbol index past depth");
  return (code >> j) & 1u ? +1 : -1;
}

std::uint32_t BranchIndex::meet_depth(const BranchIndex& u,
                                      const BranchIndex& v) {
  std::uint32_t m = std::min(u.depth, v.depth);
  std::uint64_t mask = m == 64 ? ~std::uint64_t(0)
                               : (std::uint64_t(1) << m) - 1;
  std::uint64_t diff = (u.code ^ v.code) & mask;
  if (diff == 0) return m;
  return std::uint32_t(std::countr_zero(diff));
}

std::uint32_t compute_depth(double h, double tau0, double eta) {
  if (!(h > 0) || !(tau0 > 0) || !(eta > 0))
    throw std::runtime_error("compute_depth: h, tau0, eta must be positive");
  double v = std::log2(tau0 / h) / eta;
  if (v < 0) return 0;
  // Nudge so exactly representable boundaries (the power-of-two defaults)
  // are not lost to rounding.
  return std::uint32_t(std::floor(v + 1e-9));
}

BranchSchedule make_schedule(int level, double h0, int M, double tau0,
                             double eta, AlignMode align) {
  if (level < 0) throw std::runtime_error("level must be >= 0");
  if (!(h0 > 0) || !(h0 <= 1.0)) throw std::runtime_error("h0 must be in (0,1]");
  if (M < 2) throw std::runtime_error("refinement factor must be >= 2");
  if (!(tau0 > 0) || !(tau0 <= 1.0))
    throw std::runtime_error("tau0 must be in (0,1]");
  if (!(eta > 0)) throw std::runtime_error("eta must be > 0");

  BranchSchedule s;
  s.level = level;
  s.refinement = M;
  s.tau0 = tau0;
  s.eta = eta;
  s.align = align;
  s.h_fine = h0 * std::pow(double(M), -level);
  s.h_coarse = level > 0 ? s.h_fine * M : h0;
  s.depth = compute_depth(s.h_fine, tau0, eta);

  // Snapping rounds to the coarse grid so that every segment is a whole
  // number of coarse steps; at level 0 there is no coarse path, so branch
  // times snap to the only grid there is.
  double snap_h = level > 0 ? s.h_coarse : s.h_fine;
  double prev = 0.0;
  for (std::uint32_t k = 0; k < s.depth; ++k) {
    double t = 1.0 - tau0 * std::pow(2.0, -eta * double(k));
    if (align == AlignMode::SnapToCoarseGrid) {
      // Ties round toward the earlier grid point so the final segment
      // (branch time, 1] keeps positive length.
      double q = std::ceil(t / snap_h - 0.5);
      double lim = std::round(1.0 / snap_h) - 1.0;
      q = std::clamp(q, 0.0, lim);
      t = q * snap_h;
    }
    if (t < prev) t = prev;
    if (k > 0 && t <= prev + kTimeEps) s.merged_events++;
    s.branch_times.push_back(t);
    prev = t;
  }
  return s;
}

std::vector<double> segment_times(const BranchSchedule& sched) {
  std::vector<double> out;
  out.push_back(0.0);
  for (double t : sched.branch_times)
    if (t > out.back() + kTimeEps) out.push_back(t);
  out.push_back(1.0);
  return out;
}

std::vector<std::uint64_t> pair_meet_census(std::uint32_t depth) {
  std::vector<std::uint64_t> census(depth);
  for (std::uint32_t m = 0; m < depth; ++m)
    census[m] = std::uint64_t(1) << (2 * depth - m - 1);
  return census;
}

CoupledPath::CoupledPath(const ModelSpec& model, Scheme scheme, int level,
                         double h0, int M)
    : model_(&model),
      scheme_(scheme),
      level_(level),
      refinement_(M),
      h_fine_(h0 * std::pow(double(M), -level)),
      h_coarse_(h_fine_ * M) {
  fine_ = model.x0;
  coarse_ = model.x0;
  pend_fine_.fill(0.0);
  pend_coarse_.fill(0.0);
  if (scheme == Scheme::AntitheticCC && model.kind != ModelKind::ClarkCameron)
    throw std::runtime_error(
        "antithetic truncated Milstein requires the clark-cameron model");
}

void CoupledPath::draw_increment(double dt, double* dW, WorkCounter& work) {
  double sd = std::sqrt(dt);
  for (int c = 0; c < model_->d_prime; ++c) {
    key_.channel = std::uint32_t(c);
    dW[c] = sd * standard_normal(key_);
  }
  key_.channel = 0;
  key_.step++;
  work.increments_generated++;
}

void CoupledPath::finish_fine_step(WorkCounter& work) {
  (void)work;
  double t0 = double(n_fine_) * h_fine_;
  StateVec next{};
  switch (scheme_) {
    case Scheme::Euler:
      euler_step(*model_, fine_.data(), t0, h_fine_, pend_fine_.data(),
                 next.data());
      break;
    case Scheme::Milstein:
      if (model_->kind == ModelKind::ClarkCameron) {
        auto x = cc_truncated_milstein_step({fine_[0], fine_[1]}, fine_[0],
                                            {pend_fine_[0], pend_fine_[1]});
        next[0] = x[0];
        next[1] = x[1];
      } else {
        milstein_step_gbm(*model_, fine_.data(), t0, h_fine_,
                          pend_fine_.data(), next.data());
      }
      break;
    case Scheme::AntitheticCC: {
      // Fine truncated Milstein substep; antithetic and coarse updates are
      // applied when the pair making up a coarse step completes.
      std::array<double, 2> dw{pend_fine_[0], pend_fine_[1]};
      auto xf = cc_truncated_milstein_step({w1_, x2f_}, w1_, dw);
      x2f_ = xf[1];
      if (level_ > 0) {
        if (!cc_mid_pair_) {
          cc_first_ = dw;
          cc_mid_pair_ = true;
        } else {
          auto xa = cc_antithetic_pair_of_steps({w1_coarse_, x2a_}, w1_coarse_,
                                                cc_first_, dw);
          x2a_ = xa[1];
          std::array<double, 2> dwc{cc_first_[0] + dw[0], cc_first_[1] + dw[1]};
          auto xc = cc_truncated_milstein_step({w1_coarse_, x2c_}, w1_coarse_,
                                               dwc);
          x2c_ = xc[1];
          cc_mid_pair_ = false;
          w1_coarse_ = w1_ + dw[0];
          n_coarse_++;
        }
      }
      w1_ += dw[0];
      next[0] = w1_;
      next[1] = x2f_;
      break;
    }
  }
  fine_ = next;
  if (scheme_ != Scheme::AntitheticCC) {
    for (int c = 0; c < model_->d_prime; ++c) {
      pend_coarse_[c] += pend_fine_[c];
    }
  }
  pend_fine_.fill(0.0);
  n_fine_++;
  t_ = double(n_fine_) * h_fine_;

  if (scheme_ != Scheme::AntitheticCC && level_ > 0 &&
      n_fine_ % refinement_ == 0) {
    double tc0 = double(n_coarse_) * h_coarse_;
    StateVec nxt{};
    if (scheme_ == Scheme::Euler)
      euler_step(*model_, coarse_.data(), tc0, h_coarse_, pend_coarse_.data(),
                 nxt.data());
    else if (model_->kind == ModelKind::ClarkCameron) {
      auto x = cc_truncated_milstein_step({coarse_[0], coarse_[1]}, coarse_[0],
                                          {pend_coarse_[0], pend_coarse_[1]});
      nxt[0] = x[0];
      nxt[1] = x[1];
    } else {
      milstein_step_gbm(*model_, coarse_.data(), tc0, h_coarse_,
                        pend_coarse_.data(), nxt.data());
    }
    coarse_ = nxt;
    pend_coarse_.fill(0.0);
    n_coarse_++;
  }
}

void CoupledPath::advance_to(double t_target, WorkCounter& work) {
  if (t_target < t_ - kTimeEps)
    throw std::logic_error("advance_to: target behind current time");
  if (t_target > 1.0 + kTimeEps)
    throw std::logic_error("advance_to: target past terminal time");

  DriveVec dW{};
  if (scheme_ == Scheme::AntitheticCC) {
    // Snap alignment keeps targets on the fine grid: whole steps only.
    double r = t_target / h_fine_;
    if (std::abs(r - std::round(r)) > 1e-9)
      throw std::logic_error(
          "antithetic scheme requires grid-aligned branch times");
    while (t_ < t_target - kTimeEps) {
      draw_increment(h_fine_, pend_fine_.data(), work);
      finish_fine_step(work);
    }
    return;
  }

  while (t_ < t_target - kTimeEps) {
    double step_end = double(n_fine_ + 1) * h_fine_;
    bool full = step_end <= t_target + kTimeEps;
    double t_next = full ? step_end : t_target;
    double dt = t_next - t_;
    if (dt > kTimeEps) {
      draw_increment(dt, dW.data(), work);
      for (int c = 0; c < model_->d_prime; ++c) pend_fine_[c] += dW[c];
    }
    t_ = t_next;
    if (full) finish_fine_step(work);
  }
}

StateVec CoupledPath::fine_state() const { return fine_; }

StateVec CoupledPath::coarse_state() const {
  StateVec out{};
  if (scheme_ == Scheme::AntitheticCC) {
    out[0] = w1_;
    out[1] = x2c_;
  } else {
    out = coarse_;
  }
  return out;
}

StateVec CoupledPath::anti_state() const {
  StateVec out{};
  out[0] = w1_;
  out[1] = x2a_;
  return out;
}

namespace {

LeafOutcome make_leaf(const CoupledPath& p) {
  LeafOutcome leaf;
  leaf.leaf.code = p.key().branch_code;
  leaf.leaf.depth = p.key().branch_depth;
  leaf.fine = p.fine_state();
  leaf.has_coarse = p.has_coarse();
  if (leaf.has_coarse) leaf.coarse = p.coarse_state();
  leaf.has_anti = p.has_anti();
  if (leaf.has_anti) leaf.anti = p.anti_state();
  return leaf;
}

void walk(CoupledPath& path, const BranchSchedule& sched, std::uint32_t event,
          WorkCounter& work, std::vector<LeafOutcome>& leaves) {
  double target = event < sched.depth ? sched.branch_times[event] : 1.0;
  path.advance_to(target, work);
  if (event == sched.depth) {
    leaves.push_back(make_leaf(path));
    return;
  }
  StreamKey at_fork = path.key();
  CoupledPath low = path;  // shares the pending part of a straddled step
  low.set_key(child_key(at_fork, -1));
  walk(low, sched, event + 1, work, leaves);
  path.set_key(child_key(at_fork, +1));
  walk(path, sched, event + 1, work, leaves);
}

}  // namespace

WorkCounter simulate_tree(const ModelSpec& model, Scheme scheme,
                          const BranchSchedule& sched, std::uint64_t replicate,
                          std::uint64_t master_seed,
                          std::vector<LeafOutcome>& leaves) {
  leaves.clear();
  leaves.reserve(sched.leaf_count());
  CoupledPath root(model, scheme, sched.level,
                   sched.h_fine * std::pow(double(sched.refinement),
                                           sched.level),
                   sched.refinement);
  StreamKey k;
  k.master_seed = master_seed;
  k.level = std::uint32_t(sched.level);
  k.replicate = replicate;
  root.set_key(k);
  WorkCounter work;
  walk(root, sched, 0, work, leaves);
  return work;
}

}  // namespace branchmc
