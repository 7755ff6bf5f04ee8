#include "branchmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace branchmc {

int StudyTable::col(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return int(i);
  return -1;
}

void StudyTable::add_row(std::vector<double> row) {
  if (row.size() != columns.size())
    throw std::runtime_error("StudyTable: row width mismatch");
  rows.push_back(std::move(row));
}

void StudyTable::write_csv(std::ostream& os) const {
  for (const auto& [k, v] : meta) os << "# " << k << "=" << v << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i)
    os << (i ? "," : "") << columns[i];
  os << "\n";
  os.precision(12);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      os << (i ? "," : "") << row[i];
    os << "\n";
  }
}

void StudyTable::write_csv_file(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  write_csv(f);
}

RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<double>& se) {
  if (x.size() != y.size() || (!se.empty() && se.size() != y.size()))
    throw std::runtime_error("fit_rate: input size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) continue;
    if (!se.empty() && !(se[i] < 0.2 * y[i])) continue;  // too noisy
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  if (lx.size() < 3)
    throw std::runtime_error("fit_rate: fewer than 3 usable points");
  double n = double(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
    syy += ly[i] * ly[i];
  }
  RateFit f;
  double dx = n * sxx - sx * sx;
  if (dx <= 0) throw std::runtime_error("fit_rate: degenerate abscissa");
  f.slope = (n * sxy - sx * sy) / dx;
  f.intercept = (sy - f.slope * sx) / n;
  double dy = n * syy - sy * sy;
  f.r2 = dy > 0 ? (n * sxy - sx * sy) * (n * sxy - sx * sy) / (dx * dy) : 1.0;
  f.n_used = int(lx.size());
  return f;
}

RateFit fit_rate(const StudyTable& t, const std::string& ycol,
                 const std::string& secol) {
  int cy = t.col(ycol);
  if (cy < 0) throw std::runtime_error("fit_rate: no column " + ycol);
  int cs = secol.empty() ? -1 : t.col(secol);
  if (!secol.empty() && cs < 0)
    throw std::runtime_error("fit_rate: no column " + secol);
  std::vector<double> x, y, se;
  for (const auto& row : t.rows) {
    x.push_back(row[0]);
    y.push_back(row[std::size_t(cy)]);
    if (cs >= 0) se.push_back(row[std::size_t(cs)]);
  }
  return fit_rate(x, y, se);
}

namespace {

// Spread of a per-shard statistic around the pooled value, as a standard
// error. Robust for variance and kurtosis where no simple formula applies.
double shard_se(const std::vector<double>& vals) {
  std::vector<double> v;
  for (double x : vals)
    if (std::isfinite(x)) v.push_back(x);
  if (v.size() < 2) return std::numeric_limits<double>::infinity();
  double m = 0;
  for (double x : v) m += x;
  m /= double(v.size());
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size() - 1) / double(v.size()));
}

}  // namespace

StudyTable variance_study(const EstimatorConfig& cfg, int lmin, int lmax,
                          std::uint64_t n, int threads) {
  if (lmin < 0 || lmax < lmin) throw std::runtime_error("bad level range");
  StudyTable t;
  t.columns = {"abscissa", "statistic", "stderr",      "n",
               "level",    "mean",      "mean_se",     "work",
               "kurtosis", "kurtosis_se"};
  t.meta["study"] = "variance";
  t.meta["model"] = cfg.model.name;
  t.meta["scheme"] = to_string(cfg.scheme);
  t.meta["set"] = cfg.set.name;
  t.meta["branching"] = cfg.branching ? "1" : "0";
  t.meta["samples_per_level"] = std::to_string(n);

  for (int l = lmin; l <= lmax; ++l) {
    auto shards = sample_level_shards(cfg, l, 0, n, threads);
    MomentAccumulator all;
    std::vector<double> vvar, vkurt;
    for (const auto& s : shards) {
      all.merge(s);
      if (s.n >= 2) {
        vvar.push_back(s.variance());
        vkurt.push_back(s.kurtosis());
      }
    }
    double h = cfg.h0 * std::pow(double(cfg.refinement), -l);
    bool deg = false;
    double kurt = all.kurtosis(&deg);
    t.add_row({h, all.variance(), shard_se(vvar), double(all.n), double(l),
               all.mean(), std::sqrt(all.variance() / double(all.n)),
               all.mean_work(),
               deg ? std::numeric_limits<double>::quiet_NaN() : kurt,
               shard_se(vkurt)});
  }
  return t;
}

namespace {

constexpr int kShards = 64;

// Mean and standard error of a per-outer-replicate statistic, evaluated
// shard by shard for reproducibility across thread counts.
struct OuterAccum {
  std::uint64_t n = 0;
  double s1 = 0, s2 = 0;
  void add(double x) {
    n++;
    s1 += x;
    s2 += x * x;
  }
  void merge(const OuterAccum& o) {
    n += o.n;
    s1 += o.s1;
    s2 += o.s2;
  }
  double mean() const { return n ? s1 / double(n) : 0.0; }
  double se() const {
    if (n < 2) return std::numeric_limits<double>::infinity();
    double m = mean();
    double var = std::max(0.0, s2 / double(n) - m * m);
    return std::sqrt(var / double(n));
  }
};

StreamKey outer_key(const EstimatorConfig& cfg, int level,
                    std::uint64_t outer) {
  StreamKey k;
  k.master_seed = cfg.master_seed;
  k.level = std::uint32_t(level);
  k.replicate = outer;
  return k;
}

StreamKey inner_key(const StreamKey& base, std::uint64_t inner) {
  StreamKey k = base;
  k.branch_code = inner + 1;
  k.branch_depth = 63;  // sentinel depth unreachable by tree forks
  k.segment = 1;
  k.step = 0;
  return k;
}

template <typename PerOuter>
OuterAccum run_outer(std::uint64_t n_outer, int threads, PerOuter&& body) {
  std::vector<OuterAccum> shards(kShards);
  auto run = [&](int lo, int hi) {
    for (int s = lo; s < hi; ++s)
      for (std::uint64_t i = std::uint64_t(s); i < n_outer; i += kShards)
        shards[std::size_t(s)].add(body(i));
  };
  threads = std::clamp(threads, 1, kShards);
  if (threads == 1) {
    run(0, kShards);
  } else {
    std::vector<std::thread> pool;
    for (int th = 0; th < threads; ++th)
      pool.emplace_back(run, th * kShards / threads,
                        (th + 1) * kShards / threads);
    for (auto& th : pool) th.join();
  }
  OuterAccum all;
  for (const auto& s : shards) all.merge(s);
  return all;
}

}  // namespace

StudyTable tau_study(const EstimatorConfig& cfg, int level,
                     const std::vector<double>& taus, std::uint64_t n_outer,
                     std::uint64_t n_inner, int threads) {
  if (n_inner < 2) throw std::runtime_error("tau study needs n_inner >= 2");
  double h = cfg.h0 * std::pow(double(cfg.refinement), -level);
  StudyTable t;
  t.columns = {"abscissa", "statistic", "stderr", "n", "n_inner"};
  t.meta["study"] = "tau";
  t.meta["model"] = cfg.model.name;
  t.meta["scheme"] = to_string(cfg.scheme);
  t.meta["set"] = cfg.set.name;
  t.meta["level"] = std::to_string(level);
  t.meta["h"] = std::to_string(h);

  const bool anti = cfg.scheme == Scheme::AntitheticCC;
  for (double tau : taus) {
    if (!(tau >= h - 1e-12) || !(tau <= cfg.tau0 + 1e-12))
      throw std::runtime_error("tau must lie in [h, tau0]");
    double t_split = 1.0 - tau;
    if (anti) {
      double hc = h * cfg.refinement;
      double r = t_split / hc;
      if (std::abs(r - std::round(r)) > 1e-9)
        throw std::runtime_error(
            "antithetic tau study needs 1 - tau on the coarse grid");
    }
    OuterAccum acc = run_outer(n_outer, threads, [&](std::uint64_t outer) {
      WorkCounter wc;
      CoupledPath shared(cfg.model, cfg.scheme, level, cfg.h0, cfg.refinement);
      StreamKey base = outer_key(cfg, level, outer);
      shared.set_key(base);
      shared.advance_to(t_split, wc);
      double s1 = 0, s2 = 0;
      for (std::uint64_t j = 0; j < n_inner; ++j) {
        CoupledPath cont = shared;
        cont.set_key(inner_key(base, j));
        cont.advance_to(1.0, wc);
        double dp =
            anti ? delta_p_antithetic(cont.fine_state(), cont.anti_state(),
                                      cont.coarse_state(), cfg.set,
                                      cfg.model.d, level)
                 : delta_p_plain(cont.fine_state(), cont.coarse_state(),
                                 cfg.set, cfg.model.d, level);
        s1 += dp;
        s2 += dp * dp;
      }
      double m = double(n_inner);
      double mean = s1 / m;
      double svar = std::max(0.0, (s2 - m * mean * mean) / (m - 1.0));
      // Unbiased for (E[dP | F_{1-tau}])^2.
      return mean * mean - svar / m;
    });
    t.add_row({tau, acc.mean(), acc.se(), double(acc.n), double(n_inner)});
  }
  return t;
}

StudyTable cond_density_study(const EstimatorConfig& cfg, double h_ref,
                              const std::vector<double>& taus,
                              const std::vector<double>& deltas,
                              std::uint64_t n_outer, std::uint64_t n_inner,
                              int threads) {
  if (n_inner < 2)
    throw std::runtime_error("cond-density study needs n_inner >= 2");
  double steps = 1.0 / h_ref;
  if (!(h_ref > 0) || std::abs(steps - std::round(steps)) > 1e-9)
    throw std::runtime_error("1/h_ref must be an integer");
  StudyTable t;
  t.columns = {"abscissa", "statistic", "stderr", "n", "tau", "n_inner"};
  t.meta["study"] = "cond-density";
  t.meta["model"] = cfg.model.name;
  t.meta["set"] = cfg.set.name;
  t.meta["h_ref"] = std::to_string(h_ref);

  const std::size_t nd = deltas.size();
  for (double tau : taus) {
    if (!(tau >= h_ref - 1e-12) || !(tau < 1.0))
      throw std::runtime_error("tau must lie in [h_ref, 1)");
    double t_split = 1.0 - tau;
    // One pass per tau: the inner continuations are shared by all deltas.
    std::vector<std::vector<OuterAccum>> shards(
        kShards, std::vector<OuterAccum>(nd));
    auto run = [&](int lo, int hi) {
      std::vector<double> hits(nd);
      for (int s = lo; s < hi; ++s) {
        for (std::uint64_t outer = std::uint64_t(s); outer < n_outer;
             outer += kShards) {
          WorkCounter wc;
          CoupledPath shared(cfg.model, Scheme::Euler, 0, h_ref,
                             cfg.refinement);
          StreamKey base = outer_key(cfg, 0, outer);
          shared.set_key(base);
          shared.advance_to(t_split, wc);
          std::fill(hits.begin(), hits.end(), 0.0);
          for (std::uint64_t j = 0; j < n_inner; ++j) {
            CoupledPath cont = shared;
            cont.set_key(inner_key(base, j));
            cont.advance_to(1.0, wc);
            StateVec x = cont.fine_state();
            double dist = cfg.set.dist(x.data(), cfg.model.d);
            for (std::size_t di = 0; di < nd; ++di)
              if (dist <= deltas[di]) hits[di] += 1.0;
          }
          double m = double(n_inner);
          for (std::size_t di = 0; di < nd; ++di) {
            double p = hits[di] / m;
            double svar = std::max(0.0, (hits[di] - m * p * p) / (m - 1.0));
            shards[std::size_t(s)][di].add(p * p - svar / m);
          }
        }
      }
    };
    int nt = std::clamp(threads, 1, kShards);
    if (nt == 1) {
      run(0, kShards);
    } else {
      std::vector<std::thread> pool;
      for (int th = 0; th < nt; ++th)
        pool.emplace_back(run, th * kShards / nt, (th + 1) * kShards / nt);
      for (auto& th : pool) th.join();
    }
    for (std::size_t di = 0; di < nd; ++di) {
      OuterAccum all;
      for (const auto& sh : shards) all.merge(sh[di]);
      t.add_row({deltas[di], all.mean(), all.se(), double(all.n), tau,
                 double(n_inner)});
    }
  }
  return t;
}

StudyTable complexity_sweep(const MlmcConfig& mc, const EstimatorConfig& cfg,
                            const std::vector<double>& eps_list) {
  StudyTable t;
  t.columns = {"abscissa", "statistic", "stderr",   "n",
               "total_work", "levels",  "estimate", "bias"};
  t.meta["study"] = "complexity";
  t.meta["model"] = cfg.model.name;
  t.meta["scheme"] = to_string(cfg.scheme);
  t.meta["set"] = cfg.set.name;
  t.meta["branching"] = cfg.branching ? "1" : "0";
  for (double eps : eps_list) {
    MlmcConfig m = mc;
    m.eps = eps;
    MlmcResult r = run_mlmc(m, cfg);
    t.add_row({eps, r.total_work * eps * eps, 0.0, 1.0, r.total_work,
               double(r.levels_used), r.estimate, r.bias_estimate});
  }
  return t;
}

}  // namespace branchmc
