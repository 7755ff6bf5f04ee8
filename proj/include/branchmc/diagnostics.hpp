#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "branchmc/mlmc.hpp"

namespace branchmc {

// Rectangular study output. Column 0 is the abscissa, column 1 the headline
// statistic, column 2 its Monte Carlo standard error, column 3 the sample
// count; anything after that is auxiliary.
struct StudyTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::map<std::string, std::string> meta;

  int col(const std::string& name) const;  // -1 when absent
  void add_row(std::vector<double> row);
  // CSV: "# key=value" metadata lines, then a header line, then rows.
  void write_csv(std::ostream& os) const;
  void write_csv_file(const std::string& path) const;
};

struct RateFit {
  double slope = 0;
  double intercept = 0;  // log-log intercept
  double r2 = 0;
  int n_used = 0;
};

// Ordinary least squares of log(y) on log(x). Points with y <= 0, or with a
// relative standard error above 20% when errors are supplied, are dropped;
// throws if fewer than 3 remain.
RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<double>& se = {});
RateFit fit_rate(const StudyTable& t, const std::string& ycol,
                 const std::string& secol = "");

// Per-level sample moments of the correction under cfg (branching on or off
// as configured), levels lmin..lmax with n replicates each.
// Columns: abscissa (=h_l), statistic (=variance), stderr, n, level, mean,
// mean_se, work, kurtosis, kurtosis_se.
StudyTable variance_study(const EstimatorConfig& cfg, int lmin, int lmax,
                          std::uint64_t n, int threads);

// Nested study of E[(E[dP | F_{1-tau}])^2] at a fixed level: outer paths to
// 1 - tau, n_inner keyed continuations each, with the s^2/m inner-variance
// bias correction. Columns: abscissa (=tau), statistic, stderr, n, n_inner.
StudyTable tau_study(const EstimatorConfig& cfg, int level,
                     const std::vector<double>& taus, std::uint64_t n_outer,
                     std::uint64_t n_inner, int threads);

// Nested study of E[ P(dist(X_1, bd S) <= delta | F_{1-tau})^2 ] on a single
// fine path (step h_ref). One row per (tau, delta).
// Columns: abscissa (=delta), statistic, stderr, n, tau, n_inner.
StudyTable cond_density_study(const EstimatorConfig& cfg, double h_ref,
                              const std::vector<double>& taus,
                              const std::vector<double>& deltas,
                              std::uint64_t n_outer, std::uint64_t n_inner,
                              int threads);

// Full MLMC runs across accuracies. Columns: abscissa (=eps), statistic
// (=work * eps^2), stderr(=0), n(=1), total_work, levels, estimate, bias.
StudyTable complexity_sweep(const MlmcConfig& mc, const EstimatorConfig& cfg,
                            const std::vector<double>& eps_list);

}  // namespace branchmc
