// mlmc-branch: digital-option probabilities by multilevel Monte Carlo with
// path branching. Subcommands: price, study {variance,work,kurtosis,tau,
// cond-density,complexity}, selftest.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "branchmc/config.hpp"
#include "branchmc/diagnostics.hpp"
#include "branchmc/selftest.hpp"

using namespace branchmc;

namespace {

struct Cli {
  RunConfig rc;
  bool quiet = false;
  std::string config_path;
  // Raw override values; only applied when the flag was actually given.
  std::vector<std::pair<std::string, std::string>> overrides;
};

void add_common(CLI::App* cmd, Cli& cli) {
  cmd->add_option("--config", cli.config_path, "config file (key = value)");
  cmd->add_flag("--quiet", cli.quiet, "suppress the stdout summary");
  auto ov = [&cli, cmd](const std::string& flag, const std::string& key,
                        const std::string& help) {
    cmd->add_option_function<std::string>(
        flag,
        [&cli, key](const std::string& v) { cli.overrides.push_back({key, v}); },
        help);
  };
  ov("--seed", "seed", "master seed (default 0 or $MLMC_BRANCH_SEED)");
  ov("--threads", "threads", "worker threads (default: hardware)");
  ov("--model", "model", "gbm | clark-cameron");
  ov("--scheme", "scheme", "euler | milstein | antithetic");
  ov("--set", "payoff.set", "digital set name");
  ov("--threshold", "payoff.threshold", "digital set threshold K");
  ov("--branching", "branch.enabled", "enable path branching (0|1)");
  ov("--tau0", "branch.tau0", "first branch horizon tau0");
  ov("--eta", "branch.eta", "branch-time decay exponent");
  ov("--align", "branch.align", "split | snap");
  ov("--h0", "mlmc.h0", "level-0 step size");
  ov("--refinement", "mlmc.M", "level refinement factor M");
  ov("--alpha", "mlmc.alpha", "weak rate for the bias proxy (0 = fit)");
  ov("--max-level", "mlmc.max_level", "finest level allowed");
  ov("--warmup", "mlmc.warmup", "warm-up samples per level");
  ov("--gbm-d", "gbm.d", "GBM dimension");
  ov("--gbm-mu", "gbm.mu", "GBM drift");
  ov("--gbm-sigma", "gbm.sigma", "GBM volatility");
  ov("--gbm-rho", "gbm.rho", "GBM common-factor correlation");
  ov("--gbm-x0", "gbm.x0", "GBM initial value");
  ov("--out", "out", "output CSV path");
}

RunConfig finalize(Cli& cli) {
  RunConfig rc;
  if (!cli.config_path.empty()) rc = parse_config_file(cli.config_path);
  bool seed_given = false;
  for (const auto& [key, value] : cli.overrides) {
    apply_key(rc, key, value);
    if (key == "seed") seed_given = true;
  }
  if (!seed_given && rc.seed == 0) {
    if (const char* env = std::getenv("MLMC_BRANCH_SEED"))
      apply_key(rc, "seed", env);
  }
  return rc;
}

void emit_table(const StudyTable& t, const RunConfig& rc, bool quiet,
                const std::string& default_name) {
  std::string path = rc.out.empty() ? default_name : rc.out;
  t.write_csv_file(path);
  if (!quiet) std::printf("wrote %s (%zu rows)\n", path.c_str(), t.rows.size());
}

void stamp_meta(StudyTable& t, const RunConfig& rc) {
  t.meta["seed"] = std::to_string(rc.seed);
  t.meta["tau0"] = std::to_string(rc.tau0);
  t.meta["eta"] = std::to_string(rc.eta);
}

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError(std::string(what) + ": bad number '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(std::string(what) + ": empty list");
  return out;
}

void parse_levels(const std::string& s, int& lo, int& hi) {
  auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      lo = hi = std::stoi(s);
    } else {
      lo = std::stoi(s.substr(0, dots));
      hi = std::stoi(s.substr(dots + 2));
    }
  } catch (const std::exception&) {
    throw ConfigError("--levels: expected 'a..b', got '" + s + "'");
  }
  if (lo < 0 || hi < lo) throw ConfigError("--levels: bad range " + s);
}

int level_for_h(const RunConfig& rc, double h) {
  double l = std::log(rc.h0 / h) / std::log(double(rc.refinement));
  long li = std::lround(l);
  if (std::abs(l - double(li)) > 1e-9 || li < 0)
    throw ConfigError("--h must equal h0 * M^-level");
  return int(li);
}

int cmd_price(Cli& cli, double eps_flag) {
  RunConfig rc = finalize(cli);
  if (eps_flag > 0) rc.eps = eps_flag;
  EstimatorConfig cfg = rc.estimator();
  MlmcConfig mc = rc.mlmc();
  MlmcResult res = run_mlmc(mc, cfg);
  if (!cli.quiet) {
    std::printf("estimate      %.8f\n", res.estimate);
    std::printf("target eps    %g\n", res.eps);
    std::printf("bias estimate %.3e%s\n", res.bias_estimate,
                res.bias_unconverged ? "  (level cap hit, bias unconverged)"
                                     : "");
    std::printf("total work    %.6g increments\n", res.total_work);
    std::printf("levels        0..%d\n", res.levels_used);
    std::printf("%5s %12s %14s %14s %12s %10s\n", "level", "N", "mean",
                "variance", "mean work", "kurtosis");
    for (const auto& l : res.per_level)
      std::printf("%5d %12llu %14.6e %14.6e %12.1f %10.3f\n", l.level,
                  (unsigned long long)l.n, l.mean, l.variance, l.mean_work,
                  l.kurtosis);
  } else {
    std::printf("%.8f\n", res.estimate);
  }
  return res.bias_unconverged ? 3 : 0;
}

int cmd_level_study(Cli& cli, const std::string& kind,
                    const std::string& levels, std::uint64_t n) {
  RunConfig rc = finalize(cli);
  int lo = 2, hi = 9;
  if (!levels.empty()) parse_levels(levels, lo, hi);
  EstimatorConfig cfg = rc.estimator();
  StudyTable t =
      variance_study(cfg, lo, hi, n, rc.resolved_threads());
  // One table serves the variance, work and kurtosis studies; the headline
  // column just changes.
  if (kind == "work") {
    for (auto& row : t.rows) {
      std::swap(row[1], row[7]);
      row[2] = 0.0;  // per-sample work is schedule-determined
    }
    t.columns[7] = "variance";
    t.meta["study"] = "work";
  } else if (kind == "kurtosis") {
    for (auto& row : t.rows) {
      std::swap(row[1], row[8]);
      std::swap(row[2], row[9]);
    }
    t.columns[8] = "variance";
    t.columns[9] = "variance_se";
    t.meta["study"] = "kurtosis";
  }
  stamp_meta(t, rc);
  emit_table(t, rc, cli.quiet, "study-" + kind + ".csv");
  if (!cli.quiet) {
    try {
      RateFit f = fit_rate(t, "statistic", kind == "work" ? "" : "stderr");
      std::printf("log-log slope vs h: %.3f (R^2 %.4f, %d pts)\n", f.slope,
                  f.r2, f.n_used);
    } catch (const std::exception& e) {
      std::printf("slope fit unavailable: %s\n", e.what());
    }
  }
  return 0;
}

int cmd_tau(Cli& cli, const std::string& h_str, const std::string& taus_str,
            std::uint64_t n_outer, std::uint64_t n_inner) {
  RunConfig rc = finalize(cli);
  EstimatorConfig cfg = rc.estimator();
  int level = h_str.empty() ? 9 : level_for_h(rc, std::stod(h_str));
  double h = rc.h0 * std::pow(double(rc.refinement), -level);
  std::vector<double> taus;
  if (!taus_str.empty()) {
    taus = parse_list(taus_str, "--taus");
  } else {
    for (double tau = rc.tau0; tau >= 4 * h; tau *= 0.25) taus.push_back(tau);
    std::reverse(taus.begin(), taus.end());
  }
  StudyTable t =
      tau_study(cfg, level, taus, n_outer, n_inner, rc.resolved_threads());
  stamp_meta(t, rc);
  emit_table(t, rc, cli.quiet, "study-tau.csv");
  if (!cli.quiet) {
    try {
      RateFit f = fit_rate(t, "statistic", "stderr");
      std::printf("log-log slope vs tau: %.3f (R^2 %.4f, %d pts)\n", f.slope,
                  f.r2, f.n_used);
    } catch (const std::exception& e) {
      std::printf("slope fit unavailable: %s\n", e.what());
    }
  }
  return 0;
}

int cmd_cond_density(Cli& cli, const std::string& h_str,
                     const std::string& taus_str, const std::string& deltas_str,
                     std::uint64_t n_outer, std::uint64_t n_inner) {
  RunConfig rc = finalize(cli);
  EstimatorConfig cfg = rc.estimator();
  double h_ref = h_str.empty() ? 1.0 / 256 : std::stod(h_str);
  std::vector<double> taus = taus_str.empty()
                                 ? std::vector<double>{0.03125, 0.0625, 0.125,
                                                       0.25, 0.5}
                                 : parse_list(taus_str, "--taus");
  std::vector<double> deltas =
      deltas_str.empty()
          ? std::vector<double>{0.02, 0.04, 0.08, 0.16, 0.32}
          : parse_list(deltas_str, "--deltas");
  StudyTable t = cond_density_study(cfg, h_ref, taus, deltas, n_outer, n_inner,
                                    rc.resolved_threads());
  stamp_meta(t, rc);
  emit_table(t, rc, cli.quiet, "study-cond-density.csv");
  return 0;
}

int cmd_complexity(Cli& cli, const std::string& eps_list_str) {
  RunConfig rc = finalize(cli);
  EstimatorConfig cfg = rc.estimator();
  MlmcConfig mc = rc.mlmc();
  std::vector<double> eps_list =
      eps_list_str.empty() ? std::vector<double>{0.02, 0.01, 0.005, 0.0025}
                           : parse_list(eps_list_str, "--eps-list");
  StudyTable t = complexity_sweep(mc, cfg, eps_list);
  stamp_meta(t, rc);
  emit_table(t, rc, cli.quiet, "study-complexity.csv");
  return 0;
}

int cmd_selftest(Cli& cli) {
  RunConfig rc = finalize(cli);
  auto results = run_selftest(rc.seed, rc.resolved_threads());
  bool all = true;
  for (const auto& r : results) {
    std::printf("[%s] %-22s %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                r.detail.c_str());
    all = all && r.pass;
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Digital-option probabilities via MLMC with path branching"};
  app.require_subcommand(1);

  Cli cli;
  double eps_flag = 0;
  std::string levels, taus, deltas, h_str, eps_list;
  std::uint64_t n = 100000, n_outer = 100000, n_inner = 64;

  auto* price = app.add_subcommand("price", "run the MLMC pricer");
  price->add_option("--eps", eps_flag, "target RMS accuracy");
  add_common(price, cli);

  auto* study = app.add_subcommand("study", "diagnostic studies");
  study->require_subcommand(1);
  for (const char* kind : {"variance", "work", "kurtosis"}) {
    auto* s = study->add_subcommand(kind, std::string("per-level ") + kind);
    s->add_option("--levels", levels, "level range a..b (default 2..9)");
    s->add_option("--n", n, "samples per level");
    add_common(s, cli);
  }
  auto* tau = study->add_subcommand("tau", "conditional second-moment decay");
  tau->add_option("--h", h_str, "fine step size (sets the level)");
  tau->add_option("--taus", taus, "comma list of tau values");
  tau->add_option("--n-outer", n_outer, "outer paths");
  tau->add_option("--n-inner", n_inner, "continuations per outer path");
  add_common(tau, cli);

  auto* cd = study->add_subcommand("cond-density",
                                   "conditional boundary-mass scaling");
  cd->add_option("--h-ref", h_str, "reference step size");
  cd->add_option("--taus", taus, "comma list of tau values");
  cd->add_option("--deltas", deltas, "comma list of delta values");
  cd->add_option("--n-outer", n_outer, "outer paths");
  cd->add_option("--n-inner", n_inner, "continuations per outer path");
  add_common(cd, cli);

  auto* cx = study->add_subcommand("complexity", "work vs accuracy sweep");
  cx->add_option("--eps-list", eps_list, "comma list of eps values");
  add_common(cx, cli);

  auto* st = app.add_subcommand("selftest", "run the invariant suite");
  add_common(st, cli);

  CLI11_PARSE(app, argc, argv);

  try {
    if (price->parsed()) return cmd_price(cli, eps_flag);
    if (st->parsed()) return cmd_selftest(cli);
    for (const char* kind : {"variance", "work", "kurtosis"})
      if (study->get_subcommand(kind)->parsed())
        return cmd_level_study(cli, kind, levels, n);
    if (tau->parsed()) return cmd_tau(cli, h_str, taus, n_outer, n_inner);
    if (cd->parsed())
      return cmd_cond_density(cli, h_str, taus, deltas, n_outer, n_inner);
    if (cx->parsed()) return cmd_complexity(cli, eps_list);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
