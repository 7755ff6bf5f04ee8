#include "branchmc/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

namespace branchmc {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing junk");
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": cannot parse '" + v + "' as a number");
  }
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    std::int64_t x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing junk");
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": cannot parse '" + v + "' as an integer");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw ConfigError(key + ": cannot parse '" + v + "' as a boolean");
}

}  // namespace

void apply_key(RunConfig& rc, const std::string& key,
               const std::string& value) {
  if (key == "model") {
    rc.model = value;
  } else if (key == "scheme") {
    rc.scheme = value;
  } else if (key == "seed") {
    rc.seed = std::uint64_t(to_int(key, value));
  } else if (key == "threads") {
    rc.threads = int(to_int(key, value));
  } else if (key == "out") {
    rc.out = value;
  } else if (key == "gbm.d") {
    rc.gbm.d = int(to_int(key, value));
  } else if (key == "gbm.mu") {
    rc.gbm.mu = {to_double(key, value)};
  } else if (key == "gbm.sigma") {
    rc.gbm.sigma = {to_double(key, value)};
  } else if (key == "gbm.rho") {
    rc.gbm.rho = to_double(key, value);
  } else if (key == "gbm.x0") {
    rc.gbm.x0 = {to_double(key, value)};
  } else if (key == "payoff.set") {
    rc.set = value;
  } else if (key == "payoff.threshold") {
    rc.threshold = to_double(key, value);
  } else if (key == "branch.enabled") {
    rc.branching = to_bool(key, value);
  } else if (key == "branch.tau0") {
    rc.tau0 = to_double(key, value);
  } else if (key == "branch.eta") {
    rc.eta = to_double(key, value);
  } else if (key == "branch.align") {
    rc.align = value;
  } else if (key == "mlmc.eps") {
    rc.eps = to_double(key, value);
  } else if (key == "mlmc.h0") {
    rc.h0 = to_double(key, value);
  } else if (key == "mlmc.M") {
    rc.refinement = int(to_int(key, value));
  } else if (key == "mlmc.alpha") {
    rc.alpha = to_double(key, value);
  } else if (key == "mlmc.max_level") {
    rc.max_level = int(to_int(key, value));
  } else if (key == "mlmc.warmup") {
    rc.warmup = std::uint64_t(to_int(key, value));
  } else {
    throw ConfigError("unknown config key: " + key);
  }
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig rc;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected 'key = value', got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("line " + std::to_string(lineno) +
                        ": empty key or value");
    try {
      apply_key(rc, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rc;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

std::string RunConfig::resolved_set() const {
  if (!set.empty()) return set;
  return model == "clark-cameron" ? "cc-halfplane-x2" : "gbm-mean-below";
}

EstimatorConfig RunConfig::estimator() const {
  EstimatorConfig cfg;
  try {
    GbmParams g = gbm;
    cfg.model = make_model(model, g);
    cfg.scheme = scheme_from_string(scheme);
    cfg.set = make_set(resolved_set(), threshold);
    cfg.h0 = h0;
    cfg.refinement = refinement;
    cfg.branching = branching;
    cfg.tau0 = tau0;
    cfg.eta = eta;
    if (!align.empty())
      cfg.align = align_from_string(align);
    else
      cfg.align = cfg.scheme == Scheme::AntitheticCC
                      ? AlignMode::SnapToCoarseGrid
                      : AlignMode::SplitIncrement;
    cfg.master_seed = seed;
    validate(cfg);
    // The payoff must see the right state dimension.
    if (cfg.set.kind == DigitalSet::Kind::GbmMeanBelow &&
        cfg.model.kind != ModelKind::Gbm)
      throw ConfigError("payoff.set gbm-mean-below requires model = gbm");
    if ((cfg.set.kind == DigitalSet::Kind::CcCorner ||
         cfg.set.kind == DigitalSet::Kind::CcHalfplaneX1 ||
         cfg.set.kind == DigitalSet::Kind::CcHalfplaneX2) &&
        cfg.model.kind != ModelKind::ClarkCameron)
      throw ConfigError("payoff.set " + cfg.set.name +
                        " requires model = clark-cameron");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

MlmcConfig RunConfig::mlmc() const {
  MlmcConfig mc;
  mc.eps = eps;
  mc.alpha = alpha;
  mc.max_level = max_level;
  mc.warmup = warmup;
  mc.threads = resolved_threads();
  if (!(mc.eps > 0)) throw ConfigError("mlmc.eps must be > 0");
  if (mc.max_level < 2) throw ConfigError("mlmc.max_level must be >= 2");
  return mc;
}

int RunConfig::resolved_threads() const {
  if (threads > 0) return threads;
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? int(hw) : 1;
}

}  // namespace branchmc
