#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "branchmc/estimators.hpp"
#include "branchmc/mlmc.hpp"

namespace branchmc {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Everything a run needs, as parsed from a config file plus flag overrides.
struct RunConfig {
  std::string model = "gbm";
  GbmParams gbm;
  std::string scheme = "euler";
  std::string set;  // empty = model-dependent default
  double threshold = 1.0;
  bool branching = true;
  double tau0 = 0.5;
  double eta = 1.0;
  std::string align;  // empty = scheme-dependent default
  double eps = 0.01;
  double h0 = 0.5;
  int refinement = 2;  // mlmc.M
  double alpha = 1.0;
  int max_level = 10;
  std::uint64_t warmup = 10000;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = hardware concurrency
  std::string out;

  // Builds the validated sampling configuration (throws ConfigError on
  // incompatible field combinations).
  EstimatorConfig estimator() const;
  MlmcConfig mlmc() const;
  int resolved_threads() const;
  std::string resolved_set() const;
};

// Applies one `section.key = value` assignment; unknown keys throw.
void apply_key(RunConfig& rc, const std::string& key, const std::string& value);

// Line-oriented `section.key = value` format, '#' comments, blank lines ok.
// Errors carry the 1-based line number.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

}  // namespace branchmc
