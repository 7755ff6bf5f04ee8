#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace branchmc {

// Hard cap on the state dimension; the driving dimension is at most d+1.
inline constexpr int kMaxDim = 16;
inline constexpr int kMaxDrive = kMaxDim + 1;

using StateVec = std::array<double, kMaxDim>;
using DriveVec = std::array<double, kMaxDrive>;

struct GbmParams {
  int d = 1;
  std::vector<double> mu;     // per-asset drift
  std::vector<double> sigma;  // per-asset volatility
  double rho = 0.7;           // idiosyncratic-noise weight
  std::vector<double> x0;
};

enum class ModelKind { Gbm, ClarkCameron };

// SDE model dX = a(X,t) dt + sigma(X,t) dW on [0,1]. Immutable after
// construction; safe to share across threads.
struct ModelSpec {
  ModelKind kind = ModelKind::Gbm;
  std::string name;
  int d = 1;        // state dimension
  int d_prime = 2;  // driving Brownian dimension
  StateVec x0{};
  bool supports_milstein = false;
  bool supports_antithetic_truncated_milstein = false;
  std::vector<int> exact_components;  // indices solvable exactly
  GbmParams gbm;  // valid when kind == Gbm

  void drift(const double* x, double t, double* out) const;
  // Dense d x d' matrix, row-major.
  void diffusion(const double* x, double t, double* out) const;
};

// Correlated GBM: dX_i = mu_i X_i dt + sigma_i X_i (rho dW_i + sqrt(1-rho^2) dW_0).
// Channel 0 is the systematic noise, channels 1..d are idiosyncratic.
ModelSpec make_gbm(const GbmParams& params);

// dX_1 = dW_1, dX_2 = X_1 dW_2. Component 0 is exactly the driving Brownian.
ModelSpec make_clark_cameron();

// Exact P(X_1 <= threshold) for scalar GBM.
double gbm_digital_closed_form(const GbmParams& params, double threshold);

// Registry keyed by the CLI model string ("gbm", "clark-cameron").
ModelSpec make_model(const std::string& name, const GbmParams& gbm_params);

}  // namespace branchmc
