#pragma once

#include <array>
#include <string>

#include "branchmc/models.hpp"

namespace branchmc {

enum class Scheme { Euler, Milstein, AntitheticCC };

Scheme scheme_from_string(const std::string& s);
std::string to_string(Scheme s);

// One discretization step. dW holds the already-scaled increments, i.e.
// N(0,h) per channel.
struct StepInput {
  const double* x;
  double t;
  double h;
  const double* dW;
};

// x' = x + a(x,t) h + sigma(x,t) dW. Throws on non-finite output.
void euler_step(const ModelSpec& model, const StepInput& in, double* out);

// Scalar Milstein for a GBM component driven by the combined increment dB:
// x' = x + mu x h + sigma x dB + 1/2 sigma^2 x (dB^2 - h).
double milstein_step_scalar_gbm(double mu, double sigma, double x, double h,
                                double dB);

// Milstein step for a GBM model (each component uses its combined Brownian
// B_i = rho W_i + sqrt(1-rho^2) W_0, so no Levy areas arise).
void milstein_step_gbm(const ModelSpec& model, const StepInput& in,
                       double* out);

// Truncated Milstein for Clark-Cameron (Levy area set to zero):
// x1' = x1 + dW1,  x2' = x2 + w1_begin dW2 + 1/2 dW1 dW2,
// where w1_begin is the exact W_1 value at the step start.
std::array<double, 2> cc_truncated_milstein_step(
    const std::array<double, 2>& x, double w1_begin,
    const std::array<double, 2>& dW);

// The antithetic sibling of two consecutive truncated-Milstein steps: the
// two fine increments are consumed in swapped order, with the mid-point W_1
// value w1_begin + dW_second[0].
std::array<double, 2> cc_antithetic_pair_of_steps(
    const std::array<double, 2>& xa, double w1_begin,
    const std::array<double, 2>& dW_first,
    const std::array<double, 2>& dW_second);

}  // namespace branchmc
