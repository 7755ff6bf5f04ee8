#include "branchmc/schemes.hpp"

#include <cmath>
#include <stdexcept>

namespace branchmc {

Scheme scheme_from_string(const std::string& s) {
  if (s == "euler") return Scheme::Euler;
  if (s == "milstein") return Scheme::Milstein;
  if (s == "antithetic-cc") return Scheme::AntitheticCC;
  throw std::invalid_argument("unknown scheme: " + s);
}

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::Euler: return "euler";
    case Scheme::Milstein: return "milstein";
    case Scheme::AntitheticCC: return "antithetic-cc";
  }
  return "?";
}

namespace {
void check_finite(const double* x, int d, const char* who) {
  for (int i = 0; i < d; ++i)
    if (!std::isfinite(x[i]))
      throw std::runtime_error(std::string(who) +
                               ": non-finite state at component " +
                               std::to_string(i) + " = " + std::to_string(x[i]));
}
}  // namespace

void euler_step(const ModelSpec& model, const StepInput& in, double* out) {
  double a[kMaxDim];
  double sig[kMaxDim * kMaxDrive];
  model.drift(in.x, in.t, a);
  model.diffusion(in.x, in.t, sig);
  for (int i = 0; i < model.d; ++i) {
    double acc = in.x[i] + a[i] * in.h;
    const double* row = sig + i * model.d_prime;
    for (int j = 0; j < model.d_prime; ++j) acc += row[j] * in.dW[j];
    out[i] = acc;
  }
  check_finite(out, model.d, "euler_step");
}

double milstein_step_scalar_gbm(double mu, double sigma, double x, double h,
                                double dB) {
  return x + mu * x * h + sigma * x * dB +
         0.5 * sigma * sigma * x * (dB * dB - h);
}

void milstein_step_gbm(const ModelSpec& model, const StepInput& in,
                       double* out) {
  if (model.kind != ModelKind::Gbm)
    throw std::invalid_argument("milstein_step_gbm: model is not GBM");
  const double rho = model.gbm.rho;
  const double w0 = std::sqrt(1.0 - rho * rho);
  for (int i = 0; i < model.d; ++i) {
    const double dB = rho * in.dW[i + 1] + w0 * in.dW[0];
    out[i] = milstein_step_scalar_gbm(model.gbm.mu[i], model.gbm.sigma[i],
                                      in.x[i], in.h, dB);
  }
  check_finite(out, model.d, "milstein_step_gbm");
}

std::array<double, 2> cc_truncated_milstein_step(
    const std::array<double, 2>& x, double w1_begin,
    const std::array<double, 2>& dW) {
  return {x[0] + dW[0], x[1] + w1_begin * dW[1] + 0.5 * dW[0] * dW[1]};
}

std::array<double, 2> cc_antithetic_pair_of_steps(
    const std::array<double, 2>& xa, double w1_begin,
    const std::array<double, 2>& dW_first,
    const std::array<double, 2>& dW_second) {
  // First fine step consumes dW_second, second consumes dW_first; the
  // mid-point W_1 value is w1_begin + dW_second[0].
  std::array<double, 2> mid =
      cc_truncated_milstein_step(xa, w1_begin, dW_second);
  return cc_truncated_milstein_step(mid, w1_begin + dW_second[0], dW_first);
}

}  // namespace branchmc
