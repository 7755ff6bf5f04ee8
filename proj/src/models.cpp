#include "branchmc/models.hpp"

#include <cmath>
#include <stdexcept>

#include "branchmc/rng.hpp"

namespace branchmc {

void ModelSpec::drift(const double* x, double /*t*/, double* out) const {
  switch (kind) {
    case ModelKind::Gbm:
      for (int i = 0; i < d; ++i) out[i] = gbm.mu[i] * x[i];
      break;
    case ModelKind::ClarkCameron:
      out[0] = 0.0;
      out[1] = 0.0;
      break;
  }
}

void ModelSpec::diffusion(const double* x, double /*t*/, double* out) const {
  switch (kind) {
    case ModelKind::Gbm: {
      const double rho = gbm.rho;
      const double w0 = std::sqrt(1.0 - rho * rho);
      for (int i = 0; i < d; ++i) {
        double* row = out + i * d_prime;
        for (int j = 0; j < d_prime; ++j) row[j] = 0.0;
        row[0] = gbm.sigma[i] * x[i] * w0;
        row[i + 1] = gbm.sigma[i] * x[i] * rho;
      }
      break;
    }
    case ModelKind::ClarkCameron:
      out[0] = 1.0;
      out[1] = 0.0;
      out[2] = 0.0;
      out[3] = x[0];
      break;
  }
}

ModelSpec make_gbm(const GbmParams& params) {
  if (params.d < 1 || params.d > kMaxDim)
    throw std::invalid_argument("make_gbm: d out of range");
  if (std::abs(params.rho) > 1.0)
    throw std::invalid_argument("make_gbm: |rho| > 1");
  GbmParams p = params;
  auto fill = [&](std::vector<double>& v, double def) {
    if (v.empty()) v.assign(p.d, def);
    if ((int)v.size() == 1 && p.d > 1) v.assign(p.d, v[0]);
    if ((int)v.size() != p.d)
      throw std::invalid_argument("make_gbm: parameter length != d");
  };
  fill(p.mu, 0.05);
  fill(p.sigma, 0.2);
  fill(p.x0, 1.0);
  for (double s : p.sigma)
    if (s <= 0.0) throw std::invalid_argument("make_gbm: sigma <= 0");

  ModelSpec m;
  m.kind = ModelKind::Gbm;
  m.name = "gbm";
  m.d = p.d;
  m.d_prime = p.d + 1;
  for (int i = 0; i < p.d; ++i) m.x0[i] = p.x0[i];
  m.supports_milstein = true;  // per-component combined Brownian, no Levy areas
  m.gbm = p;
  return m;
}

ModelSpec make_clark_cameron() {
  ModelSpec m;
  m.kind = ModelKind::ClarkCameron;
  m.name = "clark-cameron";
  m.d = 2;
  m.d_prime = 2;
  m.x0[0] = 0.0;
  m.x0[1] = 0.0;
  m.supports_milstein = true;  // truncated Milstein (Levy areas dropped)
  m.supports_antithetic_truncated_milstein = true;
  m.exact_components = {0};
  return m;
}

double gbm_digital_closed_form(const GbmParams& params, double threshold) {
  if (params.d != 1)
    throw std::invalid_argument("gbm_digital_closed_form: requires d = 1");
  if (threshold <= 0.0)
    throw std::invalid_argument("gbm_digital_closed_form: threshold <= 0");
  const double mu = params.mu.empty() ? 0.05 : params.mu[0];
  const double sigma = params.sigma.empty() ? 0.2 : params.sigma[0];
  const double x0 = params.x0.empty() ? 1.0 : params.x0[0];
  return normal_cdf((std::log(threshold / x0) - (mu - 0.5 * sigma * sigma)) /
                    sigma);
}

ModelSpec make_model(const std::string& name, const GbmParams& gbm_params) {
  if (name == "gbm") return make_gbm(gbm_params);
  if (name == "clark-cameron") return make_clark_cameron();
  throw std::invalid_argument("unknown model: " + name);
}

}  // namespace branchmc
