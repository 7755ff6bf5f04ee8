#include "branchmc/rng.hpp"

#include <cmath>

namespace branchmc {
namespace {

inline std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

inline std::uint64_t absorb(std::uint64_t h, std::uint64_t v) noexcept {
  return mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

inline std::uint64_t key_bits(const StreamKey& k) noexcept {
  std::uint64_t h = mix64(k.master_seed ^ 0x8f462907aab1e537ULL);
  h = absorb(h, k.replicate);
  h = absorb(h, k.branch_code);
  h = absorb(h, (std::uint64_t(k.level) << 32) | k.segment);
  h = absorb(h, (std::uint64_t(k.branch_depth) << 32) | k.channel);
  h = absorb(h, k.step);
  return mix64(h);
}

}  // namespace

double inverse_normal_cdf(double p) {
  // Wichura (1988), algorithm AS241, PPND16.
  const double q = p - 0.5;
  double r;
  if (std::abs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) *
                    r +
                4.5921953931549871457e4) *
                   r +
               1.3731693765509461125e4) *
                  r +
              1.9715909503065514427e3) *
                 r +
             1.3314166789178437745e2) *
                r +
            3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) *
                    r +
                2.1213794301586595867e4) *
                   r +
               5.3941960214247511077e3) *
                  r +
              6.8718700749205790830e2) *
                 r +
             4.2313330701600911252e1) *
                r +
            1.0);
  }
  r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) *
                    r +
                2.41780725177450611770e-1) *
                   r +
               1.27045825245236838258e0) *
                  r +
              3.64784832476320460504e0) *
                 r +
             5.76949722146069140550e0) *
                r +
            4.63033784615654529590e0) *
               r +
           1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) *
                    r +
                1.51986665636164571966e-2) *
                   r +
               1.48103976427480074590e-1) *
                  r +
              6.89767334985100004550e-1) *
                 r +
             1.67638483018380384940e0) *
                r +
            2.05319162663775882187e0) *
               r +
           1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) *
                    r +
                1.24266094738807843860e-3) *
                   r +
               2.65321895265761230930e-2) *
                  r +
              2.96560571828504891230e-1) *
                 r +
             1.78482653991729133580e0) *
                r +
            5.46378491116411436990e0) *
               r +
           6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) *
                    r +
                1.84631831751005468180e-5) *
                   r +
               7.86869131145613259100e-4) *
                  r +
              1.48753612908506148525e-2) *
                 r +
             1.36929880922735805310e-1) *
                r +
            5.99832206555887937690e-1) *
               r +
           1.0);
  }
  return q < 0.0 ? -val : val;
}

double normal_cdf(double x) noexcept {
  return 0.5 * std::erfc(-x * 0.7071067811865475244);
}

double standard_uniform(const StreamKey& key) noexcept {
  // 53 random bits plus a half-ulp offset keeps u strictly inside (0,1).
  return (double(key_bits(key) >> 11) + 0.5) * 0x1.0p-53;
}

double standard_normal(const StreamKey& key) noexcept {
  return inverse_normal_cdf(standard_uniform(key));
}

StreamKey child_key(const StreamKey& parent, int child) {
  if (child != 1 && child != -1)
    throw std::invalid_argument("child_key: child must be +1 or -1");
  if (parent.branch_depth >= 63)
    throw std::overflow_error("child_key: branch depth overflow");
  StreamKey k = parent;
  if (child == 1) k.branch_code |= std::uint64_t(1) << k.branch_depth;
  k.branch_depth += 1;
  k.segment = k.branch_depth;
  k.step = 0;
  return k;
}

}  // namespace branchmc
