#pragma once

// Small scalar helpers used across modules: stable softplus/sigmoid pairs
// for positivity-constrained parameters and the standard normal quantile.

#include "coxsvi/types.hpp"

#include <cmath>

namespace coxsvi {

// log(1 + exp(x)), stable for large |x|.
inline Real softplus(Real x) {
  if (x > Real(30)) return x;
  if (x < Real(-30)) return std::exp(x);
  return std::log1p(std::exp(x));
}

// Inverse of softplus; y must be > 0.
inline Real softplus_inverse(Real y) {
  if (y > Real(30)) return y;
  return std::log(std::expm1(y));
}

// d softplus(x) / dx.
inline Real sigmoid(Real x) {
  if (x >= Real(0)) return Real(1) / (Real(1) + std::exp(-x));
  const Real e = std::exp(x);
  return e / (Real(1) + e);
}

inline Real logit(Real p) { return std::log(p) - std::log1p(-p); }

// Inverse standard normal CDF. Acklam's rational approximation refined by
// one Halley step against erfc, accurate to close to machine precision on
// (0, 1). Throws on p outside the open interval.
Real normal_quantile(Real p);

}  // namespace coxsvi
