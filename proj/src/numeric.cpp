#include "coxsvi/numeric.hpp"

#include <stdexcept>

namespace coxsvi {

Real normal_quantile(Real p) {
  if (!(p > Real(0) && p < Real(1)))
    throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");

  // Acklam's rational approximation, |relative error| < 1.15e-9.
  static const Real a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                           -2.759285104469687e+02, 1.383577518672690e+02,
                           -3.066479806614716e+01, 2.506628277459239e+00};
  static const Real b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                           -1.556989798598866e+02, 6.680131188771972e+01,
                           -1.328068155288572e+01};
  static const Real c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                           -2.400758277161838e+00, -2.549732539343734e+00,
                           4.374664141464968e+00,  2.938163982698783e+00};
  static const Real d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                           2.445134137142996e+00, 3.754408661907416e+00};

  const Real plow = 0.02425;
  Real x;
  if (p < plow) {
    const Real q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= 1 - plow) {
    const Real q = p - 0.5;
    const Real r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const Real q = std::sqrt(-2 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }

  // One Halley refinement using the exact CDF via erfc.
  static const Real sqrt2 = std::sqrt(Real(2));
  const Real err = Real(0.5) * std::erfc(-x / sqrt2) - p;
  const Real u = err * std::sqrt(2 * Real(M_PI)) * std::exp(x * x / 2);
  x = x - u / (1 + x * u / 2);
  return x;
}

}  // namespace coxsvi
