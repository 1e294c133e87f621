#include "coxsvi/priors.hpp"

#include <cmath>
#include <stdexcept>

namespace coxsvi {

namespace {

void check(const PriorSpec& prior, const Vector& theta) {
  if (prior.kind == PriorKind::normal) {
    if (!(prior.sigma > Real(0)))
      throw std::invalid_argument("log_prior: sigma must be positive");
  } else {
    if (!(prior.nu > Real(0)) || !(prior.s > Real(0)))
      throw std::invalid_argument("log_prior: nu and s must be positive");
  }
  if (!theta.allFinite())
    throw std::invalid_argument("log_prior: theta has non-finite entries");
}

}  // namespace

Real log_prior(const PriorSpec& prior, const Vector& theta) {
  check(prior, theta);
  const Index p = theta.size();
  if (prior.kind == PriorKind::normal) {
    const Real log_norm = Real(-0.5) * std::log(2 * Real(M_PI)) - std::log(prior.sigma);
    return Real(p) * log_norm -
           theta.squaredNorm() / (2 * prior.sigma * prior.sigma);
  }
  const Real nu = prior.nu;
  const Real s = prior.s;
  const Real log_norm = std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2) -
                        Real(0.5) * std::log(nu * Real(M_PI)) - std::log(s);
  Real sum = Real(p) * log_norm;
  const Real half = (nu + 1) / 2;
  for (Index j = 0; j < p; ++j)
    sum -= half * std::log1p(theta[j] * theta[j] / (nu * s * s));
  return sum;
}

Vector log_prior_grad(const PriorSpec& prior, const Vector& theta) {
  check(prior, theta);
  if (prior.kind == PriorKind::normal)
    return -theta / (prior.sigma * prior.sigma);
  const Real nu = prior.nu;
  const Real s = prior.s;
  return (-(nu + 1) * theta.array() / (nu * s * s + theta.array().square())).matrix();
}

}  // namespace coxsvi
