#pragma once

// Coefficient priors: iid zero-centered Normal(0, sigma^2) or
// Student-t(nu, 0, s) per coordinate, with full normalizing constants so
// log densities are comparable across settings. The heavy-tailed
// Student-t with small scale is the sparse choice for high-dimensional
// fits; nu = 1 makes it a Cauchy.

#include "coxsvi/types.hpp"

namespace coxsvi {

enum class PriorKind { normal, student_t };

struct PriorSpec {
  PriorKind kind = PriorKind::normal;
  Real sigma = 1;  // normal sd
  Real nu = 1;     // student-t degrees of freedom
  Real s = 1;      // student-t scale

  static PriorSpec normal_prior(Real sigma) {
    PriorSpec p;
    p.kind = PriorKind::normal;
    p.sigma = sigma;
    return p;
  }
  static PriorSpec student_t_prior(Real nu, Real s) {
    PriorSpec p;
    p.kind = PriorKind::student_t;
    p.nu = nu;
    p.s = s;
    return p;
  }
};

// Sum of per-coordinate log densities. Throws std::invalid_argument on
// non-positive sigma/nu/s or non-finite theta.
Real log_prior(const PriorSpec& prior, const Vector& theta);

// d log_prior / d theta, elementwise:
//   normal:    -theta / sigma^2
//   student-t: -(nu + 1) * theta / (nu * s^2 + theta^2)
Vector log_prior_grad(const PriorSpec& prior, const Vector& theta);

}  // namespace coxsvi
