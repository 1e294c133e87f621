#pragma once

// Exact full-data maximum partial likelihood via Newton-Raphson with
// step halving, plus the inverse-information covariance. Dense in the
// number of covariates, so intended for modest dimension; it is the
// ground truth the stochastic fits are judged against.

#include "coxsvi/data.hpp"
#include "coxsvi/types.hpp"

namespace coxsvi {

struct NewtonConfig {
  Real tol = Real(1e-8);  // convergence: max |score component| < tol
  int max_iter = 50;
  int max_covariates = 200;  // refuse dense Hessians beyond this
  // Monotone likelihoods (separation) drive a coefficient off to infinity
  // while the score decays to zero, so score tolerance alone would declare
  // convergence. Iterates beyond this magnitude raise NumericalError.
  Real divergence_threshold = 20;
};

struct MleResult {
  Vector theta;
  Matrix covariance;  // inverse information at theta
  Vector se;          // sqrt of its diagonal
  Real loglik = 0;
  int iterations = 0;
  bool converged = false;
};

// Starts from `init` (zeros by default), iterates
// theta <- theta + information^-1 score, halving the step while the
// partial log likelihood would decrease. Throws NumericalError when the
// information matrix is not positive definite (collinear covariates,
// monotone likelihood).
MleResult newton_fit(const CoxRows& rows, const Vector& init,
                     const NewtonConfig& config = {});
MleResult newton_fit(const CoxRows& rows, const NewtonConfig& config = {});

}  // namespace coxsvi
