#pragma once

// Stochastic variational inference for the reweighted Cox partial
// likelihood. Each step draws a fresh batch, estimates the ELBO
//
//   mean_s [ reweighted_loglik(batch, theta_s) + log_prior(theta_s) ]
//     + entropy(state)
//
// by Monte Carlo over reparameterized draws theta_s, and ascends an
// analytic gradient (likelihood and prior terms through the
// reparameterization chain rule, entropy in closed form) with
// bias-corrected adaptive moment updates on the unconstrained parameter
// vector. The reported ELBO keeps the risk weight inside the log, so
// parameter trajectories are invariant to it while the trace value tracks
// the full-data scale.

#include "coxsvi/data.hpp"
#include "coxsvi/priors.hpp"
#include "coxsvi/random.hpp"
#include "coxsvi/types.hpp"
#include "coxsvi/variational.hpp"

#include <vector>

namespace coxsvi {

class PartialLikelihood;

struct FitConfig {
  Index steps = 1000;
  int mc_samples = 1;
  BatchMode batch_mode = BatchMode::observations;
  Index batch_size = 256;
  Real learning_rate = Real(1e-2);
  Real beta1 = Real(0.9);
  Real beta2 = Real(0.999);
  Real adam_epsilon = Real(1e-8);
  // Learning rate at step t is learning_rate * lr_decay^(t / (steps-1));
  // 1 keeps it constant.
  Real lr_decay = 1;
  std::uint64_t seed = 0;
  // Early stopping is advisory and off by default; steps is the budget.
  Index convergence_window = 0;
  Real convergence_tol = 0;
};

struct AdamState {
  Vector m, v;
  Index t = 0;
};

struct TraceRecord {
  Index step = 0;
  Real elbo = 0;
  Real loglik = 0;  // mean reweighted log likelihood over the step's draws
  Real grad_norm = 0;
};

struct FitResult {
  VariationalState state;
  std::vector<TraceRecord> trace;
  DatasetTotals totals;
  Real wall_seconds = 0;
  bool converged_early = false;
};

// Flat unconstrained parameterization: [loc; family block]. meanfield
// appends scale_raw; fullrank appends the lower triangle of factor_raw row
// by row; lowrank appends W row by row then diag_raw (omitted when
// unit_diagonal).
Vector pack_parameters(const VariationalState& state);
void unpack_parameters(const Vector& packed, VariationalState& state);

Real elbo_estimate(const VariationalState& state, const Batch& batch,
                   const PriorSpec& prior, Rng& rng, int mc_samples);

// Same estimator with caller-supplied noise rows; used by the frozen-noise
// finite-difference checks.
Real elbo_with_noise(const VariationalState& state, const Batch& batch,
                     const PriorSpec& prior, const Matrix& eps);

// Analytic gradient of the frozen-noise ELBO with respect to the packed
// parameters. Optionally reports the estimate and the mean reweighted
// log likelihood of the same draws.
Vector elbo_gradient_with_noise(const VariationalState& state, const Batch& batch,
                                const PriorSpec& prior, const Matrix& eps,
                                Real* elbo_out = nullptr, Real* loglik_out = nullptr);

// One bias-corrected adaptive moment update of packed along grad, with the
// learning rate decayed per step_index. A zero gradient coordinate with no
// accumulated moments leaves its parameter untouched.
void adam_update(AdamState& adam, Vector& packed, const Vector& grad,
                 const FitConfig& config, Index step_index);

// One optimization step: draw mc_samples noise rows, ascend. The prepared
// likelihood must wrap batch.rows; step_index drives the decay schedule.
TraceRecord svi_step(VariationalState& state, AdamState& adam, const Batch& batch,
                     const PartialLikelihood& lik, const PriorSpec& prior,
                     const FitConfig& config, Index step_index, Rng& rng);

// Relative change of the windowed running mean of the ELBO trace between
// the last two windows, below tol. Needs 2*window records and tol > 0.
bool has_converged(const std::vector<TraceRecord>& trace, Index window, Real tol);

// Full loop: init state, sample batch + step per iteration, optional early
// stop. When the batch covers the whole population the batch is drawn once
// and reused (both weights are exactly 1).
FitResult fit(const DataSource& source, const PriorSpec& prior,
              const FamilyConfig& family, const FitConfig& config);

}  // namespace coxsvi
