#pragma once

// Discrete-time event simulator on an integer day grid. One cohort shares
// a piecewise-constant baseline hazard path; each individual carries
// piecewise-constant covariates and is censored at an independent uniform
// day. On every day t from 1 to the censoring day, an event fires with
// probability
//
//   P(event at t) = sigmoid( logit(alpha0(t)) + theta' x(t) )
//
// where alpha0 and x take their value as of the end of day t-1 (paths are
// predictable: a jump on day s takes effect on day s+1).
//
// Covariates: each individual has one renewal clock with rounded
// Gamma-distributed waiting times; at every jump all covariate values are
// redrawn fresh (binary Bernoulli, continuous Normal), starting from 0
// before the first jump. Records split exactly at these jumps, so each
// emitted interval (jump_i, jump_{i+1}] carries constant covariates.
//
// Baseline: an independent renewal process with signed Gamma rewards
// accumulating over age (rising, flattening, then declining), scaled by
// hazard_scale and clamped into [1e-12, 1 - 1e-12].
//
// Determinism: individual i uses an RNG seeded from (seed, i) and the
// baseline from (seed, 0), so results are identical for any thread count.
// Per individual the draw order is: censoring day, then per covariate jump
// the waiting time and the redraws (binary block then continuous block),
// then one uniform per simulated day.

#include "coxsvi/data.hpp"
#include "coxsvi/random.hpp"
#include "coxsvi/types.hpp"

#include <vector>

namespace coxsvi {

struct GammaSpec {
  Real shape = 1;
  Real scale = 1;  // mean = shape * scale
};

// Right-continuous pure-jump path; value(t) sums all jumps at times <= t
// and is 0 before the first jump.
struct StepFunction {
  std::vector<Real> times;   // strictly increasing
  std::vector<Real> values;  // path value from times[i] onward

  Real value(Real t) const;
  Index jump_count(Real t) const;  // jumps with time <= t
};

struct RenewalRewardSpec {
  enum class Reward { normal, bernoulli };
  GammaSpec waiting{4, 500};
  Reward reward = Reward::normal;
  Real normal_mean = 0;
  Real normal_sd = 1;
  Real bernoulli_p = Real(0.2);
};

// Cumulative renewal-reward path: waiting times are Gamma draws rounded to
// the nearest day (0 rounds up to 1); the value at t is the sum of all
// rewards banked at jumps <= t. Jumps beyond the horizon are not drawn.
StepFunction sample_renewal_reward(const RenewalRewardSpec& spec, Real horizon, Rng& rng);

enum class BaselineKind { renewal, constant };

struct BaselineSpec {
  BaselineKind kind = BaselineKind::renewal;
  GammaSpec waiting{4, 200};
  // Reward sign schedule by jump age: +rise up to rise_until, +plateau up
  // to plateau_until, -decline afterwards.
  Real rise_until = 15000;
  Real plateau_until = 25000;
  GammaSpec rise_reward{2, 1};
  GammaSpec plateau_reward{1, 10};
  GammaSpec decline_reward{1, 5};
  Real constant_value = Real(0.5);  // BaselineKind::constant, pre-clamp
};

// Hazard path: cumulative signed rewards scaled by hazard_scale, clamped
// into [1e-12, 1 - 1e-12]. The path starts at the clamp floor at time 0,
// so an all-zero raw path is the constant floor. Nondecreasing while the
// schedule forbids negative rewards.
StepFunction build_baseline(const BaselineSpec& spec, Real horizon, Real hazard_scale,
                            Rng& rng);

// sigmoid(logit(alpha0) + eta); requires 0 < alpha0 < 1. At eta = 0 this
// is alpha0; adding eta multiplies the per-day odds by exp(eta).
Real event_probability(Real alpha0, Real eta);

struct SimConfig {
  Index n_individuals = 1000;
  int n_binary = 3;
  int n_continuous = 3;
  Vector theta;  // size n_binary + n_continuous; empty means all zero
  GammaSpec covariate_waiting{4, 500};
  Real bernoulli_p = Real(0.2);
  Real normal_mean = 0;
  Real normal_sd = 1;
  BaselineSpec baseline;
  Real hazard_scale = 1;
  Real censor_low = 1000;
  Real censor_high = 30000;
  Real horizon = 30000;  // baseline path length; at least censor_high
  std::uint64_t seed = 1;

  int covariates() const { return n_binary + n_continuous; }
};

// Records for one individual: contiguous intervals starting at 0, stops
// strictly increasing, at most one event and only on the last record.
// Covariate columns order the binary block before the continuous block.
CoxRows simulate_individual(const SimConfig& config, const StepFunction& baseline,
                            Index individual_id, Rng& rng);

struct CohortTruth {
  Dataset data;          // ids 1..n, grouped by individual
  Vector theta;          // generating coefficients
  StepFunction baseline; // realized hazard path
  Real censorship = 0;   // censored fraction of individuals
  Real tie_fraction = 0; // events sharing their day with another event
};

CohortTruth simulate_cohort(const SimConfig& config, int threads = 1);

// Bisection on log(hazard_scale) against the realized censorship of a
// pilot cohort of pilot_n individuals simulated from `config` (same seed
// each evaluation, so the objective is deterministic and monotone).
Real calibrate_hazard_scale(const SimConfig& config, Real target_censorship,
                            Index pilot_n, int iterations = 40);

}  // namespace coxsvi
