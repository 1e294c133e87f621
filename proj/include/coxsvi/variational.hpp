#pragma once

// Gaussian variational families over coefficients, sampled by the
// reparameterization theta = loc + factor(eps) with standard normal noise:
//
//   meanfield  diagonal sds, softplus-positive
//   fullrank   lower-triangular Cholesky factor, softplus diagonal
//   lowrank    covariance W' W + diag(d)^2 with W rank x p and d softplus-
//              positive; unit_diagonal pins d at exactly 1 instead
//
// Noise draw order is fixed and documented: each sample draws its noise
// coordinates in order (lowrank draws the rank block first, then the
// diagonal block), so (state, seed, n) determines every draw.

#include "coxsvi/random.hpp"
#include "coxsvi/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace coxsvi {

enum class Family { meanfield, fullrank, lowrank };

struct FamilyConfig {
  Family family = Family::meanfield;
  int rank = 0;              // lowrank only, >= 1
  bool unit_diagonal = false;  // lowrank only
};

struct VariationalState {
  Family family = Family::meanfield;
  Vector loc;
  Vector scale_raw;   // meanfield: per-coordinate sd through softplus
  Matrix factor_raw;  // fullrank: lower triangle; diagonal through softplus
  Matrix w;           // lowrank: rank x p
  Vector diag_raw;    // lowrank diagonal sds through softplus; empty if unit_diagonal
  bool unit_diagonal = false;

  Index dim() const { return loc.size(); }
  int rank() const { return static_cast<int>(w.rows()); }
  // Noise coordinates consumed per sample.
  Index noise_dim() const {
    return family == Family::lowrank ? dim() + rank() : dim();
  }
};

// loc = 0 and marginal sds near 0.1: meanfield and fullrank start at
// covariance 0.01*I exactly; lowrank draws W entries iid Normal(0, 0.01^2)
// (row by row) on top of diagonal sds 0.1, or exactly 1 with unit_diagonal.
VariationalState init_state(Index p, const FamilyConfig& config, Rng& rng);

struct ThetaDraws {
  Matrix theta;  // n x p
  Matrix eps;    // n x noise_dim
};

ThetaDraws sample_theta(const VariationalState& state, Rng& rng, Index n);

// Deterministic transform of given noise rows; shared by sampling and by
// frozen-noise gradient checks.
Matrix theta_from_noise(const VariationalState& state, const Matrix& eps);

// Gaussian differential entropy (p/2) log(2 pi e) + (1/2) log det Sigma.
// The lowrank determinant uses the matrix determinant lemma:
// log det(diag^2) + log det(I_rank + W diag^-2 W').
Real entropy(const VariationalState& state);

Vector marginal_sd(const VariationalState& state);
Matrix dense_covariance(const VariationalState& state);

struct PosteriorSummary {
  std::vector<std::string> names;  // optional; writer falls back to X1..Xp
  Vector mean, sd, hpd_low, hpd_high;
  Vector hazard_ratio, hazard_ratio_low, hazard_ratio_high;
  Real level = 0.95;
};

// Central interval of a Gaussian marginal is its highest-density interval:
// mean +- z_{(1+level)/2} * sd. Hazard ratios are the exp transform.
PosteriorSummary marginal_summary(const VariationalState& state, Real level,
                                  std::vector<std::string> names = {});

// CSV schema: name,mean,sd,hpd_low,hpd_high,hazard_ratio,hazard_ratio_low,
// hazard_ratio_high
void write_summary_csv(std::ostream& out, const PosteriorSummary& summary);

}  // namespace coxsvi
