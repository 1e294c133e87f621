#pragma once

#include "coxsvi/data.hpp"
#include "coxsvi/priors.hpp"
#include "coxsvi/svi.hpp"
#include "coxsvi/simulator.hpp"
#include "coxsvi/types.hpp"
#include "coxsvi/variational.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace coxsvi {

// Harrell's concordance on counting-process records.
//
// Covariates vary over time, so pairs are formed against risk sets rather
// than against whole individuals: every event record e at time t_e is
// compared with every other record at risk at t_e (start < t_e <= stop).
// A pair is concordant when the event record has the larger linear
// predictor; exact predictor ties count one half.
//
// Throws ValidationError when no comparable pair exists.
Real concordance(const CoxRows& rows, const Vector& theta);

// How a distribution of batch log-likelihood estimates sits around the
// full-data value.
struct ReweightSummary {
  Real mean = 0;
  Real median = 0;
  // (mean - full) / |full|; falls back to the absolute gap when the
  // full-data log-likelihood is exactly zero.
  Real rel_bias = 0;
};

struct ReweightConfig {
  BatchMode mode = BatchMode::observations;
  Index batch_size = 256;
  Index n_batches = 500;
  std::uint64_t seed = 0;
};

struct ReweightReport {
  Real full_loglik = 0;
  // Per-batch estimates, in draw order, for external plotting.
  std::vector<Real> reweighted;
  std::vector<Real> naive;
  ReweightSummary reweighted_summary;
  ReweightSummary naive_summary;
};

// Draws n_batches subsamples and evaluates two estimators of the full
// partial log-likelihood on each: the event/risk reweighted form, and a
// naive comparator that just scales the plain batch log-likelihood by
// rows(full) / rows(batch).
ReweightReport reweighting_study(const DataSource& source, const Vector& theta,
                                 const ReweightConfig& config = {});

void write_reweight_csv(std::ostream& out, const ReweightReport& report);

// Repeated simulate -> fit -> summarize cycles measuring interval
// calibration against the generating coefficients.
struct CoverageConfig {
  SimConfig sim;
  PriorSpec prior = PriorSpec::normal_prior(1);
  FamilyConfig family;
  FitConfig fit;
  Index runs = 30;
  Real level = Real(0.95);
  std::uint64_t seed = 0;
  int threads = 1;
};

struct CoverageReport {
  Vector theta;
  Vector mean_estimate;
  Vector sd_estimate;
  Vector rmse;
  Vector mean_hpd_width;
  Vector coverage;
  Index runs_completed = 0;
  Index runs_failed = 0;
  Real level = Real(0.95);
};

// Folds per-run posterior summaries into a CoverageReport. Exposed
// separately from the experiment loop so calibration bookkeeping can be
// checked on synthetic summaries.
CoverageReport aggregate_coverage(const Vector& theta_true,
                                  const std::vector<PosteriorSummary>& summaries,
                                  Real level);

// Runs the full experiment. Run r simulates with seed split_seed(seed, 2r)
// and fits with seed split_seed(seed, 2r + 1); runs that throw are counted
// in runs_failed and excluded from the aggregates. Aggregation order is
// fixed by run index regardless of thread count.
CoverageReport coverage_experiment(const CoverageConfig& config);

// 1 where the HPD interval excludes zero, else 0. The identification
// rule used for sparse settings.
IntVector hpd_excludes_zero(const PosteriorSummary& summary);

void write_coverage_csv(std::ostream& out, const CoverageReport& report,
                        const std::vector<std::string>& names = {});

// Fixed-width table for terminal reporting.
std::string format_coverage_table(const CoverageReport& report,
                                  const std::vector<std::string>& names = {});

}  // namespace coxsvi
