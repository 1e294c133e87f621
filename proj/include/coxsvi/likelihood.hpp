#pragma once

// Cox partial log likelihood on counting-process records, exact and
// subsample-reweighted. An individual is at risk at event time t through a
// record (start, stop] iff start < t <= stop. Tied event times follow the
// Breslow convention: every tied event uses the full risk set at that time.
//
// The reweighted form for a batch multiplies each event term by
// event_weight and places risk_weight inside the log of the risk-set sum:
//
//   event_weight * sum_e [ eta_e - log( risk_weight * sum_{k at risk} exp(eta_k) ) ]
//
// so the value estimates the full-data log likelihood while the gradient,
// computed from the algebraically simplified form, never depends on
// risk_weight. With both weights equal to 1 this is exactly the full
// partial log likelihood.
//
// Determinism: all sums run in a canonical row order derived from record
// values only (stop, start, event flag, covariates), so permuting record
// storage order or relabeling individuals reproduces results bitwise.
// Event terms accumulate in ascending event time, ties in canonical order.

#include "coxsvi/data.hpp"
#include "coxsvi/types.hpp"

#include <optional>
#include <vector>

namespace coxsvi {

inline bool risk_indicator(Real start, Real stop, Real t) {
  return start < t && t <= stop;
}

struct LikelihoodValue {
  Real loglik = 0;
  std::optional<Vector> gradient;
};

// Total order on rows by (stop, start, event, covariates); the anchor row
// for centered gradient sums is the first row in this order.
std::vector<Index> canonical_row_order(const CoxRows& rows);

// Precomputed orderings and event-time groups for repeated evaluation at
// many theta values. Keeps a reference to `rows`, which must stay alive.
// Risk-set sums run max-shifted; a descending-time sweep maintains them
// incrementally and falls back to an exact rescan whenever cancellation
// could bite, so values stay finite for linear predictors up to +-700.
// Gradient event terms are centered differences against the risk-set mean,
// so a covariate column that is constant across the batch contributes an
// exactly zero gradient component.
class PartialLikelihood {
 public:
  explicit PartialLikelihood(const CoxRows& rows);

  // Preconditions: theta finite with one entry per covariate column,
  // at least one event among the rows, risk_weight > 0.
  LikelihoodValue value(const Vector& theta, Real event_weight = 1, Real risk_weight = 1,
                        bool want_gradient = false) const;

  Index n_events() const { return n_events_; }
  const std::vector<Index>& order() const { return canonical_order_; }

 private:
  const CoxRows* rows_;
  Index n_events_ = 0;
  std::vector<Index> canonical_order_;
  std::vector<Index> by_stop_desc_;
  std::vector<Index> by_start_desc_;
  std::vector<Real> event_times_;               // distinct, ascending
  std::vector<std::vector<Index>> events_at_;   // event rows per distinct time
  Vector anchor_;                               // covariates of first canonical row
};

LikelihoodValue partial_loglik(const CoxRows& rows, const Vector& theta,
                               bool want_gradient = false);
LikelihoodValue reweighted_loglik(const Batch& batch, const Vector& theta,
                                  bool want_gradient = false);
Vector loglik_gradient(const Batch& batch, const Vector& theta);

}  // namespace coxsvi
