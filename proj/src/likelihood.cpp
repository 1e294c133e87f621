#include "coxsvi/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace coxsvi {

std::vector<Index> canonical_row_order(const CoxRows& rows) {
  const Index n = rows.rows();
  const Index p = rows.covariates();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index(0));
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (rows.stop[a] != rows.stop[b]) return rows.stop[a] < rows.stop[b];
    if (rows.start[a] != rows.start[b]) return rows.start[a] < rows.start[b];
    if (rows.event[a] != rows.event[b]) return rows.event[a] < rows.event[b];
    for (Index j = 0; j < p; ++j)
      if (rows.x(a, j) != rows.x(b, j)) return rows.x(a, j) < rows.x(b, j);
    return false;
  });
  return order;
}

PartialLikelihood::PartialLikelihood(const CoxRows& rows) : rows_(&rows) {
  const Index n = rows.rows();
  if (n == 0) throw std::invalid_argument("PartialLikelihood: no records");
  canonical_order_ = canonical_row_order(rows);
  anchor_ = rows.x.row(canonical_order_.front()).transpose();

  by_stop_desc_ = canonical_order_;
  std::stable_sort(by_stop_desc_.begin(), by_stop_desc_.end(),
                   [&](Index a, Index b) { return rows.stop[a] > rows.stop[b]; });
  by_start_desc_ = canonical_order_;
  std::stable_sort(by_start_desc_.begin(), by_start_desc_.end(),
                   [&](Index a, Index b) { return rows.start[a] > rows.start[b]; });

  for (const Index k : canonical_order_)
    if (rows.event[k] == 1) {
      ++n_events_;
      if (event_times_.empty() || event_times_.back() != rows.stop[k]) {
        event_times_.push_back(rows.stop[k]);
        events_at_.emplace_back();
      }
      events_at_.back().push_back(k);
    }
  if (n_events_ == 0)
    throw std::invalid_argument("PartialLikelihood: no events among records");
}

LikelihoodValue PartialLikelihood::value(const Vector& theta, Real event_weight,
                                         Real risk_weight, bool want_gradient) const {
  const CoxRows& rows = *rows_;
  const Index n = rows.rows();
  const Index p = rows.covariates();
  if (theta.size() != p)
    throw std::invalid_argument("partial_loglik: theta length does not match covariates");
  if (!theta.allFinite())
    throw std::invalid_argument("partial_loglik: theta has non-finite entries");
  if (!(risk_weight > Real(0)))
    throw std::invalid_argument("partial_loglik: risk_weight must be positive");

  const Vector eta = rows.x * theta;

  const Index n_times = static_cast<Index>(event_times_.size());
  std::vector<Real> log_s0(static_cast<std::size_t>(n_times));
  Matrix risk_mean;  // centered risk-set covariate means, one column per time
  if (want_gradient) risk_mean.resize(p, n_times);

  // Descending-time sweep. active[k] tracks risk-set membership; s0/s1 are
  // running sums of exp(eta - shift) and exp(eta - shift) * (x - anchor)
  // over active rows. The shift adapts: an exact rescan with a fresh local
  // maximum restores the sums whenever removals have eaten most of the mass
  // or a new row would overflow under the current shift.
  std::vector<char> active(static_cast<std::size_t>(n), 0);
  Real shift = 0;
  bool have_shift = false;
  Real s0 = 0;
  Real s0_high_water = 0;
  Vector s1;
  if (want_gradient) s1 = Vector::Zero(p);
  std::size_t add_ptr = 0, remove_ptr = 0;

  auto rescan = [&]() {
    Real local_max = -std::numeric_limits<Real>::infinity();
    for (const Index k : canonical_order_)
      if (active[static_cast<std::size_t>(k)]) local_max = std::max(local_max, eta[k]);
    shift = local_max;
    s0 = 0;
    if (want_gradient) s1.setZero();
    for (const Index k : canonical_order_)
      if (active[static_cast<std::size_t>(k)]) {
        const Real ek = std::exp(eta[k] - shift);
        s0 += ek;
        if (want_gradient) s1.noalias() += ek * (rows.x.row(k).transpose() - anchor_);
      }
    s0_high_water = s0;
  };

  for (Index d = n_times - 1; d >= 0; --d) {
    const Real t = event_times_[static_cast<std::size_t>(d)];
    bool needs_rescan = false;
    while (add_ptr < by_stop_desc_.size() && rows.stop[by_stop_desc_[add_ptr]] >= t) {
      const Index k = by_stop_desc_[add_ptr++];
      active[static_cast<std::size_t>(k)] = 1;
      if (!have_shift) {
        shift = eta[k];
        have_shift = true;
      }
      if (eta[k] - shift > Real(500)) {
        needs_rescan = true;
        continue;
      }
      const Real ek = std::exp(eta[k] - shift);
      s0 += ek;
      if (want_gradient) s1.noalias() += ek * (rows.x.row(k).transpose() - anchor_);
    }
    s0_high_water = std::max(s0_high_water, s0);
    while (remove_ptr < by_start_desc_.size() && rows.start[by_start_desc_[remove_ptr]] >= t) {
      const Index k = by_start_desc_[remove_ptr++];
      active[static_cast<std::size_t>(k)] = 0;
      const Real ek = std::exp(eta[k] - shift);
      s0 -= ek;
      if (want_gradient) s1.noalias() -= ek * (rows.x.row(k).transpose() - anchor_);
    }
    if (needs_rescan || !(s0 > s0_high_water * Real(1e-3))) rescan();
    log_s0[static_cast<std::size_t>(d)] = std::log(s0) + shift;
    if (want_gradient) risk_mean.col(d) = s1 / s0;
  }

  // Ascending accumulation of event terms.
  const Real log_rw = std::log(risk_weight);
  LikelihoodValue out;
  Vector grad;
  if (want_gradient) grad = Vector::Zero(p);
  Real ll = 0;
  for (Index d = 0; d < n_times; ++d) {
    for (const Index k : events_at_[static_cast<std::size_t>(d)]) {
      ll += eta[k] - log_rw - log_s0[static_cast<std::size_t>(d)];
      if (want_gradient)
        grad.noalias() += rows.x.row(k).transpose() - anchor_ - risk_mean.col(d);
    }
  }
  out.loglik = event_weight * ll;
  if (want_gradient) out.gradient = event_weight * grad;
  return out;
}

LikelihoodValue partial_loglik(const CoxRows& rows, const Vector& theta,
                               bool want_gradient) {
  return PartialLikelihood(rows).value(theta, 1, 1, want_gradient);
}

LikelihoodValue reweighted_loglik(const Batch& batch, const Vector& theta,
                                  bool want_gradient) {
  return PartialLikelihood(batch.rows).value(theta, batch.event_weight,
                                             batch.risk_weight, want_gradient);
}

Vector loglik_gradient(const Batch& batch, const Vector& theta) {
  return *reweighted_loglik(batch, theta, true).gradient;
}

}  // namespace coxsvi
