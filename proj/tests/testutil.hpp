#pragma once

// Reference implementations for tests. Everything here is deliberately
// brute-force and shares no code path with the library: per-event risk-set
// scans, central finite differences, exhaustive pair counting, and a
// coordinate-refinement maximizer.

#include "coxsvi/data.hpp"
#include "coxsvi/random.hpp"
#include "coxsvi/types.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace testutil {

using coxsvi::CoxRows;
using coxsvi::Index;
using coxsvi::Matrix;
using coxsvi::Real;
using coxsvi::Vector;

struct RowSpec {
  Index id;
  Real start;
  Real stop;
  int event;
  std::vector<Real> x;
};

inline CoxRows make_rows(const std::vector<RowSpec>& specs) {
  CoxRows rows;
  const Index n = static_cast<Index>(specs.size());
  const Index p = n > 0 ? static_cast<Index>(specs[0].x.size()) : 0;
  rows.start.resize(n);
  rows.stop.resize(n);
  rows.event.resize(n);
  rows.x.resize(n, p);
  for (Index i = 0; i < n; ++i) {
    const auto& s = specs[static_cast<std::size_t>(i)];
    rows.id.push_back(s.id);
    rows.start[i] = s.start;
    rows.stop[i] = s.stop;
    rows.event[i] = s.event;
    for (Index j = 0; j < p; ++j) rows.x(i, j) = s.x[static_cast<std::size_t>(j)];
  }
  return rows;
}

inline Vector vec1(Real x) {
  Vector v(1);
  v << x;
  return v;
}

// Rebuilds totals and individual spans by round-tripping through the CSV
// layer, so hand-made rows pick up the same bookkeeping as parsed files.
inline coxsvi::Dataset dataset_of(const CoxRows& rows) {
  std::ostringstream buf;
  std::vector<std::string> names;
  for (Index j = 0; j < rows.covariates(); ++j)
    names.push_back("X" + std::to_string(j + 1));
  coxsvi::write_long_csv(buf, rows, names);
  std::istringstream in(buf.str());
  return coxsvi::parse_long_csv(in).dataset;
}

inline bool at_risk(const CoxRows& rows, Index k, Real t) {
  return rows.start[k] < t && t <= rows.stop[k];
}

inline coxsvi::Batch full_batch(const CoxRows& rows) {
  coxsvi::Batch b;
  b.rows = rows;
  b.event_weight = 1;
  b.risk_weight = 1;
  for (Index i = 0; i < rows.rows(); ++i) b.batch_events += rows.event[i];
  return b;
}

// Brute-force reweighted partial log-likelihood: one full scan per event
// record, each risk-set sum shifted by its own maximum.
inline Real naive_loglik(const CoxRows& rows, const Vector& theta,
                         Real event_weight = 1, Real risk_weight = 1) {
  const Vector eta = rows.x * theta;
  Real ll = 0;
  for (Index e = 0; e < rows.rows(); ++e) {
    if (rows.event[e] != 1) continue;
    const Real t = rows.stop[e];
    Real m = -std::numeric_limits<Real>::infinity();
    for (Index k = 0; k < rows.rows(); ++k)
      if (at_risk(rows, k, t)) m = std::max(m, eta[k]);
    Real s = 0;
    for (Index k = 0; k < rows.rows(); ++k)
      if (at_risk(rows, k, t)) s += std::exp(eta[k] - m);
    ll += eta[e] - (std::log(risk_weight * s) + m);
  }
  return event_weight * ll;
}

template <typename F>
Vector central_diff(const F& f, const Vector& x, Real h = Real(1e-5)) {
  Vector g(x.size());
  for (Index j = 0; j < x.size(); ++j) {
    Vector hi = x;
    Vector lo = x;
    hi[j] += h;
    lo[j] -= h;
    g[j] = (f(hi) - f(lo)) / (2 * h);
  }
  return g;
}

inline Real rel_err(Real got, Real want) {
  return std::abs(got - want) / std::max(std::abs(want), Real(1e-10));
}

inline Real max_rel_err(const Vector& got, const Vector& want) {
  Real worst = 0;
  for (Index j = 0; j < got.size(); ++j) {
    const Real denom = std::max(std::abs(want[j]), Real(1e-6));
    worst = std::max(worst, std::abs(got[j] - want[j]) / denom);
  }
  return worst;
}

// Random counting-process cohort on an integer day grid (small times, so
// ties across individuals are common). Segments are contiguous per
// individual; the final segment carries an event with probability event_p.
inline CoxRows random_rows(coxsvi::Rng& rng, Index n_individuals, Index p,
                           int max_segments = 3, double event_p = 0.6) {
  std::uniform_int_distribution<int> seg_count(1, max_segments);
  std::uniform_int_distribution<int> seg_len(1, 8);
  std::normal_distribution<Real> normal(0, 1);
  std::bernoulli_distribution event(event_p);
  std::bernoulli_distribution coin(0.5);

  std::vector<RowSpec> specs;
  bool any_event = false;
  for (Index i = 0; i < n_individuals; ++i) {
    const int segs = seg_count(rng);
    Real t = 0;
    for (int s = 0; s < segs; ++s) {
      RowSpec row;
      row.id = i + 1;
      row.start = t;
      t += seg_len(rng);
      row.stop = t;
      row.event = 0;
      for (Index j = 0; j < p; ++j)
        row.x.push_back(j % 2 == 0 ? (coin(rng) ? 1 : 0) : normal(rng));
      specs.push_back(row);
    }
    if (event(rng) || (i + 1 == n_individuals && !any_event)) {
      specs.back().event = 1;
      any_event = true;
    }
  }
  return make_rows(specs);
}

// Exhaustive risk-set pair count for Harrell's concordance.
inline Real brute_concordance(const CoxRows& rows, const Vector& theta) {
  const Vector eta = rows.x * theta;
  Real comparable = 0;
  Real credit = 0;
  for (Index e = 0; e < rows.rows(); ++e) {
    if (rows.event[e] != 1) continue;
    for (Index k = 0; k < rows.rows(); ++k) {
      if (k == e || !at_risk(rows, k, rows.stop[e])) continue;
      comparable += 1;
      if (eta[e] > eta[k])
        credit += 1;
      else if (eta[e] == eta[k])
        credit += Real(0.5);
    }
  }
  return credit / comparable;
}

// Cyclic coordinate refinement for smooth concave functions. Each pass
// line-searches one coordinate on a shrinking symmetric grid.
inline Vector coordinate_maximizer(const std::function<Real(const Vector&)>& f,
                                   Index p, int passes = 80, Real initial_step = 1) {
  Vector x = Vector::Zero(p);
  Real step = initial_step;
  Real fx = f(x);
  for (int pass = 0; pass < passes; ++pass) {
    for (Index j = 0; j < p; ++j) {
      for (;;) {
        Vector up = x;
        up[j] += step;
        Vector dn = x;
        dn[j] -= step;
        const Real fu = f(up);
        const Real fd = f(dn);
        if (fu > fx && fu >= fd) {
          x = up;
          fx = fu;
        } else if (fd > fx) {
          x = dn;
          fx = fd;
        } else {
          break;
        }
      }
    }
    step /= 2;
    if (step < Real(1e-9)) break;
  }
  return x;
}

}  // namespace testutil
