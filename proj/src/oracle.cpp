#include "coxsvi/oracle.hpp"

#include "coxsvi/likelihood.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace coxsvi {

namespace {

// Loglik, score, and observed information in one pass. Risk-set sums are
// recomputed exactly per distinct event time in canonical row order
// (deterministic and permutation invariant); covariates are centered at
// the likelihood anchor, which leaves score and information unchanged
// algebraically but keeps the sums well conditioned.
struct NewtonWork {
  const CoxRows& rows;
  std::vector<Index> order;
  Vector anchor;
  std::vector<Real> event_times;              // distinct, ascending
  std::vector<std::vector<Index>> events_at;  // event rows per distinct time

  explicit NewtonWork(const CoxRows& r) : rows(r) {
    order = canonical_row_order(rows);
    anchor = rows.x.row(order.front()).transpose();
    for (const Index k : order)
      if (rows.event[k] == 1) {
        if (event_times.empty() || event_times.back() != rows.stop[k]) {
          event_times.push_back(rows.stop[k]);
          events_at.emplace_back();
        }
        events_at.back().push_back(k);
      }
    if (event_times.empty())
      throw std::invalid_argument("newton_fit: no events among records");
  }

  void evaluate(const Vector& theta, Real& loglik, Vector* score, Matrix* info) const {
    const Index p = rows.covariates();
    const Vector eta = rows.x * theta;
    loglik = 0;
    if (score) score->setZero(p);
    if (info) info->setZero(p, p);
    Vector s1(p);
    Matrix s2(p, p);
    Vector xc(p);
    for (std::size_t d = 0; d < event_times.size(); ++d) {
      const Real t = event_times[d];
      Real eta_max = -std::numeric_limits<Real>::infinity();
      for (const Index k : order)
        if (risk_indicator(rows.start[k], rows.stop[k], t))
          eta_max = std::max(eta_max, eta[k]);
      Real s0 = 0;
      s1.setZero();
      if (info) s2.setZero();
      for (const Index k : order) {
        if (!risk_indicator(rows.start[k], rows.stop[k], t)) continue;
        const Real ek = std::exp(eta[k] - eta_max);
        xc = rows.x.row(k).transpose() - anchor;
        s0 += ek;
        s1.noalias() += ek * xc;
        if (info) s2.selfadjointView<Eigen::Lower>().rankUpdate(xc, ek);
      }
      const Real log_s0 = std::log(s0) + eta_max;
      const Vector mean = s1 / s0;
      for (const Index k : events_at[d]) {
        loglik += eta[k] - log_s0;
        if (score)
          score->noalias() += rows.x.row(k).transpose() - anchor - mean;
        if (info) {
          info->triangularView<Eigen::Lower>() += s2 / s0;
          info->selfadjointView<Eigen::Lower>().rankUpdate(mean, Real(-1));
        }
      }
    }
    if (info) *info = info->selfadjointView<Eigen::Lower>();
  }
};

}  // namespace

MleResult newton_fit(const CoxRows& rows, const Vector& init, const NewtonConfig& config) {
  const Index p = rows.covariates();
  if (p < 1) throw std::invalid_argument("newton_fit: no covariates");
  if (p > config.max_covariates)
    throw std::invalid_argument("newton_fit: covariate count exceeds the dense cap");
  if (init.size() != p) throw std::invalid_argument("newton_fit: init length mismatch");
  if (!init.allFinite()) throw std::invalid_argument("newton_fit: init not finite");

  const NewtonWork work(rows);
  MleResult out;
  out.theta = init;

  Real loglik;
  Vector score(p);
  Matrix info(p, p);
  work.evaluate(out.theta, loglik, &score, &info);

  for (int it = 0; it < config.max_iter; ++it) {
    if (score.cwiseAbs().maxCoeff() < config.tol) {
      out.converged = true;
      break;
    }
    const Eigen::LLT<Matrix> llt(info);
    if (llt.info() != Eigen::Success)
      throw NumericalError(
          "newton_fit: information matrix is not positive definite "
          "(collinear covariates or monotone likelihood)");
    const Vector direction = llt.solve(score);

    Real step = 1;
    Vector candidate;
    Real cand_ll = 0;
    for (int halving = 0; halving < 40; ++halving) {
      candidate = out.theta + step * direction;
      work.evaluate(candidate, cand_ll, nullptr, nullptr);
      if (std::isfinite(cand_ll) && cand_ll >= loglik) break;
      step /= 2;
    }
    // Monotone likelihood: the objective plateaus while the iterates keep
    // taking O(1) steps. Near a genuine maximum Newton steps shrink with
    // the score, so both conditions never hold together on regular data.
    if (cand_ll - loglik < 10 * config.tol &&
        (candidate - out.theta).cwiseAbs().maxCoeff() > Real(0.1))
      throw NumericalError(
          "newton_fit: monotone likelihood, information is singular along "
          "a diverging coefficient");
    out.theta = candidate;
    if (out.theta.cwiseAbs().maxCoeff() > config.divergence_threshold)
      throw NumericalError(
          "newton_fit: monotone likelihood, a coefficient is diverging");
    ++out.iterations;
    work.evaluate(out.theta, loglik, &score, &info);
  }
  if (!out.converged && score.cwiseAbs().maxCoeff() < config.tol) out.converged = true;

  const Eigen::LLT<Matrix> llt(info);
  if (llt.info() != Eigen::Success)
    throw NumericalError(
        "newton_fit: information matrix is not positive definite at the optimum");
  out.covariance = llt.solve(Matrix::Identity(p, p));
  out.se = out.covariance.diagonal().cwiseSqrt();
  out.loglik = loglik;
  return out;
}

MleResult newton_fit(const CoxRows& rows, const NewtonConfig& config) {
  return newton_fit(rows, Vector::Zero(rows.covariates()), config);
}

}  // namespace coxsvi
