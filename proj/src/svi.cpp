#include "coxsvi/svi.hpp"

#include "coxsvi/likelihood.hpp"
#include "coxsvi/numeric.hpp"

#include <Eigen/Cholesky>

#include <chrono>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

namespace coxsvi {

namespace {

Index packed_dim(const VariationalState& state) {
  const Index p = state.dim();
  switch (state.family) {
    case Family::meanfield:
      return 2 * p;
    case Family::fullrank:
      return p + p * (p + 1) / 2;
    case Family::lowrank:
      return p + state.rank() * p + (state.unit_diagonal ? 0 : p);
  }
  throw std::logic_error("packed_dim: unknown family");
}

}  // namespace

Vector pack_parameters(const VariationalState& state) {
  const Index p = state.dim();
  Vector out(packed_dim(state));
  out.head(p) = state.loc;
  Index at = p;
  switch (state.family) {
    case Family::meanfield:
      out.segment(at, p) = state.scale_raw;
      break;
    case Family::fullrank:
      for (Index j = 0; j < p; ++j)
        for (Index k = 0; k <= j; ++k) out[at++] = state.factor_raw(j, k);
      break;
    case Family::lowrank:
      for (Index r = 0; r < state.w.rows(); ++r)
        for (Index j = 0; j < p; ++j) out[at++] = state.w(r, j);
      if (!state.unit_diagonal) out.segment(at, p) = state.diag_raw;
      break;
  }
  return out;
}

void unpack_parameters(const Vector& packed, VariationalState& state) {
  const Index p = state.dim();
  if (packed.size() != packed_dim(state))
    throw std::invalid_argument("unpack_parameters: length mismatch");
  state.loc = packed.head(p);
  Index at = p;
  switch (state.family) {
    case Family::meanfield:
      state.scale_raw = packed.segment(at, p);
      break;
    case Family::fullrank:
      for (Index j = 0; j < p; ++j)
        for (Index k = 0; k <= j; ++k) state.factor_raw(j, k) = packed[at++];
      break;
    case Family::lowrank:
      for (Index r = 0; r < state.w.rows(); ++r)
        for (Index j = 0; j < p; ++j) state.w(r, j) = packed[at++];
      if (!state.unit_diagonal) state.diag_raw = packed.segment(at, p);
      break;
  }
}

namespace {

// Gradient of the entropy with respect to the packed parameters; loc block
// is zero.
Vector entropy_gradient(const VariationalState& state) {
  const Index p = state.dim();
  Vector grad = Vector::Zero(packed_dim(state));
  Index at = p;
  switch (state.family) {
    case Family::meanfield:
      for (Index j = 0; j < p; ++j) {
        const Real raw = state.scale_raw[j];
        grad[at + j] = sigmoid(raw) / softplus(raw);
      }
      break;
    case Family::fullrank:
      for (Index j = 0; j < p; ++j) {
        at += j;  // off-diagonal entries of row j contribute nothing
        const Real raw = state.factor_raw(j, j);
        grad[at++] = sigmoid(raw) / softplus(raw);
      }
      break;
    case Family::lowrank: {
      const int r = state.rank();
      Vector d = Vector::Ones(p);
      if (!state.unit_diagonal)
        for (Index j = 0; j < p; ++j) d[j] = softplus(state.diag_raw[j]);
      // a = W diag(d)^-2; m = I + a W'; d(H)/dW = m^-1 a
      const Matrix a = state.w.array().rowwise() / d.array().square().transpose();
      Matrix m = a * state.w.transpose();
      m.diagonal().array() += 1;
      const Eigen::LLT<Matrix> llt(m);
      if (llt.info() != Eigen::Success)
        throw NumericalError("entropy_gradient: capacitance matrix not positive definite");
      const Matrix b = llt.solve(a);  // rank x p
      for (int row = 0; row < r; ++row)
        for (Index j = 0; j < p; ++j) grad[at++] = b(row, j);
      if (!state.unit_diagonal) {
        // d(H)/d d_j = Sigma^-1_jj d_j with Sigma^-1 = D^-2 - a' m^-1 a
        for (Index j = 0; j < p; ++j) {
          const Real inv_jj =
              1 / (d[j] * d[j]) - a.col(j).dot(b.col(j));
          grad[at++] = inv_jj * d[j] * sigmoid(state.diag_raw[j]);
        }
      }
      break;
    }
  }
  return grad;
}

// Scatter d(f)/d(theta) through the reparameterization into the packed
// layout for one noise row.
void scatter_theta_gradient(const VariationalState& state, const Vector& g_theta,
                            const Eigen::Ref<const Eigen::RowVectorXd>& eps,
                            Vector& packed_grad) {
  const Index p = state.dim();
  packed_grad.head(p) += g_theta;
  Index at = p;
  switch (state.family) {
    case Family::meanfield:
      for (Index j = 0; j < p; ++j)
        packed_grad[at + j] += g_theta[j] * eps[j] * sigmoid(state.scale_raw[j]);
      break;
    case Family::fullrank:
      for (Index j = 0; j < p; ++j) {
        for (Index k = 0; k < j; ++k) packed_grad[at++] += g_theta[j] * eps[k];
        packed_grad[at++] += g_theta[j] * eps[j] * sigmoid(state.factor_raw(j, j));
      }
      break;
    case Family::lowrank: {
      const int r = state.rank();
      for (int row = 0; row < r; ++row)
        for (Index j = 0; j < p; ++j) packed_grad[at++] += eps[row] * g_theta[j];
      if (!state.unit_diagonal)
        for (Index j = 0; j < p; ++j)
          packed_grad[at++] +=
              g_theta[j] * eps[r + j] * sigmoid(state.diag_raw[j]);
      break;
    }
  }
}

struct NoiseEvaluation {
  Real elbo = 0;
  Real mean_loglik = 0;
  Vector packed_grad;  // empty unless gradients requested
};

NoiseEvaluation evaluate_noise(const VariationalState& state, const Batch& batch,
                               const PartialLikelihood& lik, const PriorSpec& prior,
                               const Matrix& eps, bool want_gradient) {
  const Index n = eps.rows();
  if (n < 1) throw std::invalid_argument("elbo evaluation: need at least one noise row");
  const Matrix theta = theta_from_noise(state, eps);
  NoiseEvaluation out;
  if (want_gradient) out.packed_grad = Vector::Zero(packed_dim(state));
  Real sum_obj = 0, sum_ll = 0;
  for (Index i = 0; i < n; ++i) {
    const Vector theta_i = theta.row(i).transpose();
    const LikelihoodValue lv =
        lik.value(theta_i, batch.event_weight, batch.risk_weight, want_gradient);
    sum_ll += lv.loglik;
    sum_obj += lv.loglik + log_prior(prior, theta_i);
    if (want_gradient) {
      const Vector g_theta = *lv.gradient + log_prior_grad(prior, theta_i);
      scatter_theta_gradient(state, g_theta, eps.row(i), out.packed_grad);
    }
  }
  out.elbo = sum_obj / Real(n) + entropy(state);
  out.mean_loglik = sum_ll / Real(n);
  if (want_gradient) {
    out.packed_grad /= Real(n);
    out.packed_grad += entropy_gradient(state);
  }
  return out;
}

Matrix draw_noise(const VariationalState& state, Rng& rng, Index n) {
  Matrix eps(n, state.noise_dim());
  std::normal_distribution<Real> normal(0, 1);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < eps.cols(); ++j) eps(i, j) = normal(rng);
  return eps;
}

}  // namespace

Real elbo_estimate(const VariationalState& state, const Batch& batch,
                   const PriorSpec& prior, Rng& rng, int mc_samples) {
  if (mc_samples < 1) throw std::invalid_argument("elbo_estimate: mc_samples >= 1");
  const Matrix eps = draw_noise(state, rng, mc_samples);
  return elbo_with_noise(state, batch, prior, eps);
}

Real elbo_with_noise(const VariationalState& state, const Batch& batch,
                     const PriorSpec& prior, const Matrix& eps) {
  const PartialLikelihood lik(batch.rows);
  return evaluate_noise(state, batch, lik, prior, eps, false).elbo;
}

Vector elbo_gradient_with_noise(const VariationalState& state, const Batch& batch,
                                const PriorSpec& prior, const Matrix& eps,
                                Real* elbo_out, Real* loglik_out) {
  const PartialLikelihood lik(batch.rows);
  NoiseEvaluation eval = evaluate_noise(state, batch, lik, prior, eps, true);
  if (elbo_out) *elbo_out = eval.elbo;
  if (loglik_out) *loglik_out = eval.mean_loglik;
  return std::move(eval.packed_grad);
}

void adam_update(AdamState& adam, Vector& packed, const Vector& grad,
                 const FitConfig& config, Index step_index) {
  const Index dim = grad.size();
  if (packed.size() != dim)
    throw std::invalid_argument("adam_update: packed/gradient length mismatch");
  if (adam.m.size() != dim) {
    adam.m = Vector::Zero(dim);
    adam.v = Vector::Zero(dim);
    adam.t = 0;
  }
  adam.t += 1;
  adam.m = config.beta1 * adam.m + (1 - config.beta1) * grad;
  adam.v.array() =
      config.beta2 * adam.v.array() + (1 - config.beta2) * grad.array().square();
  const Real m_correct = 1 - std::pow(config.beta1, static_cast<Real>(adam.t));
  const Real v_correct = 1 - std::pow(config.beta2, static_cast<Real>(adam.t));

  Real lr = config.learning_rate;
  if (config.lr_decay != Real(1) && config.steps > 1) {
    const Real frac = static_cast<Real>(step_index) / static_cast<Real>(config.steps - 1);
    lr *= std::pow(config.lr_decay, frac);
  }

  packed.array() += lr * (adam.m.array() / m_correct) /
                    ((adam.v.array() / v_correct).sqrt() + config.adam_epsilon);
}

TraceRecord svi_step(VariationalState& state, AdamState& adam, const Batch& batch,
                     const PartialLikelihood& lik, const PriorSpec& prior,
                     const FitConfig& config, Index step_index, Rng& rng) {
  if (config.mc_samples < 1)
    throw std::invalid_argument("svi_step: mc_samples >= 1");
  const Matrix eps = draw_noise(state, rng, config.mc_samples);
  const NoiseEvaluation eval = evaluate_noise(state, batch, lik, prior, eps, true);
  if (!eval.packed_grad.allFinite())
    throw NumericalError("svi_step: non-finite gradient at step " +
                         std::to_string(step_index));

  Vector packed = pack_parameters(state);
  adam_update(adam, packed, eval.packed_grad, config, step_index);
  unpack_parameters(packed, state);

  TraceRecord rec;
  rec.step = step_index;
  rec.elbo = eval.elbo;
  rec.loglik = eval.mean_loglik;
  rec.grad_norm = eval.packed_grad.norm();
  return rec;
}

bool has_converged(const std::vector<TraceRecord>& trace, Index window, Real tol) {
  if (window < 1) throw std::invalid_argument("has_converged: window >= 1");
  if (!(tol > Real(0))) return false;
  const Index n = static_cast<Index>(trace.size());
  if (n < 2 * window) return false;
  Real prev = 0, last = 0;
  for (Index i = n - 2 * window; i < n - window; ++i)
    prev += trace[static_cast<std::size_t>(i)].elbo;
  for (Index i = n - window; i < n; ++i)
    last += trace[static_cast<std::size_t>(i)].elbo;
  prev /= static_cast<Real>(window);
  last /= static_cast<Real>(window);
  const Real denom = std::max(std::abs(prev), Real(1e-12));
  return std::abs(last - prev) / denom < tol;
}

FitResult fit(const DataSource& source, const PriorSpec& prior,
              const FamilyConfig& family, const FitConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  const DatasetTotals& totals = source.totals();
  if (totals.total_events < 1)
    throw ValidationError("fit: dataset has no events");
  if (config.steps < 0) throw std::invalid_argument("fit: steps must be >= 0");
  const Index population = config.batch_mode == BatchMode::individuals
                               ? totals.n_individuals
                               : totals.n_observations;
  if (config.batch_size < 1 || config.batch_size > population)
    throw std::invalid_argument("fit: batch_size must be in [1, population]");

  Rng rng(split_seed(config.seed, 1));
  FitResult result;
  result.state = init_state(totals.n_covariates, family, rng);
  result.totals = totals;

  AdamState adam;
  const bool full_batch = config.batch_size == population;
  Batch cached;
  std::unique_ptr<PartialLikelihood> cached_lik;
  if (full_batch && config.steps > 0) {
    cached = sample_batch(source, config.batch_mode, config.batch_size, rng);
    cached_lik = std::make_unique<PartialLikelihood>(cached.rows);
  }

  for (Index step = 0; step < config.steps; ++step) {
    TraceRecord rec;
    if (full_batch) {
      rec = svi_step(result.state, adam, cached, *cached_lik, prior, config, step, rng);
    } else {
      const Batch batch = sample_batch(source, config.batch_mode, config.batch_size, rng);
      const PartialLikelihood lik(batch.rows);
      rec = svi_step(result.state, adam, batch, lik, prior, config, step, rng);
    }
    result.trace.push_back(rec);
    if (config.convergence_window > 0 && config.convergence_tol > 0 &&
        has_converged(result.trace, config.convergence_window, config.convergence_tol)) {
      result.converged_early = true;
      break;
    }
  }

  result.wall_seconds =
      std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace coxsvi
