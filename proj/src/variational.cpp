#include "coxsvi/variational.hpp"

#include "coxsvi/format.hpp"
#include "coxsvi/numeric.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace coxsvi {

namespace {

// Lower-triangular Cholesky factor with softplus-mapped diagonal.
Matrix fullrank_factor(const VariationalState& state) {
  const Index p = state.dim();
  Matrix l = Matrix::Zero(p, p);
  for (Index j = 0; j < p; ++j) {
    for (Index k = 0; k < j; ++k) l(j, k) = state.factor_raw(j, k);
    l(j, j) = softplus(state.factor_raw(j, j));
  }
  return l;
}

Vector lowrank_diag(const VariationalState& state) {
  const Index p = state.dim();
  if (state.unit_diagonal) return Vector::Ones(p);
  Vector d(p);
  for (Index j = 0; j < p; ++j) d[j] = softplus(state.diag_raw[j]);
  return d;
}

void check_family_shapes(const VariationalState& state) {
  const Index p = state.dim();
  switch (state.family) {
    case Family::meanfield:
      if (state.scale_raw.size() != p)
        throw std::invalid_argument("variational state: scale_raw size mismatch");
      break;
    case Family::fullrank:
      if (state.factor_raw.rows() != p || state.factor_raw.cols() != p)
        throw std::invalid_argument("variational state: factor_raw shape mismatch");
      break;
    case Family::lowrank:
      if (state.w.cols() != p || state.w.rows() < 1)
        throw std::invalid_argument("variational state: w shape mismatch");
      if (!state.unit_diagonal && state.diag_raw.size() != p)
        throw std::invalid_argument("variational state: diag_raw size mismatch");
      break;
  }
}

}  // namespace

VariationalState init_state(Index p, const FamilyConfig& config, Rng& rng) {
  if (p < 1) throw std::invalid_argument("init_state: need at least one covariate");
  VariationalState state;
  state.family = config.family;
  state.loc = Vector::Zero(p);
  const Real raw01 = softplus_inverse(Real(0.1));
  switch (config.family) {
    case Family::meanfield:
      state.scale_raw = Vector::Constant(p, raw01);
      break;
    case Family::fullrank:
      state.factor_raw = Matrix::Zero(p, p);
      state.factor_raw.diagonal().setConstant(raw01);
      break;
    case Family::lowrank: {
      if (config.rank < 1)
        throw std::invalid_argument("init_state: lowrank family needs rank >= 1");
      if (config.rank > p)
        throw std::invalid_argument("init_state: lowrank rank exceeds dimension");
      state.unit_diagonal = config.unit_diagonal;
      state.w.resize(config.rank, p);
      std::normal_distribution<Real> noise(0, Real(0.01));
      for (Index r = 0; r < state.w.rows(); ++r)
        for (Index j = 0; j < p; ++j) state.w(r, j) = noise(rng);
      if (!config.unit_diagonal) state.diag_raw = Vector::Constant(p, raw01);
      break;
    }
  }
  return state;
}

Matrix theta_from_noise(const VariationalState& state, const Matrix& eps) {
  check_family_shapes(state);
  const Index p = state.dim();
  if (eps.cols() != state.noise_dim())
    throw std::invalid_argument("theta_from_noise: noise width mismatch");
  const Index n = eps.rows();
  Matrix theta(n, p);
  switch (state.family) {
    case Family::meanfield: {
      Vector sd(p);
      for (Index j = 0; j < p; ++j) sd[j] = softplus(state.scale_raw[j]);
      for (Index i = 0; i < n; ++i)
        theta.row(i) = (state.loc.array() + sd.array() * eps.row(i).transpose().array())
                           .matrix()
                           .transpose();
      break;
    }
    case Family::fullrank: {
      const Matrix l = fullrank_factor(state);
      for (Index i = 0; i < n; ++i)
        theta.row(i) = (state.loc + l * eps.row(i).transpose()).transpose();
      break;
    }
    case Family::lowrank: {
      const int r = state.rank();
      const Vector d = lowrank_diag(state);
      for (Index i = 0; i < n; ++i) {
        const auto eps_r = eps.row(i).head(r).transpose();
        const auto eps_p = eps.row(i).tail(p).transpose();
        theta.row(i) =
            (state.loc + state.w.transpose() * eps_r + (d.array() * eps_p.array()).matrix())
                .transpose();
      }
      break;
    }
  }
  return theta;
}

ThetaDraws sample_theta(const VariationalState& state, Rng& rng, Index n) {
  check_family_shapes(state);
  if (n < 1) throw std::invalid_argument("sample_theta: need n >= 1");
  ThetaDraws draws;
  draws.eps.resize(n, state.noise_dim());
  std::normal_distribution<Real> normal(0, 1);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < draws.eps.cols(); ++j) draws.eps(i, j) = normal(rng);
  draws.theta = theta_from_noise(state, draws.eps);
  return draws;
}

Real entropy(const VariationalState& state) {
  check_family_shapes(state);
  const Index p = state.dim();
  const Real base = Real(0.5) * Real(p) * std::log(2 * Real(M_PI) * Real(M_E));
  Real half_logdet = 0;
  switch (state.family) {
    case Family::meanfield:
      for (Index j = 0; j < p; ++j) half_logdet += std::log(softplus(state.scale_raw[j]));
      break;
    case Family::fullrank:
      for (Index j = 0; j < p; ++j) half_logdet += std::log(softplus(state.factor_raw(j, j)));
      break;
    case Family::lowrank: {
      const Vector d = lowrank_diag(state);
      Real logdet = 0;
      for (Index j = 0; j < p; ++j) logdet += 2 * std::log(d[j]);
      const int r = state.rank();
      // a = W diag(d)^-2; m = I + a W'
      const Matrix a = state.w.array().rowwise() / d.array().square().transpose();
      Matrix m = a * state.w.transpose();
      m.diagonal().array() += 1;
      const Eigen::LLT<Matrix> llt(m);
      if (llt.info() != Eigen::Success)
        throw NumericalError("entropy: low-rank capacitance matrix not positive definite");
      for (int k = 0; k < r; ++k) logdet += 2 * std::log(llt.matrixL()(k, k));
      half_logdet = logdet / 2;
      break;
    }
  }
  return base + half_logdet;
}

Vector marginal_sd(const VariationalState& state) {
  check_family_shapes(state);
  const Index p = state.dim();
  Vector sd(p);
  switch (state.family) {
    case Family::meanfield:
      for (Index j = 0; j < p; ++j) sd[j] = softplus(state.scale_raw[j]);
      break;
    case Family::fullrank: {
      const Matrix l = fullrank_factor(state);
      for (Index j = 0; j < p; ++j) sd[j] = l.row(j).norm();
      break;
    }
    case Family::lowrank: {
      const Vector d = lowrank_diag(state);
      for (Index j = 0; j < p; ++j)
        sd[j] = std::sqrt(state.w.col(j).squaredNorm() + d[j] * d[j]);
      break;
    }
  }
  return sd;
}

Matrix dense_covariance(const VariationalState& state) {
  check_family_shapes(state);
  const Index p = state.dim();
  switch (state.family) {
    case Family::meanfield: {
      Matrix cov = Matrix::Zero(p, p);
      for (Index j = 0; j < p; ++j) {
        const Real sd = softplus(state.scale_raw[j]);
        cov(j, j) = sd * sd;
      }
      return cov;
    }
    case Family::fullrank: {
      const Matrix l = fullrank_factor(state);
      return l * l.transpose();
    }
    case Family::lowrank: {
      const Vector d = lowrank_diag(state);
      Matrix cov = state.w.transpose() * state.w;
      for (Index j = 0; j < p; ++j) cov(j, j) += d[j] * d[j];
      return cov;
    }
  }
  throw std::logic_error("dense_covariance: unknown family");
}

PosteriorSummary marginal_summary(const VariationalState& state, Real level,
                                  std::vector<std::string> names) {
  if (!(level > Real(0) && level < Real(1)))
    throw std::invalid_argument("marginal_summary: level must lie in (0, 1)");
  const Index p = state.dim();
  if (!names.empty() && static_cast<Index>(names.size()) != p)
    throw std::invalid_argument("marginal_summary: name count mismatch");
  const Real z = normal_quantile((1 + level) / 2);
  PosteriorSummary s;
  s.names = std::move(names);
  s.level = level;
  s.mean = state.loc;
  s.sd = marginal_sd(state);
  s.hpd_low = s.mean - z * s.sd;
  s.hpd_high = s.mean + z * s.sd;
  s.hazard_ratio = s.mean.array().exp();
  s.hazard_ratio_low = s.hpd_low.array().exp();
  s.hazard_ratio_high = s.hpd_high.array().exp();
  return s;
}

void write_summary_csv(std::ostream& out, const PosteriorSummary& s) {
  out << "name,mean,sd,hpd_low,hpd_high,hazard_ratio,hazard_ratio_low,hazard_ratio_high\n";
  for (Index j = 0; j < s.mean.size(); ++j) {
    const std::string name = s.names.empty()
                                 ? "X" + format_integer(j + 1)
                                 : s.names[static_cast<std::size_t>(j)];
    out << name << ',' << format_real(s.mean[j]) << ',' << format_real(s.sd[j]) << ','
        << format_real(s.hpd_low[j]) << ',' << format_real(s.hpd_high[j]) << ','
        << format_real(s.hazard_ratio[j]) << ',' << format_real(s.hazard_ratio_low[j])
        << ',' << format_real(s.hazard_ratio_high[j]) << '\n';
  }
}

}  // namespace coxsvi
