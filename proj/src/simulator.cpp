#include "coxsvi/simulator.hpp"

#include "coxsvi/format.hpp"
#include "coxsvi/numeric.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace coxsvi {

namespace {

constexpr Real kHazardFloor = Real(1e-12);
constexpr Real kHazardCeil = Real(1) - Real(1e-12);

// Gamma waiting time rounded to the nearest day; 0 rounds up to 1.
Real rounded_wait(const GammaSpec& spec, Rng& rng) {
  if (!(spec.shape > 0) || !(spec.scale > 0))
    throw std::invalid_argument("waiting-time Gamma needs positive shape and scale");
  std::gamma_distribution<Real> gamma(spec.shape, spec.scale);
  const auto days = std::llround(gamma(rng));
  return static_cast<Real>(days < 1 ? 1 : days);
}

Real gamma_draw(const GammaSpec& spec, Rng& rng) {
  std::gamma_distribution<Real> gamma(spec.shape, spec.scale);
  return gamma(rng);
}

}  // namespace

Real StepFunction::value(Real t) const {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0;
  return values[static_cast<std::size_t>(it - times.begin()) - 1];
}

Index StepFunction::jump_count(Real t) const {
  return static_cast<Index>(std::upper_bound(times.begin(), times.end(), t) -
                            times.begin());
}

StepFunction sample_renewal_reward(const RenewalRewardSpec& spec, Real horizon,
                                   Rng& rng) {
  StepFunction path;
  Real t = 0;
  Real cum = 0;
  while (true) {
    t += rounded_wait(spec.waiting, rng);
    if (t > horizon) break;
    Real reward;
    if (spec.reward == RenewalRewardSpec::Reward::bernoulli) {
      std::bernoulli_distribution bern(spec.bernoulli_p);
      reward = bern(rng) ? Real(1) : Real(0);
    } else {
      std::normal_distribution<Real> normal(spec.normal_mean, spec.normal_sd);
      reward = normal(rng);
    }
    cum += reward;
    path.times.push_back(t);
    path.values.push_back(cum);
  }
  return path;
}

StepFunction build_baseline(const BaselineSpec& spec, Real horizon, Real hazard_scale,
                            Rng& rng) {
  if (!(hazard_scale > 0))
    throw std::invalid_argument("build_baseline: hazard_scale must be positive");
  StepFunction path;
  path.times.push_back(0);
  if (spec.kind == BaselineKind::constant) {
    path.values.push_back(std::clamp(spec.constant_value, kHazardFloor, kHazardCeil));
    return path;
  }
  path.values.push_back(kHazardFloor);
  Real t = 0;
  Real cum = 0;
  while (true) {
    t += rounded_wait(spec.waiting, rng);
    if (t > horizon) break;
    Real reward;
    if (t <= spec.rise_until)
      reward = gamma_draw(spec.rise_reward, rng);
    else if (t <= spec.plateau_until)
      reward = gamma_draw(spec.plateau_reward, rng);
    else
      reward = -gamma_draw(spec.decline_reward, rng);
    cum += reward;
    path.times.push_back(t);
    path.values.push_back(std::clamp(hazard_scale * cum, kHazardFloor, kHazardCeil));
  }
  return path;
}

Real event_probability(Real alpha0, Real eta) {
  if (!(alpha0 > 0 && alpha0 < 1))
    throw std::invalid_argument("event_probability: alpha0 must lie in (0, 1)");
  return sigmoid(logit(alpha0) + eta);
}

CoxRows simulate_individual(const SimConfig& config, const StepFunction& baseline,
                            Index individual_id, Rng& rng) {
  const int p = config.covariates();
  if (p < 1) throw std::invalid_argument("simulate_individual: need covariates");
  Vector theta = config.theta;
  if (theta.size() == 0) theta = Vector::Zero(p);
  if (theta.size() != p)
    throw std::invalid_argument("simulate_individual: theta length mismatch");
  if (!(config.censor_low >= 1 && config.censor_high >= config.censor_low))
    throw std::invalid_argument("simulate_individual: bad censoring range");

  std::uniform_real_distribution<Real> censor_dist(config.censor_low, config.censor_high);
  const Real censor = static_cast<Real>(std::max<long long>(1, std::llround(censor_dist(rng))));

  // Shared covariate jump clock; every jump redraws all covariates.
  std::vector<Real> jump_times;
  Matrix jump_values(0, p);
  {
    std::vector<Real> flat;
    Real t = 0;
    while (true) {
      t += rounded_wait(config.covariate_waiting, rng);
      if (t >= censor) break;
      jump_times.push_back(t);
      std::bernoulli_distribution bern(config.bernoulli_p);
      std::normal_distribution<Real> normal(config.normal_mean, config.normal_sd);
      for (int j = 0; j < config.n_binary; ++j) flat.push_back(bern(rng) ? 1 : 0);
      for (int j = 0; j < config.n_continuous; ++j) flat.push_back(normal(rng));
    }
    jump_values.resize(static_cast<Index>(jump_times.size()), p);
    for (Index i = 0; i < jump_values.rows(); ++i)
      for (int j = 0; j < p; ++j)
        jump_values(i, j) = flat[static_cast<std::size_t>(i) * p + j];
  }

  // Day walk; paths take effect the day after they jump.
  std::uniform_real_distribution<Real> unif(0, 1);
  Real eta = 0;
  std::size_t jump_idx = 0;
  std::size_t base_idx = 0;
  Real alpha = 0;
  Real event_day = -1;
  const auto day_limit = static_cast<long long>(censor);
  for (long long t = 1; t <= day_limit; ++t) {
    const Real prev = static_cast<Real>(t - 1);
    while (jump_idx < jump_times.size() && jump_times[jump_idx] <= prev) {
      eta = jump_values.row(static_cast<Index>(jump_idx)) * theta;
      ++jump_idx;
    }
    while (base_idx < baseline.times.size() && baseline.times[base_idx] <= prev) {
      alpha = baseline.values[base_idx];
      ++base_idx;
    }
    const Real a = std::clamp(alpha, kHazardFloor, kHazardCeil);
    const Real prob = event_probability(a, eta);
    if (unif(rng) < prob) {
      event_day = static_cast<Real>(t);
      break;
    }
  }

  const bool has_event = event_day > 0;
  const Real y = has_event ? event_day : censor;

  // Boundaries: 0, every covariate jump before y, then y.
  std::vector<Real> bounds;
  bounds.push_back(0);
  for (const Real t : jump_times) {
    if (t >= y) break;
    bounds.push_back(t);
  }
  bounds.push_back(y);

  const Index n_rows = static_cast<Index>(bounds.size()) - 1;
  CoxRows rows;
  rows.id.assign(static_cast<std::size_t>(n_rows), individual_id);
  rows.start.resize(n_rows);
  rows.stop.resize(n_rows);
  rows.event.setZero(n_rows);
  rows.x.resize(n_rows, p);
  for (Index i = 0; i < n_rows; ++i) {
    rows.start[i] = bounds[static_cast<std::size_t>(i)];
    rows.stop[i] = bounds[static_cast<std::size_t>(i) + 1];
    if (i == 0)
      rows.x.row(i).setZero();
    else
      rows.x.row(i) = jump_values.row(i - 1);
  }
  if (has_event) rows.event[n_rows - 1] = 1;
  return rows;
}

CohortTruth simulate_cohort(const SimConfig& config, int threads) {
  const int p = config.covariates();
  if (p < 1) throw std::invalid_argument("simulate_cohort: need covariates");
  if (config.n_individuals < 0)
    throw std::invalid_argument("simulate_cohort: negative cohort size");
  Vector theta = config.theta;
  if (theta.size() == 0) theta = Vector::Zero(p);
  if (theta.size() != p)
    throw std::invalid_argument("simulate_cohort: theta length mismatch");

  const Real horizon = std::max(config.horizon, config.censor_high);
  Rng baseline_rng(split_seed(config.seed, 0));
  CohortTruth out;
  out.theta = theta;
  out.baseline = build_baseline(config.baseline, horizon, config.hazard_scale, baseline_rng);

  const Index n = config.n_individuals;
  std::vector<CoxRows> individuals(static_cast<std::size_t>(n));
  detail::parallel_for(n, threads, [&](Index i) {
    Rng rng(split_seed(config.seed, static_cast<std::uint64_t>(i) + 1));
    individuals[static_cast<std::size_t>(i)] =
        simulate_individual(config, out.baseline, i + 1, rng);
  });

  Index total_rows = 0;
  for (const auto& ind : individuals) total_rows += ind.rows();

  Dataset& data = out.data;
  data.rows.id.resize(static_cast<std::size_t>(total_rows));
  data.rows.start.resize(total_rows);
  data.rows.stop.resize(total_rows);
  data.rows.event.resize(total_rows);
  data.rows.x.resize(total_rows, p);
  Index at = 0;
  Index events = 0;
  for (const auto& ind : individuals) {
    const Index m = ind.rows();
    data.individual_spans.emplace_back(at, m);
    for (Index i = 0; i < m; ++i) {
      data.rows.id[static_cast<std::size_t>(at)] = ind.id[static_cast<std::size_t>(i)];
      data.rows.start[at] = ind.start[i];
      data.rows.stop[at] = ind.stop[i];
      data.rows.event[at] = ind.event[i];
      data.rows.x.row(at) = ind.x.row(i);
      events += ind.event[i];
      ++at;
    }
  }
  for (int j = 0; j < p; ++j)
    data.covariate_names.push_back("X" + format_integer(j + 1));
  data.totals.n_individuals = n;
  data.totals.n_observations = total_rows;
  data.totals.total_events = events;
  data.totals.n_covariates = p;

  out.censorship = n > 0 ? Real(1) - static_cast<Real>(events) / static_cast<Real>(n) : 0;

  std::map<Real, Index> events_on_day;
  for (Index i = 0; i < total_rows; ++i)
    if (data.rows.event[i] == 1) ++events_on_day[data.rows.stop[i]];
  Index tied = 0;
  for (const auto& [day, count] : events_on_day)
    if (count > 1) tied += count;
  out.tie_fraction = events > 0 ? static_cast<Real>(tied) / static_cast<Real>(events) : 0;
  return out;
}

Real calibrate_hazard_scale(const SimConfig& config, Real target_censorship,
                            Index pilot_n, int iterations) {
  if (!(target_censorship > 0 && target_censorship < 1))
    throw std::invalid_argument("calibrate_hazard_scale: target must lie in (0, 1)");
  if (pilot_n < 1)
    throw std::invalid_argument("calibrate_hazard_scale: pilot_n must be positive");
  SimConfig pilot = config;
  pilot.n_individuals = pilot_n;
  auto censorship_at = [&](Real scale) {
    pilot.hazard_scale = scale;
    return simulate_cohort(pilot).censorship;
  };

  Real lo = Real(1e-12);
  if (censorship_at(lo) < target_censorship)
    throw NumericalError("calibrate_hazard_scale: target censorship unreachable from above");
  Real hi = 1;
  int growth = 0;
  while (censorship_at(hi) > target_censorship) {
    hi *= 10;
    if (++growth > 12)
      throw NumericalError("calibrate_hazard_scale: target censorship unreachable from below");
  }
  for (int it = 0; it < iterations; ++it) {
    const Real mid = std::sqrt(lo * hi);
    if (censorship_at(mid) > target_censorship)
      lo = mid;
    else
      hi = mid;
  }
  return std::sqrt(lo * hi);
}

}  // namespace coxsvi
