#include "coxsvi/metrics.hpp"

#include "coxsvi/format.hpp"
#include "coxsvi/likelihood.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace coxsvi {

namespace {

Real median_of(std::vector<Real> values) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  const Real hi = values[n / 2];
  if (n % 2 == 1) return hi;
  return (values[n / 2 - 1] + hi) / 2;
}

ReweightSummary summarize_batches(const std::vector<Real>& values, Real full) {
  ReweightSummary s;
  if (values.empty()) return s;
  Real sum = 0;
  for (const Real v : values) sum += v;
  s.mean = sum / static_cast<Real>(values.size());
  s.median = median_of(values);
  const Real gap = s.mean - full;
  s.rel_bias = full != 0 ? gap / std::abs(full) : gap;
  return s;
}

std::vector<std::string> resolve_names(const std::vector<std::string>& names, Index p) {
  std::vector<std::string> out = names;
  if (out.empty())
    for (Index j = 0; j < p; ++j) out.push_back("X" + format_integer(j + 1));
  if (static_cast<Index>(out.size()) != p)
    throw std::invalid_argument("covariate name count does not match report width");
  return out;
}

}  // namespace

Real concordance(const CoxRows& rows, const Vector& theta) {
  const Index n = rows.rows();
  if (theta.size() != rows.covariates())
    throw std::invalid_argument("concordance: theta length does not match covariates");
  if (!theta.allFinite())
    throw std::invalid_argument("concordance: theta has non-finite entries");
  const Vector eta = rows.x * theta;

  long long comparable = 0;
  long long concordant = 0;
  long long ties = 0;
  for (Index e = 0; e < n; ++e) {
    if (rows.event[e] != 1) continue;
    const Real t = rows.stop[e];
    for (Index k = 0; k < n; ++k) {
      if (k == e) continue;
      if (!risk_indicator(rows.start[k], rows.stop[k], t)) continue;
      ++comparable;
      if (eta[e] > eta[k])
        ++concordant;
      else if (eta[e] == eta[k])
        ++ties;
    }
  }
  if (comparable == 0)
    throw ValidationError("concordance: no comparable pairs (no event has risk mates)");
  return (static_cast<Real>(concordant) + static_cast<Real>(ties) / 2) /
         static_cast<Real>(comparable);
}

ReweightReport reweighting_study(const DataSource& source, const Vector& theta,
                                 const ReweightConfig& config) {
  if (config.n_batches < 1)
    throw std::invalid_argument("reweighting_study: n_batches must be positive");
  const DatasetTotals totals = source.totals();
  if (theta.size() != totals.n_covariates)
    throw std::invalid_argument("reweighting_study: theta length does not match covariates");

  ReweightReport report;
  {
    const CoxRows full = source.fetch_all();
    report.full_loglik = partial_loglik(full, theta).loglik;
  }

  Rng rng(split_seed(config.seed, 1));
  report.reweighted.reserve(static_cast<std::size_t>(config.n_batches));
  report.naive.reserve(static_cast<std::size_t>(config.n_batches));
  for (Index b = 0; b < config.n_batches; ++b) {
    const Batch batch = sample_batch(source, config.mode, config.batch_size, rng);
    report.reweighted.push_back(reweighted_loglik(batch, theta).loglik);
    const Real scale =
        static_cast<Real>(totals.n_observations) / static_cast<Real>(batch.rows.rows());
    report.naive.push_back(scale * partial_loglik(batch.rows, theta).loglik);
  }
  report.reweighted_summary = summarize_batches(report.reweighted, report.full_loglik);
  report.naive_summary = summarize_batches(report.naive, report.full_loglik);
  return report;
}

void write_reweight_csv(std::ostream& out, const ReweightReport& report) {
  out << "batch,reweighted,naive,full\n";
  for (std::size_t b = 0; b < report.reweighted.size(); ++b) {
    out << format_integer(static_cast<Index>(b) + 1) << ','
        << format_real(report.reweighted[b]) << ',' << format_real(report.naive[b])
        << ',' << format_real(report.full_loglik) << '\n';
  }
}

CoverageReport aggregate_coverage(const Vector& theta_true,
                                  const std::vector<PosteriorSummary>& summaries,
                                  Real level) {
  const Index p = theta_true.size();
  if (p < 1) throw std::invalid_argument("aggregate_coverage: empty truth vector");
  if (summaries.empty())
    throw std::invalid_argument("aggregate_coverage: no summaries to aggregate");
  for (const auto& s : summaries)
    if (s.mean.size() != p || s.hpd_low.size() != p || s.hpd_high.size() != p)
      throw std::invalid_argument("aggregate_coverage: summary width mismatch");

  CoverageReport report;
  report.theta = theta_true;
  report.level = level;
  report.mean_estimate = Vector::Zero(p);
  report.sd_estimate = Vector::Zero(p);
  report.rmse = Vector::Zero(p);
  report.mean_hpd_width = Vector::Zero(p);
  report.coverage = Vector::Zero(p);
  report.runs_completed = static_cast<Index>(summaries.size());
  if (summaries.empty()) return report;

  const Real n = static_cast<Real>(summaries.size());
  for (const auto& s : summaries) {
    report.mean_estimate += s.mean;
    report.rmse.array() += (s.mean - theta_true).array().square();
    report.mean_hpd_width += s.hpd_high - s.hpd_low;
    for (Index j = 0; j < p; ++j)
      if (s.hpd_low[j] <= theta_true[j] && theta_true[j] <= s.hpd_high[j])
        report.coverage[j] += 1;
  }
  report.mean_estimate /= n;
  report.rmse = (report.rmse / n).cwiseSqrt();
  report.mean_hpd_width /= n;
  report.coverage /= n;

  if (summaries.size() > 1) {
    for (const auto& s : summaries)
      report.sd_estimate.array() += (s.mean - report.mean_estimate).array().square();
    report.sd_estimate = (report.sd_estimate / (n - 1)).cwiseSqrt();
  }
  return report;
}

CoverageReport coverage_experiment(const CoverageConfig& config) {
  if (config.runs < 1)
    throw std::invalid_argument("coverage_experiment: runs must be positive");
  const int p = config.sim.covariates();
  if (p < 1) throw std::invalid_argument("coverage_experiment: need covariates");
  Vector theta_true = config.sim.theta;
  if (theta_true.size() == 0) theta_true = Vector::Zero(p);
  if (theta_true.size() != p)
    throw std::invalid_argument("coverage_experiment: theta length mismatch");

  std::vector<std::optional<PosteriorSummary>> slots(
      static_cast<std::size_t>(config.runs));
  detail::parallel_for(config.runs, config.threads, [&](Index r) {
    try {
      SimConfig sim = config.sim;
      sim.seed = split_seed(config.seed, static_cast<std::uint64_t>(2 * r));
      CohortTruth truth = simulate_cohort(sim);
      MemoryDataSource source(std::move(truth.data));
      FitConfig fit_config = config.fit;
      fit_config.seed = split_seed(config.seed, static_cast<std::uint64_t>(2 * r + 1));
      const FitResult result = fit(source, config.prior, config.family, fit_config);
      slots[static_cast<std::size_t>(r)] = marginal_summary(result.state, config.level);
    } catch (const std::exception&) {
      slots[static_cast<std::size_t>(r)].reset();
    }
  });

  std::vector<PosteriorSummary> summaries;
  Index failed = 0;
  for (const auto& slot : slots) {
    if (slot.has_value())
      summaries.push_back(*slot);
    else
      ++failed;
  }
  CoverageReport report = aggregate_coverage(theta_true, summaries, config.level);
  report.runs_failed = failed;
  return report;
}

IntVector hpd_excludes_zero(const PosteriorSummary& summary) {
  const Index p = summary.mean.size();
  IntVector flags(p);
  for (Index j = 0; j < p; ++j)
    flags[j] = (summary.hpd_low[j] > 0 || summary.hpd_high[j] < 0) ? 1 : 0;
  return flags;
}

void write_coverage_csv(std::ostream& out, const CoverageReport& report,
                        const std::vector<std::string>& names) {
  const Index p = report.theta.size();
  const std::vector<std::string> labels = resolve_names(names, p);
  out << "name,truth,mean,sd,rmse,hpd_width,coverage\n";
  for (Index j = 0; j < p; ++j) {
    out << labels[static_cast<std::size_t>(j)] << ',' << format_real(report.theta[j])
        << ',' << format_real(report.mean_estimate[j]) << ','
        << format_real(report.sd_estimate[j]) << ',' << format_real(report.rmse[j])
        << ',' << format_real(report.mean_hpd_width[j]) << ','
        << format_real(report.coverage[j]) << '\n';
  }
}

std::string format_coverage_table(const CoverageReport& report,
                                  const std::vector<std::string>& names) {
  const Index p = report.theta.size();
  const std::vector<std::string> labels = resolve_names(names, p);
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << std::setw(12) << "name" << std::setw(10) << "truth" << std::setw(10) << "mean"
      << std::setw(10) << "sd" << std::setw(10) << "rmse" << std::setw(11) << "hpd_width"
      << std::setw(10) << "coverage" << '\n';
  for (Index j = 0; j < p; ++j) {
    out << std::setw(12) << labels[static_cast<std::size_t>(j)] << std::setw(10)
        << report.theta[j] << std::setw(10) << report.mean_estimate[j] << std::setw(10)
        << report.sd_estimate[j] << std::setw(10) << report.rmse[j] << std::setw(11)
        << report.mean_hpd_width[j] << std::setw(10) << report.coverage[j] << '\n';
  }
  out << "runs completed " << report.runs_completed << ", failed " << report.runs_failed
      << ", level " << std::setprecision(2) << report.level << '\n';
  return out.str();
}

}  // namespace coxsvi
