#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "coxsvi/data.hpp"
#include "coxsvi/likelihood.hpp"
#include "coxsvi/metrics.hpp"
#include "testutil.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace coxsvi;

namespace {

Real draw_normal(Rng& rng) {
  std::normal_distribution<Real> normal(0, 1);
  return normal(rng);
}

PosteriorSummary summary_of(const Vector& mean, const Vector& sd, Real level) {
  PosteriorSummary s;
  s.mean = mean;
  s.sd = sd;
  const Real z = Real(1.959963984540054);  // 97.5% normal quantile
  s.hpd_low = mean.array() - z * sd.array();
  s.hpd_high = mean.array() + z * sd.array();
  s.hazard_ratio = mean.array().exp();
  s.hazard_ratio_low = s.hpd_low.array().exp();
  s.hazard_ratio_high = s.hpd_high.array().exp();
  s.level = level;
  return s;
}

}  // namespace

TEST_CASE("perfectly ranked events score one") {
  // Higher x always fails earlier; with theta > 0 every comparable pair is
  // concordant.
  const CoxRows rows = testutil::make_rows({
      {1, 0, 1, 1, {3.0}},
      {2, 0, 2, 1, {2.0}},
      {3, 0, 3, 1, {1.0}},
      {4, 0, 4, 0, {0.0}},
  });
  CHECK(concordance(rows, testutil::vec1(2.5)) == 1.0);
  CHECK(concordance(rows, testutil::vec1(-2.5)) == 0.0);
}

TEST_CASE("zero coefficients give exactly one half") {
  Rng rng(11);
  const CoxRows rows = testutil::random_rows(rng, 30, 3);
  const Vector theta = Vector::Zero(3);
  CHECK(concordance(rows, theta) == 0.5);
}

TEST_CASE("matches the brute-force pair count") {
  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const CoxRows rows = testutil::random_rows(rng, 20, 2);
    Vector theta(2);
    theta << draw_normal(rng), draw_normal(rng);
    const Real got = concordance(rows, theta);
    const Real want = testutil::brute_concordance(rows, theta);
    CHECK(std::abs(got - want) <= 1e-12);
  }
}

TEST_CASE("concordance depends only on the predictor ordering") {
  Rng rng(17);
  const CoxRows rows = testutil::random_rows(rng, 25, 2);
  Vector theta(2);
  theta << 0.7, -0.3;
  const Real base = concordance(rows, theta);
  CHECK(concordance(rows, Vector(3.9 * theta)) == base);
}

TEST_CASE("negating the predictor flips concordance") {
  // Continuous covariates make predictor ties measure zero, so the
  // half-credit branch never fires and C(theta) + C(-theta) = 1.
  Rng rng(19);
  CoxRows rows = testutil::random_rows(rng, 25, 1);
  for (Index i = 0; i < rows.rows(); ++i) rows.x(i, 0) = draw_normal(rng);
  const Vector theta = testutil::vec1(0.8);
  const Real plus = concordance(rows, theta);
  const Real minus = concordance(rows, Vector(-theta));
  CHECK(plus + minus == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("no comparable pairs is an error") {
  const CoxRows rows = testutil::make_rows({{1, 0, 5, 1, {1.0}}});
  CHECK_THROWS_AS(concordance(rows, testutil::vec1(1)), ValidationError);
  const CoxRows censored = testutil::make_rows({
      {1, 0, 5, 0, {1.0}},
      {2, 0, 7, 0, {0.5}},
  });
  CHECK_THROWS_AS(concordance(censored, testutil::vec1(1)), ValidationError);
}

TEST_CASE("full-size batches reproduce the full log-likelihood") {
  Rng rng(23);
  const CoxRows rows = testutil::random_rows(rng, 40, 2);
  MemoryDataSource source(testutil::dataset_of(rows));
  Vector theta(2);
  theta << 0.4, -0.2;

  ReweightConfig config;
  config.mode = BatchMode::individuals;
  config.batch_size = source.totals().n_individuals;
  config.n_batches = 7;
  const ReweightReport report = reweighting_study(source, theta, config);

  CHECK(report.full_loglik ==
        doctest::Approx(partial_loglik(rows, theta).loglik).epsilon(1e-12));
  REQUIRE(report.reweighted.size() == 7);
  for (const Real v : report.reweighted)
    CHECK(v == doctest::Approx(report.full_loglik).epsilon(1e-12));
  CHECK(std::abs(report.reweighted_summary.rel_bias) < 1e-12);
  CHECK(report.reweighted_summary.mean ==
        doctest::Approx(report.reweighted_summary.median).epsilon(1e-12));
}

TEST_CASE("subsampled batches center on the full value") {
  Rng rng(29);
  const CoxRows rows = testutil::random_rows(rng, 200, 2);
  MemoryDataSource source(testutil::dataset_of(rows));
  Vector theta(2);
  theta << 0.3, -0.5;

  ReweightConfig config;
  config.mode = BatchMode::observations;
  config.batch_size = 64;
  config.n_batches = 400;
  config.seed = 5;
  const ReweightReport report = reweighting_study(source, theta, config);

  REQUIRE(report.reweighted.size() == 400);
  REQUIRE(report.naive.size() == 400);
  CHECK(std::abs(report.reweighted_summary.rel_bias) < 0.05);
  // the naive estimator ignores the risk-set structure and lands elsewhere
  CHECK(std::abs(report.reweighted_summary.rel_bias) <
        std::abs(report.naive_summary.rel_bias));
}

TEST_CASE("reweight csv lists one estimate per draw") {
  Rng rng(31);
  const CoxRows rows = testutil::random_rows(rng, 30, 1);
  MemoryDataSource source(testutil::dataset_of(rows));
  ReweightConfig config;
  config.batch_size = 10;
  config.n_batches = 3;
  const ReweightReport report = reweighting_study(source, testutil::vec1(0.2), config);

  std::ostringstream out;
  write_reweight_csv(out, report);
  std::istringstream in(out.str());
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "batch,reweighted,naive,full");
  int count = 0;
  while (std::getline(in, line)) ++count;
  CHECK(count == 3);
}

TEST_CASE("coverage bookkeeping on synthetic summaries") {
  Vector truth(2);
  truth << 1.0, -1.0;

  SUBCASE("wide intervals centered on the truth cover everything") {
    std::vector<PosteriorSummary> runs;
    for (int r = 0; r < 4; ++r)
      runs.push_back(summary_of(truth, Vector::Constant(2, 5.0), 0.95));
    const CoverageReport report = aggregate_coverage(truth, runs, 0.95);
    CHECK(report.coverage[0] == 1.0);
    CHECK(report.coverage[1] == 1.0);
    CHECK(report.mean_estimate.isApprox(truth));
    CHECK(report.rmse.cwiseAbs().maxCoeff() == 0.0);
    CHECK(report.runs_completed == 4);
  }

  SUBCASE("hand-computed two-run aggregate") {
    Vector m1(2), m2(2);
    m1 << 1.2, -1.0;
    m2 << 0.8, -3.0;
    std::vector<PosteriorSummary> runs = {
        summary_of(m1, Vector::Constant(2, 0.5), 0.95),
        summary_of(m2, Vector::Constant(2, 0.15), 0.95),
    };
    const CoverageReport report = aggregate_coverage(truth, runs, 0.95);
    CHECK(report.mean_estimate[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(report.mean_estimate[1] == doctest::Approx(-2.0).epsilon(1e-14));
    // sample sd over two runs: |m1 - m2| / sqrt(2)
    CHECK(report.sd_estimate[0] == doctest::Approx(0.4 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(report.rmse[0] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(report.rmse[1] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    // coordinate 0 is covered by both intervals, coordinate 1 only by the first
    CHECK(report.coverage[0] == 1.0);
    CHECK(report.coverage[1] == 0.5);
    // rmse dominates the absolute bias
    for (int j = 0; j < 2; ++j)
      CHECK(report.rmse[j] >=
            std::abs(report.mean_estimate[j] - truth[j]) - 1e-14);
  }

  SUBCASE("empty summary list is rejected") {
    CHECK_THROWS_AS(aggregate_coverage(truth, {}, 0.95), std::invalid_argument);
  }
}

TEST_CASE("interval sign test flags only coefficients away from zero") {
  Vector mean(3), sd(3);
  mean << 2.0, 0.0, -1.0;
  sd << 0.1, 1.0, 0.2;
  const IntVector flags = hpd_excludes_zero(summary_of(mean, sd, 0.95));
  CHECK(flags[0] == 1);
  CHECK(flags[1] == 0);
  CHECK(flags[2] == 1);
}

TEST_CASE("small coverage experiment completes") {
  CoverageConfig config;
  config.sim.n_individuals = 60;
  config.sim.n_binary = 1;
  config.sim.n_continuous = 1;
  config.sim.theta = (Vector(2) << 0.5, -0.5).finished();
  config.sim.hazard_scale = 2e-4;
  config.fit.steps = 40;
  config.fit.mc_samples = 2;
  config.fit.batch_mode = BatchMode::observations;
  config.fit.batch_size = 32;
  config.runs = 2;
  config.seed = 3;
  const CoverageReport report = coverage_experiment(config);
  CHECK(report.runs_completed + report.runs_failed == 2);
  CHECK(report.theta.size() == 2);
  if (report.runs_completed > 0) {
    CHECK(report.mean_estimate.allFinite());
    CHECK((report.mean_hpd_width.array() > 0).all());
  }

  // identical config, identical report
  const CoverageReport again = coverage_experiment(config);
  CHECK(again.runs_completed == report.runs_completed);
  if (report.runs_completed > 0)
    CHECK((again.mean_estimate - report.mean_estimate).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("coverage csv and table smoke") {
  Vector truth(2);
  truth << 0.5, -0.5;
  std::vector<PosteriorSummary> runs = {
      summary_of(truth, Vector::Constant(2, 0.3), 0.95),
      summary_of(truth, Vector::Constant(2, 0.4), 0.95),
  };
  const CoverageReport report = aggregate_coverage(truth, runs, 0.95);

  std::ostringstream out;
  write_coverage_csv(out, report, {"age", "dose"});
  std::istringstream in(out.str());
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "name,truth,mean,sd,rmse,hpd_width,coverage");
  REQUIRE(std::getline(in, line));
  CHECK(line.rfind("age,", 0) == 0);
  REQUIRE(std::getline(in, line));
  CHECK(line.rfind("dose,", 0) == 0);
  CHECK_FALSE(std::getline(in, line));

  const std::string table = format_coverage_table(report);
  CHECK(table.find("X1") != std::string::npos);
  CHECK(table.find("runs completed 2") != std::string::npos);
}
