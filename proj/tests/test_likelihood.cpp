#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "coxsvi/likelihood.hpp"
#include "testutil.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace coxsvi;
using testutil::make_rows;

namespace {

Vector vec(std::initializer_list<Real> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (Real x : values) v[i++] = x;
  return v;
}

Batch full_batch(const CoxRows& rows) {
  Batch b;
  b.rows = rows;
  b.event_weight = 1;
  b.risk_weight = 1;
  for (Index i = 0; i < rows.rows(); ++i) b.batch_events += rows.event[i];
  return b;
}

CoxRows shuffled(const CoxRows& rows, Rng& rng) {
  std::vector<Index> perm(static_cast<std::size_t>(rows.rows()));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  CoxRows out;
  out.start.resize(rows.rows());
  out.stop.resize(rows.rows());
  out.event.resize(rows.rows());
  out.x.resize(rows.rows(), rows.covariates());
  for (Index i = 0; i < rows.rows(); ++i) {
    const Index s = perm[static_cast<std::size_t>(i)];
    out.id.push_back(rows.id[static_cast<std::size_t>(s)]);
    out.start[i] = rows.start[s];
    out.stop[i] = rows.stop[s];
    out.event[i] = rows.event[s];
    out.x.row(i) = rows.x.row(s);
  }
  return out;
}

}  // namespace

TEST_CASE("risk indicator is left-open right-closed") {
  CHECK(risk_indicator(1000, 3235, 3235));
  CHECK_FALSE(risk_indicator(1000, 3235, 1000));
  CHECK_FALSE(risk_indicator(1000, 3235, 5000));
  CHECK(risk_indicator(1000, 3235, 1001));
}

TEST_CASE("hand-checked partial log-likelihood values") {
  SUBCASE("two at risk, flat predictor") {
    const CoxRows rows = make_rows({{1, 0, 5, 1, {1.0}}, {2, 0, 5, 0, {-1.0}}});
    CHECK(partial_loglik(rows, vec({0})).loglik ==
          doctest::Approx(std::log(0.5)).epsilon(1e-14));
  }
  SUBCASE("single record, single event") {
    const CoxRows rows = make_rows({{1, 0, 5, 1, {2.0}}});
    CHECK(partial_loglik(rows, vec({0})).loglik == 0.0);
  }
  SUBCASE("risk set of three, predictors 1,0,0, event on the first") {
    const CoxRows rows = make_rows(
        {{1, 0, 5, 1, {1.0}}, {2, 0, 5, 0, {0.0}}, {3, 0, 6, 0, {0.0}}});
    CHECK(partial_loglik(rows, vec({1})).loglik ==
          doctest::Approx(1.0 - std::log(std::exp(1.0) + 2.0)).epsilon(1e-14));
  }
}

TEST_CASE("value at zero equals minus sum of log risk-set sizes") {
  Rng gen(31);
  const CoxRows rows = testutil::random_rows(gen, 25, 3);
  Real expected = 0;
  for (Index e = 0; e < rows.rows(); ++e) {
    if (rows.event[e] != 1) continue;
    Index at_risk = 0;
    for (Index k = 0; k < rows.rows(); ++k)
      if (testutil::at_risk(rows, k, rows.stop[e])) ++at_risk;
    expected -= std::log(static_cast<Real>(at_risk));
  }
  CHECK(partial_loglik(rows, Vector::Zero(3)).loglik ==
        doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("sweep agrees with the brute-force reference") {
  Rng gen(101);
  std::normal_distribution<Real> normal(0, 1);
  for (int rep = 0; rep < 200; ++rep) {
    const Index n = 1 + static_cast<Index>(gen() % 30);
    const Index p = 1 + static_cast<Index>(gen() % 4);
    const CoxRows rows = testutil::random_rows(gen, n, p);
    Vector theta(p);
    for (Index j = 0; j < p; ++j) theta[j] = normal(gen);
    const Real got = partial_loglik(rows, theta).loglik;
    const Real want = testutil::naive_loglik(rows, theta);
    CHECK(testutil::rel_err(got, want) < 1e-12);
  }
}

TEST_CASE("weighted value agrees with the brute-force reference") {
  Rng gen(7);
  std::normal_distribution<Real> normal(0, 1);
  std::uniform_real_distribution<Real> wdist(0.5, 20);
  for (int rep = 0; rep < 50; ++rep) {
    const CoxRows rows = testutil::random_rows(gen, 12, 2);
    Vector theta(2);
    theta << normal(gen), normal(gen);
    const Real w1 = wdist(gen);
    const Real w2 = wdist(gen);
    Batch b = full_batch(rows);
    b.event_weight = w1;
    b.risk_weight = w2;
    const Real got = reweighted_loglik(b, theta).loglik;
    const Real want = testutil::naive_loglik(rows, theta, w1, w2);
    CHECK(testutil::rel_err(got, want) < 1e-12);
  }
}

TEST_CASE("full-data batch reproduces partial_loglik exactly") {
  Rng gen(13);
  const CoxRows rows = testutil::random_rows(gen, 20, 3);
  const Vector theta = vec({0.3, -0.8, 0.15});
  const Batch b = full_batch(rows);
  const LikelihoodValue lhs = reweighted_loglik(b, theta, true);
  const LikelihoodValue rhs = partial_loglik(rows, theta, true);
  CHECK(lhs.loglik == rhs.loglik);
  CHECK((*lhs.gradient - *rhs.gradient).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("risk weight shifts the value by an exact constant") {
  Rng gen(17);
  const CoxRows rows = testutil::random_rows(gen, 15, 2);
  const Vector theta = vec({0.4, -0.2});
  Batch b = full_batch(rows);
  b.event_weight = 2.5;
  const Real base = reweighted_loglik(b, theta).loglik;
  b.risk_weight = 10;
  const Real shifted = reweighted_loglik(b, theta).loglik;
  const Real drop = b.event_weight * static_cast<Real>(b.batch_events) * std::log(10.0);
  CHECK(shifted == doctest::Approx(base - drop).epsilon(1e-12));
}

TEST_CASE("hand-checked gradient and risk-weight independence") {
  const CoxRows rows = make_rows({{1, 0, 4, 1, {1.0}}, {2, 0, 4, 0, {0.0}}});
  Batch b = full_batch(rows);
  const Vector g1 = loglik_gradient(b, vec({0}));
  CHECK(g1[0] == doctest::Approx(0.5).epsilon(1e-14));
  b.risk_weight = 1000;
  const Vector g2 = loglik_gradient(b, vec({0}));
  CHECK(g1[0] == g2[0]);
}

TEST_CASE("gradient matches finite differences of the reference value") {
  Rng gen(57);
  std::normal_distribution<Real> normal(0, 0.7);
  for (int rep = 0; rep < 60; ++rep) {
    const Index p = 1 + static_cast<Index>(gen() % 3);
    const CoxRows rows = testutil::random_rows(gen, 14, p);
    Vector theta(p);
    for (Index j = 0; j < p; ++j) theta[j] = normal(gen);
    Batch b = full_batch(rows);
    b.event_weight = 3;
    b.risk_weight = 7;
    const Vector got = loglik_gradient(b, theta);
    const Vector want = testutil::central_diff(
        [&](const Vector& t) { return testutil::naive_loglik(rows, t, 3, 7); }, theta);
    CHECK(testutil::max_rel_err(got, want) < 1e-5);
  }
}

TEST_CASE("permuting records changes nothing") {
  Rng gen(71);
  const CoxRows rows = testutil::random_rows(gen, 18, 3);
  const Vector theta = vec({0.2, -0.5, 0.9});
  const LikelihoodValue base = partial_loglik(rows, theta, true);
  for (int rep = 0; rep < 5; ++rep) {
    const CoxRows mixed = shuffled(rows, gen);
    const LikelihoodValue got = partial_loglik(mixed, theta, true);
    CHECK(got.loglik == base.loglik);
    CHECK((*got.gradient - *base.gradient).cwiseAbs().maxCoeff() == 0);
  }
}

TEST_CASE("constant covariate column has exactly zero gradient") {
  Rng gen(83);
  const CoxRows rows = testutil::random_rows(gen, 16, 2);
  CoxRows wide = rows;
  wide.x.conservativeResize(Eigen::NoChange, 3);
  wide.x.col(2).setConstant(3.7);

  const Vector theta3 = vec({0.4, -0.1, 0.0});
  const LikelihoodValue with = partial_loglik(wide, theta3, true);
  CHECK((*with.gradient)[2] == 0.0);
  // With its coefficient at zero the extra column cannot move the value.
  CHECK(with.loglik == partial_loglik(rows, vec({0.4, -0.1}), false).loglik);
}

TEST_CASE("extreme linear predictors stay finite and accurate") {
  SUBCASE("spread 1400 within one sweep") {
    const CoxRows rows = make_rows({{1, 50, 100, 1, {1.0}},
                                    {2, 0, 100, 0, {0.0}},
                                    {3, 0, 40, 1, {-1.0}}});
    const Vector theta = vec({700});
    const Real got = partial_loglik(rows, theta).loglik;
    CHECK(std::isfinite(got));
    CHECK(testutil::rel_err(got, testutil::naive_loglik(rows, theta)) < 1e-10);
  }
  SUBCASE("spread 3000 across risk sets") {
    const CoxRows rows = make_rows({{1, 50, 100, 1, {1500.0}},
                                    {2, 0, 100, 0, {0.0}},
                                    {3, 0, 40, 1, {-1500.0}}});
    const Vector theta = vec({1});
    const LikelihoodValue got = partial_loglik(rows, theta, true);
    CHECK(std::isfinite(got.loglik));
    CHECK(got.gradient->allFinite());
    CHECK(testutil::rel_err(got.loglik, testutil::naive_loglik(rows, theta)) < 1e-10);
  }
}

TEST_CASE("partial likelihood is concave along random lines") {
  Rng gen(97);
  std::normal_distribution<Real> normal(0, 0.5);
  const CoxRows rows = testutil::random_rows(gen, 20, 3);
  for (int rep = 0; rep < 10; ++rep) {
    Vector theta0(3), dir(3);
    for (Index j = 0; j < 3; ++j) {
      theta0[j] = normal(gen);
      dir[j] = normal(gen);
    }
    std::vector<Real> values;
    for (int k = -10; k <= 10; ++k)
      values.push_back(
          partial_loglik(rows, theta0 + (Real(k) / 10) * dir).loglik);
    for (std::size_t k = 1; k + 1 < values.size(); ++k)
      CHECK(values[k + 1] - 2 * values[k] + values[k - 1] <= 1e-8);
  }
}

TEST_CASE("prebuilt likelihood matches the free functions") {
  Rng gen(29);
  const CoxRows rows = testutil::random_rows(gen, 15, 2);
  const PartialLikelihood lik(rows);
  CHECK(lik.n_events() >= 1);
  for (Real a : {-0.5, 0.0, 1.2}) {
    const Vector theta = vec({a, -a});
    const LikelihoodValue got = lik.value(theta, 2, 3, true);
    const Real want = testutil::naive_loglik(rows, theta, 2, 3);
    CHECK(testutil::rel_err(got.loglik, want) < 1e-12);
  }
}

TEST_CASE("invalid inputs are rejected") {
  const CoxRows rows = make_rows({{1, 0, 5, 1, {1.0}}});
  Vector bad(1);
  bad[0] = std::numeric_limits<Real>::quiet_NaN();
  CHECK_THROWS_AS(partial_loglik(rows, bad), std::invalid_argument);
  CHECK_THROWS_AS(partial_loglik(rows, Vector::Zero(2)), std::invalid_argument);

  const CoxRows no_event = make_rows({{1, 0, 5, 0, {1.0}}});
  CHECK_THROWS_AS(partial_loglik(no_event, Vector::Zero(1)), std::invalid_argument);
}
