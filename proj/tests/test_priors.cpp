#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "coxsvi/priors.hpp"
#include "testutil.hpp"

#include <cmath>
#include <random>

using namespace coxsvi;

namespace {

Vector vec1(Real x) {
  Vector v(1);
  v[0] = x;
  return v;
}

}  // namespace

TEST_CASE("standard normal log density at zero") {
  const PriorSpec spec = PriorSpec::normal_prior(1);
  CHECK(log_prior(spec, vec1(0)) == doctest::Approx(-0.9189385332046727).epsilon(1e-14));
}

TEST_CASE("cauchy-scale student prior at zero") {
  const PriorSpec spec = PriorSpec::student_t_prior(1, 0.001);
  // log(1 / (pi * s)) for nu = 1
  CHECK(log_prior(spec, vec1(0)) == doctest::Approx(5.763025393132737).epsilon(1e-13));
}

TEST_CASE("coordinates contribute independently") {
  for (const PriorSpec spec :
       {PriorSpec::normal_prior(2.5), PriorSpec::student_t_prior(3, 0.7)}) {
    Vector two(2);
    two << 1.3, 1.3;
    CHECK(log_prior(spec, two) == 2 * log_prior(spec, vec1(1.3)));
  }
}

TEST_CASE("hand-checked gradients") {
  CHECK(log_prior_grad(PriorSpec::normal_prior(1), vec1(0.5))[0] == -0.5);
  CHECK(log_prior_grad(PriorSpec::student_t_prior(1, 0.001), vec1(0))[0] == 0.0);
  // normal with sigma = 2: -theta / 4
  CHECK(log_prior_grad(PriorSpec::normal_prior(2), vec1(1))[0] ==
        doctest::Approx(-0.25).epsilon(1e-15));
}

TEST_CASE("gradients match finite differences") {
  Rng gen(5);
  std::normal_distribution<Real> normal(0, 2);
  for (const PriorSpec spec : {PriorSpec::normal_prior(0.8),
                               PriorSpec::student_t_prior(1, 0.001),
                               PriorSpec::student_t_prior(4, 1.5)}) {
    for (int rep = 0; rep < 20; ++rep) {
      Vector theta(3);
      for (Index j = 0; j < 3; ++j) theta[j] = normal(gen);
      const Vector got = log_prior_grad(spec, theta);
      const Vector want = testutil::central_diff(
          [&](const Vector& t) { return log_prior(spec, t); }, theta, 1e-6);
      CHECK(testutil::max_rel_err(got, want) < 1e-6);
    }
  }
}

TEST_CASE("density is even, gradient odd") {
  Rng gen(9);
  std::normal_distribution<Real> normal(0, 1);
  for (const PriorSpec spec :
       {PriorSpec::normal_prior(1.2), PriorSpec::student_t_prior(2, 0.4)}) {
    Vector theta(4);
    for (Index j = 0; j < 4; ++j) theta[j] = normal(gen);
    CHECK(log_prior(spec, theta) ==
          doctest::Approx(log_prior(spec, -theta)).epsilon(1e-14));
    CHECK((log_prior_grad(spec, theta) + log_prior_grad(spec, -theta))
              .cwiseAbs()
              .maxCoeff() < 1e-14);
  }
}

TEST_CASE("large-nu student prior approaches the normal") {
  const PriorSpec t = PriorSpec::student_t_prior(1e7, 1);
  const PriorSpec n = PriorSpec::normal_prior(1);
  for (Real x : {-5.0, -2.0, 0.0, 2.0, 5.0})
    CHECK(std::abs(log_prior(t, vec1(x)) - log_prior(n, vec1(x))) < 1e-4);
}

TEST_CASE("invalid specs and inputs are rejected") {
  CHECK_THROWS_AS(log_prior(PriorSpec::normal_prior(0), vec1(0)), std::invalid_argument);
  CHECK_THROWS_AS(log_prior(PriorSpec::student_t_prior(-1, 1), vec1(0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(log_prior(PriorSpec::student_t_prior(1, 0), vec1(0)),
                  std::invalid_argument);
  Vector bad(1);
  bad[0] = std::numeric_limits<Real>::infinity();
  CHECK_THROWS_AS(log_prior(PriorSpec::normal_prior(1), bad), std::invalid_argument);
}
