#include <doctest.h>

#include <cmath>

#include "gcmf/likelihoods.hpp"
#include "gcmf/rng.hpp"

using namespace gcmf;

namespace {

double numeric_derivative(const Link& link, double xi, double x) {
  const double h = 1e-6;
  return (link.nll(xi + h, x) - link.nll(xi - h, x)) / (2.0 * h);
}

double numeric_second_derivative(const Link& link, double xi, double x) {
  const double h = 1e-4;
  return (link.nll(xi + h, x) - 2.0 * link.nll(xi, x) + link.nll(xi - h, x)) /
         (h * h);
}

}  // namespace

TEST_CASE("stable softplus and sigmoid") {
  CHECK(softplus(1000.0) == doctest::Approx(1000.0));
  CHECK(softplus(-1000.0) == doctest::Approx(0.0));
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(sigmoid(0.0) == doctest::Approx(0.5));
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(std::isfinite(sigmoid(800.0)));
  CHECK(sigmoid(3.0) + sigmoid(-3.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("link derivatives match finite differences") {
  Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const double xi = rng.uniform(-8.0, 8.0);
    const Link bern = make_link(Likelihood::Bernoulli, 1.0);
    const double xb = rng.bernoulli(0.5) ? 1.0 : 0.0;
    CHECK(bern.dnll(xi, xb) ==
          doctest::Approx(numeric_derivative(bern, xi, xb)).epsilon(1e-5));

    const Link count = make_link(Likelihood::Count, 9.0);
    const double xc = rng.uniform_int(0, 9);
    CHECK(count.dnll(xi, xc) ==
          doctest::Approx(numeric_derivative(count, xi, xc)).epsilon(1e-4));

    const Link gauss = make_link(Likelihood::Gaussian, 0.0);
    const double xg = rng.normal();
    CHECK(gauss.dnll(xi, xg) ==
          doctest::Approx(numeric_derivative(gauss, xi, xg)).epsilon(1e-6));
  }
}

TEST_CASE("bernoulli nll is stable far out in the tails") {
  const Link bern = make_link(Likelihood::Bernoulli, 1.0);
  CHECK(std::isfinite(bern.nll(800.0, 0.0)));
  CHECK(std::isfinite(bern.nll(-800.0, 1.0)));
  CHECK(bern.nll(40.0, 1.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("curvature bounds dominate the second derivative") {
  const Link bern = make_link(Likelihood::Bernoulli, 1.0);
  CHECK(bern.kappa == 0.25);
  for (double xi = -12.0; xi <= 12.0; xi += 0.05)
    CHECK(numeric_second_derivative(bern, xi, 1.0) <= bern.kappa + 1e-6);

  for (double x : {0.0, 1.0, 2.0, 5.0, 17.0}) {
    const Link count = make_link(Likelihood::Count, x);
    CHECK(count.kappa == doctest::Approx(0.25 * (1.0 + x)));
    for (double xi = -25.0; xi <= 25.0; xi += 0.05) {
      CAPTURE(x);
      CAPTURE(xi);
      CHECK(numeric_second_derivative(count, xi, x) <= count.kappa + 1e-5);
    }
  }
}

TEST_CASE("count curvature genuinely exceeds 1/4 for small counts") {
  // The sup of the count nll curvature at x=1 is about 0.41, so any bound
  // at or below 1/4 would be invalid.
  const Link count = make_link(Likelihood::Count, 1.0);
  CHECK(numeric_second_derivative(count, 0.0, 1.0) > 0.3);
  CHECK(count.kappa >= 0.5);
}

TEST_CASE("bernoulli quadratic bound majorizes the nll") {
  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const double xi0 = rng.uniform(-10.0, 10.0);
    const double xi = rng.uniform(-10.0, 10.0);
    const double x = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const Link bern = make_link(Likelihood::Bernoulli, 1.0);
    const double bound = bern.nll(xi0, x) + bern.dnll(xi0, x) * (xi - xi0) +
                         0.5 * bern.kappa * (xi - xi0) * (xi - xi0);
    CHECK(bound - bern.nll(xi, x) >= -1e-12);
  }
}

TEST_CASE("link means") {
  CHECK(make_link(Likelihood::Gaussian, 0.0).mean(1.7) == 1.7);
  CHECK(make_link(Likelihood::Bernoulli, 1.0).mean(0.0) == 0.5);
  CHECK(make_link(Likelihood::Count, 3.0).mean(0.0) ==
        doctest::Approx(std::log(2.0)));
}
