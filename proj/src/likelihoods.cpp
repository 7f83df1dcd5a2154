#include "gcmf/likelihoods.hpp"

#include <algorithm>
#include <cmath>

#include "gcmf/common.hpp"

namespace gcmf {

double digamma(double x) {
  if (!(x > 0.0)) throw Error("digamma defined here for x > 0 only");
  // Recurrence up to x >= 6, then the asymptotic series.
  double acc = 0.0;
  while (x < 6.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double f = 1.0 / (x * x);
  return acc + std::log(x) - 0.5 / x -
         f * (1.0 / 12.0 -
              f * (1.0 / 120.0 -
                   f * (1.0 / 252.0 - f * (1.0 / 240.0 - f * (1.0 / 132.0)))));
}

namespace {

inline double clamp_xi(double xi) {
  return std::clamp(xi, -kCountXiClamp, kCountXiClamp);
}

}  // namespace

double Link::nll(double xi, double x) const {
  switch (kind) {
    case Likelihood::Gaussian: {
      const double r = x - xi;
      return 0.5 * r * r;
    }
    case Likelihood::Bernoulli:
      return softplus(xi) - x * xi;
    case Likelihood::Count: {
      const double c = clamp_xi(xi);
      const double rate = softplus(c);
      return rate - x * std::log(rate) + std::lgamma(x + 1.0);
    }
  }
  throw Error("unknown likelihood enum value");
}

double Link::dnll(double xi, double x) const {
  switch (kind) {
    case Likelihood::Gaussian:
      return xi - x;
    case Likelihood::Bernoulli:
      return sigmoid(xi) - x;
    case Likelihood::Count: {
      if (xi < -kCountXiClamp || xi > kCountXiClamp) return 0.0;  // clamped
      const double rate = softplus(xi);
      return sigmoid(xi) * (1.0 - x / rate);
    }
  }
  throw Error("unknown likelihood enum value");
}

double Link::mean(double xi) const {
  switch (kind) {
    case Likelihood::Gaussian:
      return xi;
    case Likelihood::Bernoulli:
      return sigmoid(xi);
    case Likelihood::Count:
      return softplus(clamp_xi(xi));
  }
  throw Error("unknown likelihood enum value");
}

double curvature_bound(Likelihood lik, double x_max) {
  switch (lik) {
    case Likelihood::Gaussian:
      return 1.0;  // unused; Gaussian relations carry a learned precision
    case Likelihood::Bernoulli:
      return 0.25;
    case Likelihood::Count:
      return 0.25 * (1.0 + std::max(x_max, 0.0));
  }
  throw Error("unknown likelihood enum value");
}

Link make_link(Likelihood lik, double x_max) {
  return Link{lik, curvature_bound(lik, x_max)};
}

}  // namespace gcmf
