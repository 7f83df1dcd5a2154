#pragma once

#include <cmath>

#include "gcmf/schema.hpp"

namespace gcmf {

// Numerically stable log(1 + exp(x)).
inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double digamma(double x);

// The count link clamps its argument; softplus curvature is negligible
// beyond this range anyway.
inline constexpr double kCountXiClamp = 30.0;

// Negative log-likelihood of one observation as a function of the linear
// predictor, with its derivative, a global curvature bound, and the mean
// used for prediction/scoring.
//
//   Gaussian:  handled exactly elsewhere; nll/deriv are the unit-precision
//              squared error (used only by tests).
//   Bernoulli: f(xi) = softplus(xi) - x*xi,        kappa = 1/4
//   Count:     Poisson with softplus rate,
//              f(xi) = r(xi) - x*log r(xi) + log(x!),  r = softplus,
//              kappa = (1 + x_max)/4, which dominates the true curvature
//              supremum (about 0.25 + 0.167*x).
struct Link {
  Likelihood kind = Likelihood::Gaussian;
  double kappa = 0.0;

  double nll(double xi, double x) const;
  double dnll(double xi, double x) const;
  double mean(double xi) const;
};

// Curvature bound for the given likelihood over the value range seen in the
// data (x_max matters only for Count).
double curvature_bound(Likelihood lik, double x_max);

Link make_link(Likelihood lik, double x_max);

}  // namespace gcmf
