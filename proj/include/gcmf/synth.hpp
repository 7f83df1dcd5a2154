#pragma once

#include <cstdint>
#include <vector>

#include "gcmf/common.hpp"
#include "gcmf/schema.hpp"
#include "gcmf/triplets.hpp"

namespace gcmf {

// Circular benchmark: n_matrices relations forming a cycle over as many
// entity sets, generated from n_shared factors loading on every set plus
// n_private factors per matrix loading only on its two sets. True rank is
// n_shared + n_private * n_matrices; the conventional fit rank is
// 10 + 2 * n_matrices.
struct CircularSynthSpec {
  int n_matrices = 3;
  int size_lo = 100;
  int size_hi = 150;
  int n_shared = 5;
  int n_private = 2;
  std::vector<Likelihood> likelihoods = {Likelihood::Bernoulli};  // broadcast
                                                                  // if size 1
  double loading_scale = 1.0;
  double noise_sd = 0.5;  // Gaussian matrices only
  uint64_t seed = 1;

  int true_rank() const { return n_shared + n_private * n_matrices; }
  int fit_rank() const { return 10 + 2 * n_matrices; }
  void check() const;
};

struct CircularSynthData {
  Schema schema;  // rank set to fit_rank()
  Dataset data;   // fully observed
  std::vector<MatrixRM> true_factors;          // per set, d_e x true_rank
  std::vector<std::vector<bool>> factor_on_set;  // [set][factor] planted mask
};

CircularSynthData gen_circular(const CircularSynthSpec& spec);

// Binary proximity between two located entity collections:
//   Exponential: P(1) = exp(-|l_i - l_j| / width)
//   Gaussian:    P(1) = exp(-(l_i - l_j)^2 / (2 width^2))
struct ProximitySpec {
  enum class Kernel { Exponential, Gaussian };

  std::vector<double> row_locations;
  std::vector<double> col_locations;
  Kernel kernel = Kernel::Gaussian;
  double width = 1.0;

  void check() const;
};

double proximity_probability(const ProximitySpec& spec, int i, int j);

// Evenly spaced locations over [lo, hi].
std::vector<double> grid_locations(int n, double lo, double hi);

// Two Gaussian views over shared rows plus a binary proximity matrix linking
// their column entities. Shared factors have column loadings that vary
// smoothly in the latent locations (the same functions in both views);
// private factors are view-specific noise. Views are subsampled to
// view_obs_fraction; the proximity matrix to prox_obs_fraction.
struct MultiviewSynthSpec {
  int n_rows = 60;
  int d1 = 30;
  int d2 = 30;
  int n_shared = 3;
  int n_private = 2;
  double loading_scale = 1.0;
  double noise_sd = 0.3;
  double view_obs_fraction = 1.0;
  double prox_obs_fraction = 1.0;
  int fit_rank = 12;
  uint64_t seed = 1;

  void check() const;
};

struct MultiviewSynthData {
  Schema schema;  // sets: rows, cols1, cols2; relations: X1, X2, X3
  Dataset data;
  std::vector<double> locations1, locations2;
};

MultiviewSynthData gen_augmented_multiview(const MultiviewSynthSpec& spec,
                                           const ProximitySpec& prox);

// Convenience: builds the ProximitySpec from evenly spaced locations on
// [0, 10] with the given kernel and width.
MultiviewSynthData gen_augmented_multiview(const MultiviewSynthSpec& spec,
                                           ProximitySpec::Kernel kernel,
                                           double width);

// Bias-only data: x_ij = br_i + bc_j + noise, biases ~ N(0,1). Used for
// cold-start evaluation.
struct BiasSynthData {
  Schema schema;
  Dataset data;
  Eigen::VectorXd row_bias, col_bias;
};

BiasSynthData gen_bias_only(int n_rows, int n_cols, double noise_sd,
                            uint64_t seed);

}  // namespace gcmf
