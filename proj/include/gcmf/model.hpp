#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gcmf/common.hpp"
#include "gcmf/schema.hpp"

namespace gcmf {

// How the factor means are moved given the gradient and the per-element
// curvature c = 1/var:
//   Damped         u <- u - lambda * g / c   (lands on the coordinate
//                  minimizer at lambda = 1; the default)
//   PrintedLiteral u <- (1-lambda) u + lambda * c * g   (kept selectable for
//                  comparison; diverges in practice)
enum class NewtonRule { Damped, PrintedLiteral };

struct Hyperparams {
  double a0 = 1e-10;  // Gamma prior shape for the ARD precisions
  double b0 = 1e-10;  // Gamma prior rate for the ARD precisions
  double p0 = 1e-10;  // Gamma prior shape for the noise precisions
  double q0 = 1e-10;  // Gamma prior rate for the noise precisions
  double newton_relaxation = 0.5;  // lambda in (0,1)
  int max_iters = 2000;
  double tol = 1e-6;  // relative objective change per sweep
  NewtonRule newton_rule = NewtonRule::Damped;

  void check() const;  // throws Error on invalid values
};

enum class VariantKind { GCMF, CMF, GCMF_MAP, CMF_MAP };

// CMF variants tie the ARD precisions across entity sets (alpha_ek == alpha_k).
bool tied_ard(VariantKind k);
bool is_map(VariantKind k);
std::string to_string(VariantKind k);
VariantKind variant_from_string(const std::string& s);

struct ModelVariant {
  VariantKind kind = VariantKind::GCMF;
  bool bias_enabled = true;
};

// Per entity set: posterior means and variances of the d_e x K factor matrix.
// MAP variants keep the variances pinned at zero.
struct FactorState {
  std::vector<MatrixRM> mean;
  std::vector<MatrixRM> var;
};

// Gamma posteriors over the per-(set, factor) ARD precisions. MAP variants
// store the point estimate as shape with rate fixed at 1.
struct ArdState {
  std::vector<Eigen::ArrayXd> shape;  // per set, length K
  std::vector<Eigen::ArrayXd> rate;

  double mean(int e, int k) const { return shape[e][k] / rate[e][k]; }
};

// Gamma posteriors over the per-relation noise precisions. Only meaningful
// for Gaussian relations; non-Gaussian relations use their curvature bound
// as a fixed precision instead.
struct NoiseState {
  std::vector<double> shape;
  std::vector<double> rate;

  double mean(int m) const { return shape[m] / rate[m]; }
};

// Bias terms are per relation, not per entity set: an entity appearing in two
// relations has two independent biases. mu_*/sigma2_* are the hierarchical
// prior parameters; mu is updated as a point estimate with its posterior
// variance kept for reporting, sigma2 as a point estimate.
struct RelationBias {
  Eigen::VectorXd row_mean, row_var;
  Eigen::VectorXd col_mean, col_var;
  double mu_row = 0.0, mu_row_var = 1.0;
  double mu_col = 0.0, mu_col_var = 1.0;
  double sigma2_row = 1.0, sigma2_col = 1.0;
};

struct BiasState {
  std::vector<RelationBias> rel;
};

struct ModelState {
  Schema schema;
  ModelVariant variant;
  Hyperparams hyper;
  uint64_t seed = 0;

  FactorState factors;
  ArdState ard;
  NoiseState noise;
  BiasState bias;

  int rank() const { return schema.rank; }
};

// Factor means ~ N(0, 1/K) so initial predictions are O(1) at any rank;
// factor variances 1, ARD and noise means 1, biases 0. Deterministic given
// the seed, with one RNG stream per entity set drawn row-major.
ModelState init_model(const Schema& schema, const Hyperparams& hyper,
                      ModelVariant variant, uint64_t seed);

// Linear predictor xi = u_i . u_j + b_i + b_j. Throws on out-of-range indices.
double predict_linear(const ModelState& state, int m, int i, int j);

// Link mean: xi (Gaussian), sigmoid(xi) (Bernoulli), softplus(xi) (Count).
double predict_mean(const ModelState& state, int m, int i, int j);

// Checkpoint: JSON with every state array at full precision plus the schema
// and its hash. Round-trips bit-exactly; reruns with the same seed produce
// byte-identical files.
void save_checkpoint(const ModelState& state, const std::string& path);
ModelState load_checkpoint(const std::string& path);
std::string checkpoint_to_json(const ModelState& state);
ModelState checkpoint_from_json(const std::string& text);

// Reporting-only classification of factors into live/dead per entity set.
// A factor is active for set e when its prior variance 1/alpha_ek is not
// negligible (absolute cut) and within `ratio` of the smallest alpha for the
// same factor across sets (relative cut, labels shared vs private). Neither
// cut feeds back into inference.
struct FactorActivity {
  std::vector<std::vector<bool>> active;      // [set][factor]
  std::vector<std::vector<double>> alpha;     // posterior means
  int n_sets = 0, n_factors = 0;

  bool is_active(int e, int k) const { return active[e][k]; }
  // A factor survives pruning when both sides of at least one relation use it.
  bool survives(const Schema& schema, int k) const;
  int n_surviving(const Schema& schema) const;
  // Active on every entity set.
  bool shared_across_all(int k) const;
  // Active exactly on the two sets of relation m.
  bool private_to(const Schema& schema, int m, int k) const;
};

FactorActivity factor_activity(const ModelState& state, double ratio = 100.0,
                               double min_variance = 1e-3);

}  // namespace gcmf
