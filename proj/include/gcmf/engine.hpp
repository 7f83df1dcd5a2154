#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gcmf/likelihoods.hpp"
#include "gcmf/model.hpp"
#include "gcmf/triplets.hpp"

namespace gcmf {

// One relation's observations in flat arrays plus the per-row/column
// observation counts and the link (with its curvature bound from the data).
// Entry order is the input order; every reduction respects it, so results
// are deterministic.
struct RelationData {
  int m = 0;
  std::vector<int> row, col;
  std::vector<double> x;
  std::vector<int> row_count, col_count;
  Link link;

  int n() const { return static_cast<int>(x.size()); }
  bool gaussian() const { return link.kind == Likelihood::Gaussian; }
};

struct IndexedData {
  std::vector<RelationData> rel;  // indexed by relation id, empty ones allowed
};

// Validates bounds/duplicates/domains against the schema and flattens.
IndexedData index_dataset(const Schema& schema, const Dataset& data);

// Gaussianized targets for one non-Gaussian relation: tangent predictors xi,
// targets z = xi - f'(xi)/kappa, aligned with the relation's entries.
struct PseudoData {
  Eigen::VectorXd xi;
  Eigen::VectorXd z;
  double kappa = 0.0;
};

struct TraceRecord {
  int iteration = 0;
  double elbo = 0.0;  // log posterior for MAP variants
  std::vector<double> train_rmse;
  double max_delta = 0.0;
};

struct ElboTerms {
  double likelihood = 0.0;
  double factor = 0.0;
  double ard = 0.0;
  double noise = 0.0;
  double bias = 0.0;

  double total() const { return likelihood + factor + ard + noise + bias; }
};

struct FitResult {
  ModelState state;
  std::vector<TraceRecord> trace;
  bool converged = false;

  int sweeps() const { return static_cast<int>(trace.size()); }
};

void save_trace_csv(const std::vector<TraceRecord>& trace,
                    const std::string& path);

// Coordinate-ascent engine shared by the VB and MAP variants. A sweep runs
// the five update phases in order:
//   1-2. per entity set (in id order), per factor column: gradient +
//        curvature, then the relaxed Newton move; cached dot products are
//        refreshed after every column,
//   3.   bias rows, hyper-mean, scale, then columns likewise,
//   4.   ARD precisions (pooled across sets for CMF variants),
//   5.   noise precision (Gaussian) or pseudo-data (non-Gaussian).
//
// MAP mode keeps all variances at zero and replaces the Gamma posteriors by
// their clamped modes; the objective becomes the log posterior (with the
// quadratic surrogate standing in for non-Gaussian likelihoods).
class Engine {
 public:
  Engine(const Schema& schema, const Dataset& data, ModelState state);

  // --- individual update operations at the current state ---

  // d(e x K) gradient of the expected surrogate objective wrt the factor
  // means of set e; targets are x (Gaussian) or z (non-Gaussian).
  MatrixRM factor_gradient(int e) const;

  // Closed-form variance update: elementwise inverse curvature.
  MatrixRM factor_variance(int e) const;

  // Moves the means of set e given a gradient, using the stored variances as
  // inverse curvature (they must be fresh). Refreshes cached dot products.
  void newton_step(int e, const MatrixRM& grad);

  void update_bias(int m);
  void update_ard();            // all sets, honoring ARD tying
  void update_ard_set(int e);   // untied single-set update
  void update_tau(int m);       // Gaussian relations only
  PseudoData compute_pseudodata(int m) const;
  void update_pseudodata(int m);  // non-Gaussian relations only

  // --- objective ---

  ElboTerms elbo_terms() const;  // VB mode only
  double elbo() const { return elbo_terms().total(); }
  double log_posterior() const;  // MAP mode only
  double objective() const;      // dispatches on the variant

  // --- driving ---

  void sweep();
  FitResult run();  // sweeps until relative objective change < tol

  const ModelState& state() const { return state_; }
  ModelState& mutable_state() { return state_; }
  const IndexedData& data() const { return data_; }
  const PseudoData& pseudodata(int m) const { return pseudo_[m]; }

  // Re-syncs cached predictors after external edits to the state.
  void refresh();

  // Precision used in the quadratic terms: Gamma mean for Gaussian
  // relations, the curvature bound kappa for non-Gaussian ones.
  double effective_tau(int m) const;

  double train_rmse(int m) const;
  double max_delta() const { return max_delta_; }

 private:
  struct ColumnStats {
    Eigen::VectorXd grad;
    Eigen::VectorXd curv;
  };

  ColumnStats column_stats(int e, int k) const;
  void newton_column(int e, int k, const ColumnStats& stats);
  void apply_column_delta(int e, int k, const Eigen::VectorXd& delta);
  void refresh_dots();
  double target(const RelationData& rel, int t) const;
  double expected_sq_residual_sum(int m) const;  // with all variance terms
  void check_finite(double v, const std::string& term) const;

  Schema schema_;
  IndexedData data_;
  ModelState state_;
  bool map_ = false;
  bool tied_ = false;
  bool check_monotone_ = false;  // Gaussian-only VB, or any MAP run
  std::vector<Eigen::VectorXd> dot_;  // per relation, u_i . u_j per entry
  std::vector<PseudoData> pseudo_;    // per relation, empty for Gaussian
  double max_delta_ = 0.0;
};

// Variational fit. Rejects MAP variant kinds.
FitResult fit(const Schema& schema, const Dataset& data,
              const Hyperparams& hyper, ModelVariant variant, uint64_t seed);

}  // namespace gcmf
