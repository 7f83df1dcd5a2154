#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gcmf/engine.hpp"

namespace gcmf {

// MAP fit: same sweep structure as the variational fit with variances pinned
// at zero and Gamma posteriors replaced by clamped posterior modes. Rejects
// non-MAP variant kinds.
FitResult fit_map(const Schema& schema, const Dataset& data,
                  const Hyperparams& hyper, ModelVariant variant,
                  uint64_t seed);

// Grid for validating the Gamma hyper-prior strengths, over a0 = b0 and
// p0 = q0 jointly. Defaults: 11 points log-spaced over [1e-6, 1e4].
struct MapConfig {
  std::vector<double> grid_a0b0;
  std::vector<double> grid_p0q0;
  int folds = 2;
  uint64_t seed = 1;
  int threads = 1;

  static std::vector<double> default_grid();
  void check() const;
};

struct CvCell {
  double a0b0 = 0.0;
  double p0q0 = 0.0;
  int fold = 0;
  double val_rmse = 0.0;   // NaN when the fit failed
  std::string error;       // non-fatal per-cell failure
};

struct CvResult {
  double best_a0b0 = 0.0;
  double best_p0q0 = 0.0;
  std::vector<CvCell> table;
  int fit_count = 0;

  Hyperparams best_hyperparams(const Hyperparams& base) const;
};

// For every grid point, averages the pooled validation RMSE over k folds
// (folds drawn per relation, deterministic given the seed) and returns the
// argmin plus the full table. Per-cell fit failures are recorded in the
// table, not thrown.
CvResult cv_map(const Schema& schema, const Dataset& data,
                const MapConfig& config, ModelVariant variant,
                const Hyperparams& base);

void save_cv_table_csv(const CvResult& result, const std::string& path);

}  // namespace gcmf
