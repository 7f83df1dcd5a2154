#include "gcmf/map.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <thread>

#include "gcmf/metrics.hpp"
#include "gcmf/rng.hpp"

namespace gcmf {

FitResult fit_map(const Schema& schema, const Dataset& data,
                  const Hyperparams& hyper, ModelVariant variant,
                  uint64_t seed) {
  if (!is_map(variant.kind))
    throw Error("fit_map() runs MAP variants; use fit() for " +
                to_string(variant.kind));
  Engine engine(schema, data, init_model(schema, hyper, variant, seed));
  return engine.run();
}

std::vector<double> MapConfig::default_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(std::pow(10.0, -6.0 + i));
  return grid;
}

void MapConfig::check() const {
  if (grid_a0b0.empty() || grid_p0q0.empty())
    throw Error("hyperparameter grids must be non-empty");
  for (double v : grid_a0b0)
    if (!(v > 0.0)) throw Error("grid values must be positive");
  for (double v : grid_p0q0)
    if (!(v > 0.0)) throw Error("grid values must be positive");
  if (folds < 2) throw Error("cross-validation needs at least 2 folds");
}

Hyperparams CvResult::best_hyperparams(const Hyperparams& base) const {
  Hyperparams h = base;
  h.a0 = h.b0 = best_a0b0;
  h.p0 = h.q0 = best_p0q0;
  return h;
}

CvResult cv_map(const Schema& schema, const Dataset& data,
                const MapConfig& config, ModelVariant variant,
                const Hyperparams& base) {
  config.check();
  if (!is_map(variant.kind))
    throw Error("cv_map validates MAP variants; got " + to_string(variant.kind));

  // Folds are drawn per relation so every matrix contributes to every fold.
  const int folds = config.folds;
  std::vector<Dataset> train(folds), val(folds);
  for (const ObservedMatrix& matrix : data) {
    auto split = kfold_split(
        matrix, folds,
        derive_seed(config.seed, "cv/fold",
                    static_cast<uint64_t>(matrix.relation_id)));
    for (int f = 0; f < folds; ++f) {
      train[f].push_back(std::move(split[f].first));
      val[f].push_back(std::move(split[f].second));
    }
  }

  const int na = static_cast<int>(config.grid_a0b0.size());
  const int np = static_cast<int>(config.grid_p0q0.size());
  const int n_cells = na * np * folds;
  CvResult result;
  result.table.resize(n_cells);
  result.fit_count = n_cells;

  auto run_cell = [&](int cell) {
    const int f = cell % folds;
    const int ip = (cell / folds) % np;
    const int ia = cell / (folds * np);
    CvCell& out = result.table[cell];
    out.a0b0 = config.grid_a0b0[ia];
    out.p0q0 = config.grid_p0q0[ip];
    out.fold = f;
    try {
      Hyperparams hyper = base;
      hyper.a0 = hyper.b0 = out.a0b0;
      hyper.p0 = hyper.q0 = out.p0q0;
      const FitResult fitted =
          fit_map(schema, train[f], hyper, variant,
                  derive_seed(config.seed, "cv/fit", static_cast<uint64_t>(cell)));
      out.val_rmse = rmse(fitted.state, val[f]);
    } catch (const std::exception& e) {
      out.val_rmse = std::numeric_limits<double>::quiet_NaN();
      out.error = e.what();
    }
  };

  const int threads = std::max(1, config.threads);
  if (threads == 1) {
    for (int cell = 0; cell < n_cells; ++cell) run_cell(cell);
  } else {
    std::atomic<int> next{0};
    auto worker = [&] {
      for (int cell = next.fetch_add(1); cell < n_cells;
           cell = next.fetch_add(1))
        run_cell(cell);
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  // Argmin of the fold-averaged validation RMSE; grid order breaks ties.
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (int ia = 0; ia < na; ++ia) {
    for (int ip = 0; ip < np; ++ip) {
      double sum = 0.0;
      int n_ok = 0;
      for (int f = 0; f < folds; ++f) {
        const CvCell& cell = result.table[(ia * np + ip) * folds + f];
        if (std::isfinite(cell.val_rmse)) {
          sum += cell.val_rmse;
          ++n_ok;
        }
      }
      if (n_ok < folds) continue;  // incomplete grid points never win
      const double avg = sum / n_ok;
      if (avg < best) {
        best = avg;
        result.best_a0b0 = config.grid_a0b0[ia];
        result.best_p0q0 = config.grid_p0q0[ip];
        found = true;
      }
    }
  }
  if (!found)
    throw Error("every grid point failed cross-validation; see the cv table");
  return result;
}

void save_cv_table_csv(const CvResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write cv table '" + path + "'");
  out << "a0b0,p0q0,fold,val_rmse\n";
  for (const CvCell& cell : result.table)
    out << format_double(cell.a0b0) << ',' << format_double(cell.p0q0) << ','
        << cell.fold << ',' << format_double(cell.val_rmse) << "\n";
}

}  // namespace gcmf
