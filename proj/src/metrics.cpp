#include "gcmf/metrics.hpp"

#include <cmath>

namespace gcmf {

double rmse(const std::vector<double>& predictions,
            const ObservedMatrix& test) {
  if (test.n_obs() == 0) throw Error("rmse over an empty test set");
  if (static_cast<int>(predictions.size()) != test.n_obs())
    throw Error("prediction/test length mismatch");
  double sum = 0.0;
  for (int t = 0; t < test.n_obs(); ++t) {
    const double err = predictions[t] - test.entries[t].value;
    sum += err * err;
  }
  return std::sqrt(sum / test.n_obs());
}

double rmse(const ModelState& state, const ObservedMatrix& test) {
  if (test.n_obs() == 0) throw Error("rmse over an empty test set");
  std::vector<double> pred;
  pred.reserve(test.entries.size());
  for (const Triplet& t : test.entries)
    pred.push_back(predict_mean(state, test.relation_id, t.row, t.col));
  return rmse(pred, test);
}

double rmse(const ModelState& state, const Dataset& test) {
  double sum = 0.0;
  long long n = 0;
  for (const ObservedMatrix& matrix : test) {
    for (const Triplet& t : matrix.entries) {
      const double err =
          predict_mean(state, matrix.relation_id, t.row, t.col) - t.value;
      sum += err * err;
      ++n;
    }
  }
  if (n == 0) throw Error("rmse over an empty test set");
  return std::sqrt(sum / static_cast<double>(n));
}

double relative_error(double method_rmse, double reference_rmse) {
  if (!(reference_rmse > 0.0))
    throw Error("relative error needs a positive reference");
  return method_rmse / reference_rmse;
}

}  // namespace gcmf
