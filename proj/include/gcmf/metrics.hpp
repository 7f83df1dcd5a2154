#pragma once

#include <vector>

#include "gcmf/model.hpp"
#include "gcmf/triplets.hpp"

namespace gcmf {

// RMSE of aligned predictions against the held-out entries. Throws on an
// empty test set or a length mismatch.
double rmse(const std::vector<double>& predictions, const ObservedMatrix& test);

// Predicts every test entry with the relation's link mean and scores it.
double rmse(const ModelState& state, const ObservedMatrix& test);

// Pooled over all matrices (single mean over every test entry).
double rmse(const ModelState& state, const Dataset& test);

// Ratio method/reference; throws when reference <= 0.
double relative_error(double method_rmse, double reference_rmse);

}  // namespace gcmf
