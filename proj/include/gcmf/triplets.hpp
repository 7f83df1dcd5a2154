#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gcmf/schema.hpp"

namespace gcmf {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

// Sparse store of the observed entries of one relation. Immutable once built;
// every downstream sum runs over these entries only.
struct ObservedMatrix {
  int relation_id = 0;
  std::vector<Triplet> entries;

  int n_obs() const { return static_cast<int>(entries.size()); }
};

using Dataset = std::vector<ObservedMatrix>;

// Text triplet format, one observation per line:
//   relation_id row col value
// 0-based indices throughout; '#' starts a comment. Indices and value domains
// are checked against the schema; errors carry the file's line number.
// Returns one ObservedMatrix per relation id seen, ordered by relation id.
Dataset load_triplets(const std::string& path, const Schema& schema);

// Parses from a string (same format/checks). `source` names the input in
// error messages.
Dataset parse_triplets(const std::string& text, const Schema& schema,
                       const std::string& source = "<string>");

// Header comments record provenance (seed etc.); floats round-trip exactly.
void save_triplets(const Dataset& data, const std::string& path,
                   const std::vector<std::string>& header_comments = {});

// Checks one value against the relation's likelihood domain
// (Bernoulli: {0,1}; Count: non-negative integer). Empty string when ok.
std::string domain_violation(Likelihood lik, double value);

// |test| = round(fraction * n_obs) entries drawn without replacement.
// Entry order within each part follows the original matrix.
std::pair<ObservedMatrix, ObservedMatrix> holdout_split(
    const ObservedMatrix& matrix, double fraction, uint64_t seed);

// Applies holdout_split with the same fraction to every matrix, deriving one
// sub-seed per relation. Returns {train, test}.
std::pair<Dataset, Dataset> holdout_split_all(const Dataset& data,
                                              double fraction, uint64_t seed);

// k disjoint (train, validation) pairs whose validation parts partition the
// observed entries. Throws if n_obs < k.
std::vector<std::pair<ObservedMatrix, ObservedMatrix>> kfold_split(
    const ObservedMatrix& matrix, int k, uint64_t seed);

}  // namespace gcmf
