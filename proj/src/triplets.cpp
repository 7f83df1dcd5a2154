#include "gcmf/triplets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "gcmf/rng.hpp"

namespace gcmf {

std::string domain_violation(Likelihood lik, double value) {
  if (!std::isfinite(value)) return "value is not finite";
  switch (lik) {
    case Likelihood::Gaussian:
      return "";
    case Likelihood::Bernoulli:
      if (value != 0.0 && value != 1.0)
        return "value " + format_double(value) +
               " outside {0,1} for a bernoulli relation";
      return "";
    case Likelihood::Count:
      if (value < 0.0 || value != std::floor(value))
        return "value " + format_double(value) +
               " is not a non-negative integer for a count relation";
      return "";
  }
  return "unknown likelihood";
}

Dataset parse_triplets(const std::string& text, const Schema& schema,
                       const std::string& source) {
  const int M = schema.n_relations();
  std::vector<ObservedMatrix> matrices(M);
  for (int m = 0; m < M; ++m) matrices[m].relation_id = m;
  std::vector<std::set<std::pair<int, int>>> seen(M);

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw ParseError(source + ":" + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    long long m = 0, i = 0, j = 0;
    double value = 0.0;
    if (!(fields >> m)) continue;  // blank or comment-only line
    if (!(fields >> i >> j >> value))
      fail("expected 'relation row col value'");
    std::string rest;
    if (fields >> rest) fail("trailing content '" + rest + "'");
    if (m < 0 || m >= M) fail("relation id " + std::to_string(m) +
                              " not in schema (0.." + std::to_string(M - 1) + ")");
    const Relation& rel = schema.relations[m];
    const int rows = schema.rows_of(static_cast<int>(m));
    const int cols = schema.cols_of(static_cast<int>(m));
    if (i < 0 || i >= rows)
      fail("row index " + std::to_string(i) + " out of bounds (0.." +
           std::to_string(rows - 1) + ")");
    if (j < 0 || j >= cols)
      fail("column index " + std::to_string(j) + " out of bounds (0.." +
           std::to_string(cols - 1) + ")");
    const std::string domain = domain_violation(rel.likelihood, value);
    if (!domain.empty()) fail(domain);
    if (!seen[m].insert({static_cast<int>(i), static_cast<int>(j)}).second)
      fail("duplicate entry (" + std::to_string(i) + "," + std::to_string(j) +
           ") for relation " + std::to_string(m));
    matrices[m].entries.push_back(
        {static_cast<int>(i), static_cast<int>(j), value});
  }

  Dataset out;
  for (int m = 0; m < M; ++m)
    if (matrices[m].n_obs() > 0) out.push_back(std::move(matrices[m]));
  return out;
}

Dataset load_triplets(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open triplet file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_triplets(buf.str(), schema, path);
}

void save_triplets(const Dataset& data, const std::string& path,
                   const std::vector<std::string>& header_comments) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write triplet file '" + path + "'");
  for (const std::string& c : header_comments) out << "# " << c << "\n";
  for (const ObservedMatrix& matrix : data)
    for (const Triplet& t : matrix.entries)
      out << matrix.relation_id << ' ' << t.row << ' ' << t.col << ' '
          << format_double(t.value) << "\n";
}

std::pair<ObservedMatrix, ObservedMatrix> holdout_split(
    const ObservedMatrix& matrix, double fraction, uint64_t seed) {
  if (fraction < 0.0 || fraction >= 1.0)
    throw Error("holdout fraction must be in [0, 1)");
  const int n = matrix.n_obs();
  const int n_test = static_cast<int>(std::llround(fraction * n));

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<bool> in_test(n, false);
  for (int t = 0; t < n_test; ++t) in_test[order[t]] = true;

  ObservedMatrix train{matrix.relation_id, {}}, test{matrix.relation_id, {}};
  for (int t = 0; t < n; ++t)
    (in_test[t] ? test : train).entries.push_back(matrix.entries[t]);
  return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> holdout_split_all(const Dataset& data,
                                              double fraction, uint64_t seed) {
  Dataset train, test;
  for (const ObservedMatrix& matrix : data) {
    auto [tr, te] = holdout_split(
        matrix, fraction,
        derive_seed(seed, "holdout", static_cast<uint64_t>(matrix.relation_id)));
    train.push_back(std::move(tr));
    if (te.n_obs() > 0) test.push_back(std::move(te));
  }
  return {std::move(train), std::move(test)};
}

std::vector<std::pair<ObservedMatrix, ObservedMatrix>> kfold_split(
    const ObservedMatrix& matrix, int k, uint64_t seed) {
  if (k < 2) throw Error("k-fold split needs k >= 2");
  const int n = matrix.n_obs();
  if (n < k)
    throw Error("cannot split " + std::to_string(n) + " entries into " +
                std::to_string(k) + " folds");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<int> fold_of(n);
  for (int t = 0; t < n; ++t) fold_of[order[t]] = t % k;

  std::vector<std::pair<ObservedMatrix, ObservedMatrix>> folds(
      k, {ObservedMatrix{matrix.relation_id, {}},
          ObservedMatrix{matrix.relation_id, {}}});
  for (int t = 0; t < n; ++t)
    for (int f = 0; f < k; ++f)
      (fold_of[t] == f ? folds[f].second : folds[f].first)
          .entries.push_back(matrix.entries[t]);
  return folds;
}

uint64_t derive_seed(uint64_t root, std::string_view label) {
  // FNV-1a over the label, mixed with the root through splitmix64.
  uint64_t h = 1469598103934665603ull ^ root;
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ull;
  }
  uint64_t z = h + 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

uint64_t derive_seed(uint64_t root, std::string_view label, uint64_t index) {
  return derive_seed(derive_seed(root, label), std::to_string(index));
}

}  // namespace gcmf
