#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gcmf/common.hpp"

namespace gcmf {

enum class Likelihood { Gaussian, Bernoulli, Count };

std::string to_string(Likelihood lik);
Likelihood likelihood_from_string(const std::string& s);

// One set of entities (users, genes, ...). Each set owns one factor matrix
// shared by every relation it participates in.
struct EntitySet {
  int id = 0;  // contiguous, 0-based
  std::string name;
  int size = 0;
};

// An observed matrix between two entity sets. Self-relations are rejected.
struct Relation {
  int id = 0;  // contiguous, 0-based
  int row_set = 0;
  int col_set = 0;
  Likelihood likelihood = Likelihood::Gaussian;
};

struct Schema {
  std::vector<EntitySet> entity_sets;
  std::vector<Relation> relations;
  int rank = 1;

  int n_sets() const { return static_cast<int>(entity_sets.size()); }
  int n_relations() const { return static_cast<int>(relations.size()); }
  int rows_of(int m) const { return entity_sets[relations[m].row_set].size; }
  int cols_of(int m) const { return entity_sets[relations[m].col_set].size; }
  int total_entities() const;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
  std::string str() const;
};

// Pure structural checks; violations are reported, never thrown.
ValidationReport validate(const Schema& schema);

// Throws Error with the report text if the schema is invalid.
void require_valid(const Schema& schema);

// E = n_views + 1 entity sets; every relation shares row set 0.
Schema multiview_schema(int n_views, int d_row, const std::vector<int>& col_sizes,
                        int rank);

// n_matrices relations (0,1), (1,2), ..., closing back to set 0. A single
// matrix degenerates to plain two-set factorization (set_sizes then has two
// entries); two matrices form the 2-cycle (0,1), (1,0).
Schema circular_schema(int n_matrices, const std::vector<int>& set_sizes,
                       const std::vector<Likelihood>& likelihoods, int rank);

// Stable across runs; used to tie checkpoints to the schema they were fit on.
uint64_t schema_hash(const Schema& schema);

std::string schema_to_json(const Schema& schema);
Schema schema_from_json(const std::string& text);
Schema load_schema(const std::string& path);
void save_schema(const Schema& schema, const std::string& path);

}  // namespace gcmf
