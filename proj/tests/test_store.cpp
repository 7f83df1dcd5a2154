#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "gcmf/rng.hpp"
#include "gcmf/triplets.hpp"

using namespace gcmf;

namespace {

Schema mixed_schema() {
  Schema s;
  s.rank = 3;
  s.entity_sets = {{0, "a", 4}, {1, "b", 5}, {2, "c", 3}};
  s.relations = {{0, 0, 1, Likelihood::Gaussian},
                 {1, 1, 2, Likelihood::Bernoulli},
                 {2, 2, 0, Likelihood::Count}};
  return s;
}

ObservedMatrix dense_matrix(int rows, int cols, uint64_t seed) {
  ObservedMatrix m;
  m.relation_id = 0;
  Rng rng(seed);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m.entries.push_back({i, j, rng.normal()});
  return m;
}

std::multiset<std::tuple<int, int, int, double>> entry_multiset(
    const Dataset& data) {
  std::multiset<std::tuple<int, int, int, double>> out;
  for (const ObservedMatrix& m : data)
    for (const Triplet& t : m.entries)
      out.insert({m.relation_id, t.row, t.col, t.value});
  return out;
}

}  // namespace

TEST_CASE("parse_triplets basics") {
  const Schema schema = mixed_schema();
  SUBCASE("empty input gives an empty list") {
    CHECK(parse_triplets("", schema).empty());
    CHECK(parse_triplets("# only a comment\n\n", schema).empty());
  }
  SUBCASE("single gaussian line") {
    const Dataset data = parse_triplets("0 1 2 3.5\n", schema);
    REQUIRE(data.size() == 1);
    CHECK(data[0].relation_id == 0);
    REQUIRE(data[0].n_obs() == 1);
    CHECK(data[0].entries[0].row == 1);
    CHECK(data[0].entries[0].col == 2);
    CHECK(data[0].entries[0].value == 3.5);
  }
  SUBCASE("bernoulli domain violation carries the line number") {
    CHECK_THROWS_WITH_AS(parse_triplets("0 0 0 1.0\n1 0 0 2\n", schema),
                         doctest::Contains(":2:"), ParseError);
  }
  SUBCASE("count relations require non-negative integers") {
    CHECK_NOTHROW(parse_triplets("2 0 0 7\n", schema));
    CHECK_THROWS_AS(parse_triplets("2 0 0 1.5\n", schema), ParseError);
    CHECK_THROWS_AS(parse_triplets("2 0 0 -1\n", schema), ParseError);
  }
  SUBCASE("out-of-bounds indices are rejected") {
    CHECK_THROWS_AS(parse_triplets("0 4 0 1.0\n", schema), ParseError);
    CHECK_THROWS_AS(parse_triplets("0 0 5 1.0\n", schema), ParseError);
    CHECK_THROWS_AS(parse_triplets("3 0 0 1.0\n", schema), ParseError);
  }
  SUBCASE("duplicates are rejected") {
    CHECK_THROWS_WITH_AS(parse_triplets("0 1 1 1.0\n0 1 1 2.0\n", schema),
                         doctest::Contains("duplicate"), ParseError);
  }
  SUBCASE("malformed lines are rejected") {
    CHECK_THROWS_AS(parse_triplets("0 1\n", schema), ParseError);
    CHECK_THROWS_AS(parse_triplets("0 1 2 3.5 9\n", schema), ParseError);
    CHECK_THROWS_AS(parse_triplets("0 x 2 3.5\n", schema), ParseError);
  }
}

TEST_CASE("save/load round-trip preserves the entry multiset") {
  const Schema schema = mixed_schema();
  const Dataset data = parse_triplets(
      "0 1 2 3.25\n0 0 0 -1.5\n1 4 2 1\n2 0 3 12\n", schema);
  const auto path = std::filesystem::temp_directory_path() / "gcmf_store.txt";
  save_triplets(data, path.string(), {"round-trip check"});
  const Dataset back = load_triplets(path.string(), schema);
  CHECK(entry_multiset(back) == entry_multiset(data));
  std::filesystem::remove(path);
}

TEST_CASE("holdout_split") {
  const ObservedMatrix matrix = dense_matrix(10, 10, 7);
  SUBCASE("zero fraction keeps everything in train") {
    auto [train, test] = holdout_split(matrix, 0.0, 1);
    CHECK(test.n_obs() == 0);
    CHECK(train.n_obs() == 100);
  }
  SUBCASE("forty percent of one hundred is forty") {
    auto [train, test] = holdout_split(matrix, 0.4, 1);
    CHECK(test.n_obs() == 40);
    CHECK(train.n_obs() == 60);
  }
  SUBCASE("deterministic given the seed") {
    auto [train1, test1] = holdout_split(matrix, 0.3, 42);
    auto [train2, test2] = holdout_split(matrix, 0.3, 42);
    CHECK(entry_multiset({test1}) == entry_multiset({test2}));
    auto [train3, test3] = holdout_split(matrix, 0.3, 43);
    CHECK(entry_multiset({test1}) != entry_multiset({test3}));
  }
  SUBCASE("train and test partition the entries") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
      const double fraction = rng.uniform(0.0, 0.99);
      auto [train, test] = holdout_split(matrix, fraction, rng.next_u64());
      Dataset both = {train, test};
      CHECK(entry_multiset(both) == entry_multiset({matrix}));
    }
  }
  SUBCASE("invalid fraction") {
    CHECK_THROWS_AS(holdout_split(matrix, 1.0, 1), Error);
    CHECK_THROWS_AS(holdout_split(matrix, -0.1, 1), Error);
  }
}

TEST_CASE("kfold_split") {
  ObservedMatrix matrix;
  matrix.relation_id = 0;
  for (int t = 0; t < 10; ++t) matrix.entries.push_back({t / 5, t % 5, 1.0 * t});

  SUBCASE("two folds of five") {
    const auto folds = kfold_split(matrix, 2, 3);
    REQUIRE(folds.size() == 2);
    CHECK(folds[0].second.n_obs() == 5);
    CHECK(folds[1].second.n_obs() == 5);
    CHECK(folds[0].first.n_obs() == 5);
  }
  SUBCASE("validation folds partition the entries") {
    const auto folds = kfold_split(matrix, 3, 11);
    Dataset validations;
    for (const auto& [train, val] : folds) validations.push_back(val);
    CHECK(entry_multiset(validations) == entry_multiset({matrix}));
    // ... and each train is the complement of its validation part.
    for (const auto& [train, val] : folds) {
      Dataset both = {train, val};
      CHECK(entry_multiset(both) == entry_multiset({matrix}));
    }
  }
  SUBCASE("not enough entries") {
    ObservedMatrix tiny;
    tiny.relation_id = 0;
    tiny.entries = {{0, 0, 1.0}, {0, 1, 2.0}, {1, 0, 3.0}};
    CHECK_THROWS_AS(kfold_split(tiny, 5, 1), Error);
  }
  SUBCASE("k below two") { CHECK_THROWS_AS(kfold_split(matrix, 1, 1), Error); }
}
