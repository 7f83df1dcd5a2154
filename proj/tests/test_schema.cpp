#include <doctest.h>

#include "gcmf/rng.hpp"
#include "gcmf/schema.hpp"

using namespace gcmf;

namespace {

Schema two_set_schema(int rank = 5) {
  Schema s;
  s.rank = rank;
  s.entity_sets = {{0, "a", 3}, {1, "b", 4}};
  s.relations = {{0, 0, 1, Likelihood::Gaussian}};
  return s;
}

}  // namespace

TEST_CASE("single unused entity set is flagged") {
  Schema s;
  s.rank = 5;
  s.entity_sets = {{0, "a", 3}};
  const ValidationReport report = validate(s);
  CHECK_FALSE(report.ok());
  CHECK(report.str().find("unused") != std::string::npos);
}

TEST_CASE("minimal two-set schema validates") {
  CHECK(validate(two_set_schema()).ok());
}

TEST_CASE("five-set cycle validates") {
  Schema s = circular_schema(5, {10, 11, 12, 13, 14},
                             {Likelihood::Gaussian}, 5);
  CHECK(validate(s).ok());
  CHECK(s.n_relations() == 5);
  CHECK(s.relations[4].row_set == 4);
  CHECK(s.relations[4].col_set == 0);
}

TEST_CASE("validate flags structural problems") {
  SUBCASE("self-relation") {
    Schema s = two_set_schema();
    s.relations[0].col_set = 0;
    s.entity_sets.pop_back();
    const ValidationReport report = validate(s);
    CHECK(report.str().find("self-relation") != std::string::npos);
  }
  SUBCASE("dangling set reference") {
    Schema s = two_set_schema();
    s.relations[0].col_set = 7;
    CHECK(validate(s).str().find("missing column set") != std::string::npos);
  }
  SUBCASE("disconnected components") {
    Schema s;
    s.rank = 2;
    s.entity_sets = {{0, "a", 2}, {1, "b", 2}, {2, "c", 2}, {3, "d", 2}};
    s.relations = {{0, 0, 1, Likelihood::Gaussian},
                   {1, 2, 3, Likelihood::Gaussian}};
    CHECK(validate(s).str().find("disconnected") != std::string::npos);
  }
  SUBCASE("rank below one") {
    Schema s = two_set_schema(0);
    CHECK(validate(s).str().find("rank") != std::string::npos);
  }
  SUBCASE("duplicate ordered pair") {
    Schema s = two_set_schema();
    s.relations.push_back({1, 0, 1, Likelihood::Bernoulli});
    CHECK(validate(s).str().find("duplicates") != std::string::npos);
  }
  SUBCASE("reversed pair is allowed") {
    Schema s = two_set_schema();
    s.relations.push_back({1, 1, 0, Likelihood::Bernoulli});
    CHECK(validate(s).ok());
  }
}

TEST_CASE("validate is pure") {
  const Schema s = two_set_schema();
  const ValidationReport first = validate(s);
  const ValidationReport second = validate(s);
  CHECK(first.violations == second.violations);
}

TEST_CASE("multiview schema shapes") {
  SUBCASE("two views share the row set") {
    const Schema s = multiview_schema(2, 10, {6, 7}, 4);
    CHECK(s.n_sets() == 3);
    CHECK(s.n_relations() == 2);
    CHECK(s.relations[0].row_set == 0);
    CHECK(s.relations[1].row_set == 0);
    CHECK(s.relations[0].col_set == 1);
    CHECK(s.relations[1].col_set == 2);
    CHECK(validate(s).ok());
  }
  SUBCASE("one view is plain matrix factorization") {
    const Schema s = multiview_schema(1, 10, {6}, 4);
    CHECK(s.n_sets() == 2);
    CHECK(s.n_relations() == 1);
    CHECK(validate(s).ok());
  }
  SUBCASE("entity count adds up") {
    const Schema s = multiview_schema(3, 10, {4, 5, 6}, 4);
    CHECK(s.total_entities() == 25);
    CHECK(s.n_relations() == 3);
  }
  SUBCASE("bad sizes are rejected") {
    CHECK_THROWS_AS(multiview_schema(2, 0, {6, 7}, 4), Error);
    CHECK_THROWS_AS(multiview_schema(2, 10, {6, 0}, 4), Error);
    CHECK_THROWS_AS(multiview_schema(0, 10, {}, 4), Error);
  }
}

TEST_CASE("multiview schemas always validate") {
  Rng rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    const int n_views = rng.uniform_int(1, 6);
    std::vector<int> cols;
    for (int v = 0; v < n_views; ++v) cols.push_back(rng.uniform_int(1, 20));
    const Schema s =
        multiview_schema(n_views, rng.uniform_int(1, 30), cols,
                         rng.uniform_int(1, 8));
    CAPTURE(trial);
    CHECK(validate(s).ok());
  }
}

TEST_CASE("schema json round-trip") {
  const Schema s = multiview_schema(2, 10, {6, 7}, 4);
  const Schema back = schema_from_json(schema_to_json(s));
  CHECK(schema_hash(back) == schema_hash(s));
  CHECK(back.rank == 4);
  CHECK(back.entity_sets[1].name == "cols1");

  CHECK_THROWS_AS(schema_from_json("not json"), ParseError);
  CHECK_THROWS_AS(schema_from_json("{\"rank\": 1}"), ParseError);
}

TEST_CASE("schema hash tracks content") {
  Schema a = two_set_schema();
  Schema b = two_set_schema();
  CHECK(schema_hash(a) == schema_hash(b));
  b.rank = 6;
  CHECK(schema_hash(a) != schema_hash(b));
  b = two_set_schema();
  b.relations[0].likelihood = Likelihood::Bernoulli;
  CHECK(schema_hash(a) != schema_hash(b));
}
