#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "gcmf/likelihoods.hpp"
#include "gcmf/rng.hpp"

using namespace gcmf;

TEST_CASE("rng streams are deterministic and label-separated") {
  Rng a(derive_seed(42, "component"));
  Rng b(derive_seed(42, "component"));
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng c(derive_seed(42, "other"));
  CHECK(Rng(derive_seed(42, "component")).next_u64() != c.next_u64());
  CHECK(derive_seed(42, "x", 0) != derive_seed(42, "x", 1));
  CHECK(derive_seed(42, "x", 0) != derive_seed(43, "x", 0));
}

TEST_CASE("uniform and normal moments are sane") {
  Rng rng(123);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sq += u * u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(sq / n == doctest::Approx(1.0 / 3.0).epsilon(0.01));

  sum = sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(0.02));
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("below produces every value in range") {
  Rng rng(9);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) ++counts[rng.below(7)];
  for (int c : counts) CHECK(c > 800);
}

TEST_CASE("shuffle is a permutation") {
  Rng rng(4);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("digamma matches known values and the recurrence") {
  // psi(1) = -gamma, psi(0.5) = -gamma - 2 ln 2
  CHECK(digamma(1.0) == doctest::Approx(-0.57721566490153286).epsilon(1e-12));
  CHECK(digamma(0.5) == doctest::Approx(-1.9635100260214235).epsilon(1e-12));
  CHECK(digamma(10.0) == doctest::Approx(2.2517525890667211).epsilon(1e-12));
  for (double x : {0.1, 0.7, 1.3, 2.9, 17.0}) {
    CHECK(digamma(x + 1.0) ==
          doctest::Approx(digamma(x) + 1.0 / x).epsilon(1e-12));
  }
  CHECK_THROWS_AS(digamma(0.0), Error);
}
