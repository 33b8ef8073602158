#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "signforge/rng.hpp"

using namespace signforge;

TEST_CASE("rng streams are deterministic") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("derive_seed is order sensitive and spreads") {
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(7, {i}));
  CHECK(seen.size() == 1000);
}

TEST_CASE("uniform stays in [0,1) and is roughly uniform") {
  Rng rng(123);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("uniform_int respects bounds and hits every value") {
  Rng rng(9);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const std::uint64_t v = rng.uniform_int(7);
    REQUIRE(v < 7);
    ++counts[static_cast<size_t>(v)];
  }
  for (int c : counts) CHECK(c > 700);
}

TEST_CASE("normal has near-standard moments") {
  Rng rng(55);
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sum2 += x * x;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sum2 / n - 1.0) < 0.03);
}

TEST_CASE("child streams are independent and reproducible") {
  Rng parent(77);
  Rng c1 = parent.child(1);
  Rng c2 = parent.child(2);
  Rng c1_again = Rng(77).child(1);
  CHECK(c1.next_u64() == c1_again.next_u64());
  CHECK(Rng(77).child(1).next_u64() != c2.next_u64());
}
