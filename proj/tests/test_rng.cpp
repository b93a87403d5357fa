#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "fedsim/rng.hpp"

using namespace fedsim;

TEST_CASE("same seed reproduces the same stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  Rng c(42), d(42);
  for (int i = 0; i < 100; ++i) {
    CHECK(c.normal() == d.normal());
    CHECK(c.uniform01() == d.uniform01());
  }
}

TEST_CASE("substreams with different keys diverge") {
  Rng a = Rng::substream(7, Stream::kLocalTrain, 0, 0);
  Rng b = Rng::substream(7, Stream::kLocalTrain, 0, 1);
  Rng c = Rng::substream(7, Stream::kLocalTrain, 1, 0);
  Rng d = Rng::substream(8, Stream::kLocalTrain, 0, 0);
  const auto x = a.next_u64();
  CHECK(x != b.next_u64());
  CHECK(x != c.next_u64());
  CHECK(x != d.next_u64());
}

TEST_CASE("uniform01 stays in [0,1) and looks uniform") {
  Rng rng(1);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("below is unbiased over a small range") {
  Rng rng(3);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[rng.below(7)];
  for (int c : counts) {
    CHECK(std::abs(c - 10000) < 400);  // ~4 sigma
  }
  CHECK_THROWS_AS(rng.below(0), std::invalid_argument);
}

TEST_CASE("normal has the right first two moments") {
  Rng rng(5);
  double sum = 0.0, sumsq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sumsq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sumsq / n - 1.0) < 0.02);
}

TEST_CASE("shuffle is a deterministic permutation") {
  std::vector<int> v1{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<int> v2 = v1;
  Rng a(11), b(11);
  a.shuffle(v1);
  b.shuffle(v2);
  CHECK(v1 == v2);
  CHECK(std::set<int>(v1.begin(), v1.end()).size() == 10);
}
