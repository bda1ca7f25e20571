#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "anw/rng.hpp"

using anw::Rng;

TEST_SUITE("rng") {

TEST_CASE("same seed reproduces the stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
  Rng a(1), b(2);
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += (a.next_u64() == b.next_u64()) ? 1 : 0;
  CHECK(equal == 0);
}

TEST_CASE("next_double stays in [0,1)") {
  Rng rng(7);
  for (int i = 0; i < 100000; ++i) {
    const double v = rng.next_double();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("below respects the bound and covers values") {
  Rng rng(3);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 3000; ++i) {
    const auto v = rng.below(17);
    CHECK(v < 17);
    seen.insert(v);
  }
  CHECK(seen.size() == 17);
}

TEST_CASE("gaussian moments are sane") {
  Rng rng(11);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    sum += g;
    sum2 += g * g;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("shuffle is a permutation and seed-deterministic") {
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[static_cast<std::size_t>(i)] = i;
  std::vector<int> w = v;
  Rng a(5), b(5);
  a.shuffle(v);
  b.shuffle(w);
  CHECK(v == w);
  std::set<int> unique(v.begin(), v.end());
  CHECK(unique.size() == 50);
}

TEST_CASE("derive separates streams") {
  CHECK(Rng::derive(1, 0) != Rng::derive(1, 1));
  CHECK(Rng::derive(1, 0) != Rng::derive(2, 0));
  CHECK(Rng::derive(1, 5) == Rng::derive(1, 5));
}

}  // TEST_SUITE
