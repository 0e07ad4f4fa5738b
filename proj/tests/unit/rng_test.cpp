#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "scorekit/rng.hpp"

using scorekit::Rng;

TEST_SUITE("rng") {

TEST_CASE("same seed replays the same sequence") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("fork is pure and schedule independent") {
  Rng root(7);
  Rng child1 = root.fork(3);
  root.next_u64();
  root.uniform();
  Rng child2 = root.fork(3);
  // Drawing from the parent must not change what a fork produces.
  for (int i = 0; i < 16; ++i) CHECK(child1.next_u64() == child2.next_u64());

  Rng other = root.fork(4);
  CHECK(other.next_u64() != root.fork(3).next_u64());
}

TEST_CASE("uniform is in range and uniform") {
  Rng rng(123);
  const int n = 50000;
  std::vector<double> draws(n);
  for (auto& d : draws) {
    d = rng.uniform();
    REQUIRE(d >= 0.0);
    REQUIRE(d < 1.0);
  }
  CHECK(oracles::naive_mean(draws) == doctest::Approx(0.5).epsilon(0.01));
  CHECK(oracles::naive_variance(draws) ==
        doctest::Approx(1.0 / 12.0).epsilon(0.05));
  const double ks = oracles::ks_statistic(draws, [](double x) { return x; });
  CHECK(ks < oracles::ks_critical(n, 0.001));
}

TEST_CASE("uniform with bounds") {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double d = rng.uniform(-2.0, 3.0);
    CHECK(d >= -2.0);
    CHECK(d < 3.0);
  }
}

TEST_CASE("normal draws match the standard normal") {
  Rng rng(99);
  const int n = 50000;
  std::vector<double> draws(n);
  for (auto& d : draws) d = rng.normal();
  CHECK(oracles::naive_mean(draws) == doctest::Approx(0.0).epsilon(0.02));
  CHECK(oracles::naive_variance(draws) == doctest::Approx(1.0).epsilon(0.03));
  const double ks = oracles::ks_statistic(draws, oracles::normal_cdf);
  CHECK(ks < oracles::ks_critical(n, 0.001));
}

TEST_CASE("below covers all buckets roughly evenly") {
  Rng rng(17);
  const std::uint64_t k = 7;
  std::vector<int> counts(k, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const std::uint64_t v = rng.below(k);
    REQUIRE(v < k);
    ++counts[v];
  }
  for (int c : counts)
    CHECK(std::abs(c - n / static_cast<int>(k)) < 400);
}

TEST_CASE("normal_vector has the requested length") {
  Rng rng(1);
  CHECK(rng.normal_vector(5).size() == 5);
}

}  // TEST_SUITE
