#include <gtest/gtest.h>

#include <cmath>

#include "lrcox/parallel.hpp"
#include "lrcox/random.hpp"

using namespace lrcox;

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  auto a = Rng::stream(5, {1, 2});
  auto b = Rng::stream(5, {1, 2});
  auto c = Rng::stream(5, {2, 1});
  for (int i = 0; i < 10; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    EXPECT_NE(x, c.next_u64());
  }
}

TEST(Rng, MomentsAreSane) {
  auto rng = Rng::stream(11, {});
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0, se = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
    se += rng.exponential(2.0);
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.02);
  EXPECT_NEAR(se / n, 2.0, 0.03);
}

TEST(Rng, UniformIndexCoversRange) {
  auto rng = Rng::stream(12, {});
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.uniform_index(7)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(Parallel, VisitsEveryIndexOnceAndRethrows) {
  std::vector<int> hits(50, 0);
  parallel_for(50, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(5, [](std::size_t i) {
                 if (i == 3) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}
