#include <gtest/gtest.h>

#include <algorithm>
#include <cstdint>

#include "errloc/error.hpp"
#include "errloc/hypergeom.hpp"

using errloc::hypergeom_p;

namespace {

// Exact for n <= 62.
std::uint64_t choose(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double exact_lower_tail(std::uint64_t pop, std::uint64_t succ, std::uint64_t draws,
                        std::uint64_t k) {
  long double num = 0;
  for (std::uint64_t x = 0; x <= k; ++x) {
    num += static_cast<long double>(choose(succ, x)) * choose(pop - succ, draws - x);
  }
  return static_cast<double>(num / choose(pop, draws));
}

}  // namespace

TEST(Hypergeom, SmallHandCase) {
  // 10 rows, 5 marked, draw 4, none marked: C(5,4) / C(10,4).
  EXPECT_NEAR(hypergeom_p(10, 5, 4, 0), 5.0 / 210.0, 1e-15);
}

TEST(Hypergeom, Edges) {
  EXPECT_DOUBLE_EQ(hypergeom_p(10, 5, 4, 4), 1.0);
  EXPECT_DOUBLE_EQ(hypergeom_p(10, 0, 4, 0), 1.0);
  EXPECT_DOUBLE_EQ(hypergeom_p(10, 10, 4, 4), 1.0);
  EXPECT_DOUBLE_EQ(hypergeom_p(7, 3, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(hypergeom_p(7, 3, 7, 3), 1.0);
  // draws leaving fewer than k+1 unmarked rows force X >= draws - unmarked
  EXPECT_DOUBLE_EQ(hypergeom_p(10, 8, 5, 2), 0.0);
}

TEST(Hypergeom, RejectsBadArguments) {
  EXPECT_THROW(hypergeom_p(10, 11, 2, 0), errloc::InvalidArgument);
  EXPECT_THROW(hypergeom_p(10, 5, 11, 0), errloc::InvalidArgument);
  EXPECT_THROW(hypergeom_p(10, 5, 3, 4), errloc::InvalidArgument);
  EXPECT_THROW(hypergeom_p(10, 2, 5, 3), errloc::InvalidArgument);
}

TEST(Hypergeom, MatchesEnumerationUpTo30) {
  for (std::uint64_t pop = 1; pop <= 30; ++pop)
    for (std::uint64_t succ = 0; succ <= pop; ++succ)
      for (std::uint64_t draws = 0; draws <= pop; ++draws)
        for (std::uint64_t k = 0; k <= std::min(draws, succ); ++k)
          ASSERT_NEAR(hypergeom_p(pop, succ, draws, k), exact_lower_tail(pop, succ, draws, k), 1e-12)
              << pop << " " << succ << " " << draws << " " << k;
}

TEST(Hypergeom, MonotoneInK) {
  const std::uint64_t pop = 500, succ = 430, draws = 120;
  double prev = 0.0;
  for (std::uint64_t k = 0; k <= draws; ++k) {
    const double p = hypergeom_p(pop, succ, draws, k);
    EXPECT_GE(p, prev - 1e-15);
    EXPECT_LE(p, 1.0);
    prev = p;
  }
  EXPECT_NEAR(prev, 1.0, 1e-12);
}
