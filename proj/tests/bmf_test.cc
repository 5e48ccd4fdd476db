#include <gtest/gtest.h>

#include "lmh/bmf.h"
#include "lmh/random.h"

namespace lmh {
namespace {

BooleanMatrix random_matrix(int rows, int cols, double density, Rng& rng) {
  BooleanMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m.set(r, c, uniform01(rng) < density);
  }
  return m;
}

// Rank-2 product whose two rectangles use disjoint rows and columns.
BooleanMatrix planted_disjoint(int n, int m, Rng& rng) {
  BooleanMatrix left(n, 2);
  BooleanMatrix right(2, m);
  // Each row uses rectangle 0, rectangle 1, or neither.
  for (int r = 0; r < n; ++r) {
    const auto k = static_cast<int>(uniform_index(rng, 3));
    if (k < 2) left.set(r, k, true);
  }
  for (int c = 0; c < m; ++c) right.set(c % 2, c, true);
  return BooleanMatrix::product(left, right);
}

TEST(BooleanMatrixTest, ProductAndHamming) {
  BooleanMatrix a(2, 2);
  a.set(0, 0, true);
  a.set(1, 1, true);
  BooleanMatrix b(2, 3);
  b.set(0, 2, true);
  b.set(1, 0, true);
  b.set(1, 1, true);
  const BooleanMatrix p = BooleanMatrix::product(a, b);
  EXPECT_EQ(p, b);
  EXPECT_EQ(p.count_ones(), 3u);
  EXPECT_EQ(p.hamming(BooleanMatrix(2, 3)), 3u);
  EXPECT_THROW(BooleanMatrix::product(b, b), std::invalid_argument);
}

TEST(BmfTest, AllOnesRankOneIsExact) {
  BooleanMatrix m(5, 7);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 7; ++c) m.set(r, c, true);
  }
  const BMFResult f = boolean_rank_approx(m, 1);
  EXPECT_EQ(f.error, 0u);
  EXPECT_EQ(f.reconstruction, m);
}

TEST(BmfTest, IdentityRankTwoErrorAtMostTwo) {
  BooleanMatrix m(4, 4);
  for (int i = 0; i < 4; ++i) m.set(i, i, true);
  EXPECT_LE(boolean_rank_approx(m, 2).error, 2u);
}

TEST(BmfTest, ErrorIsExactHamming) {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const BooleanMatrix m = random_matrix(9, 11, 0.4, rng);
    const BMFResult f = boolean_rank_approx(m, 3);
    EXPECT_EQ(f.error, f.reconstruction.hamming(m));
    EXPECT_EQ(f.reconstruction, BooleanMatrix::product(f.left, f.right));
  }
}

TEST(BmfTest, ErrorMonotoneInRank) {
  Rng rng(2);
  for (int t = 0; t < 30; ++t) {
    const BooleanMatrix m = random_matrix(12, 10, 0.35, rng);
    std::size_t previous = m.count_ones();
    for (int r = 1; r <= 6; ++r) {
      const std::size_t error = boolean_rank_approx(m, r).error;
      EXPECT_LE(error, previous);
      previous = error;
    }
  }
}

TEST(BmfTest, PlantedDisjointRectanglesRecovered) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const int n = 5 + static_cast<int>(uniform_index(rng, 16));
    const int m = 4 + static_cast<int>(uniform_index(rng, 17));
    const BooleanMatrix planted = planted_disjoint(n, m, rng);
    EXPECT_EQ(boolean_rank_approx(planted, 2).error, 0u);
  }
}

TEST(BmfTest, RejectsRankZero) {
  EXPECT_THROW(boolean_rank_approx(BooleanMatrix(2, 2), 0), std::invalid_argument);
}

}  // namespace
}  // namespace lmh
