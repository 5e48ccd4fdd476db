// Sanity checks of the reference implementations on hand-sized cases.

#include <cmath>

#include <gtest/gtest.h>

#include "oracles.h"
#include "zoo.h"

namespace lmh {
namespace {

TEST(OracleTest, JointOfUnaryLn2) {
  const Model m = testing::make_model({2}, {{{0}, {0.0, std::log(2.0)}}});
  const std::vector<double> pi = oracle::joint(m);
  EXPECT_NEAR(pi[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(pi[1], 2.0 / 3.0, 1e-15);
}

TEST(OracleTest, EncodeDecodeMostSignificantFirst) {
  const Model m = testing::mixed_cardinality();
  EXPECT_EQ(oracle::encode(m, {0, 0, 0, 0, 1}), 1u);
  EXPECT_EQ(oracle::encode(m, {1, 0, 0, 0, 0}), 72u);
  for (std::uint64_t i = 0; i < 144; ++i) EXPECT_EQ(oracle::encode(m, oracle::decode(m, i)), i);
}

TEST(OracleTest, ClosureOrders) {
  EXPECT_EQ(oracle::closure({{1, 0, 2}, {1, 2, 0}}, 3).size(), 6u);
  EXPECT_EQ(oracle::closure({{1, 2, 3, 0}, {3, 2, 1, 0}}, 4).size(), 8u);
  EXPECT_EQ(oracle::closure({}, 4).size(), 1u);
}

TEST(OracleTest, ActMovesValues) {
  EXPECT_EQ(oracle::act({1, 2, 0}, {7, 8, 9}), (std::vector<int>{9, 7, 8}));
}

TEST(OracleTest, BruteForceCycle) {
  EXPECT_EQ(oracle::brute_force_automorphisms(testing::cycle4()).size(), 8u);
  EXPECT_EQ(oracle::brute_force_automorphisms(testing::unary_model()).size(), 1u);
}

TEST(OracleTest, MatrixChecksOnTwoStateChain) {
  // P = [[0.5, 0.5], [0.25, 0.75]] has stationary distribution (1/3, 2/3).
  oracle::KernelMatrix p(2);
  p[0] = {{0, 0.5}, {1, 0.5}};
  p[1] = {{0, 0.25}, {1, 0.75}};
  const std::vector<double> pi{1.0 / 3, 2.0 / 3};
  EXPECT_LE(oracle::stationarity_error(p, pi), 1e-15);
  EXPECT_LE(oracle::detailed_balance_error(p, pi), 1e-15);
  EXPECT_LE(oracle::row_sum_error(p), 1e-15);
  EXPECT_TRUE(oracle::irreducible(p));
  EXPECT_NEAR(oracle::stationarity_error(p, {0.5, 0.5}), 0.125, 1e-15);
  p[0] = {{0, 1.0}};
  EXPECT_FALSE(oracle::irreducible(p));
}

TEST(OracleTest, GibbsMatrixOfSingleVariableIsConditional) {
  const Model m = testing::make_model({2}, {{{0}, {0.0, std::log(3.0)}}});
  const oracle::KernelMatrix p = oracle::gibbs_matrix(m, oracle::joint(m));
  EXPECT_NEAR(p[0].at(1), 0.75, 1e-15);
  EXPECT_NEAR(p[1].at(1), 0.75, 1e-15);
}

}  // namespace
}  // namespace lmh
