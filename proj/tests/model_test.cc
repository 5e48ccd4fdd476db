#include <algorithm>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "lmh/model.h"
#include "lmh/random.h"
#include "oracles.h"
#include "zoo.h"

namespace lmh {
namespace {

using testing::make_model;

TEST(LogScoreTest, SingleUnaryLookup) {
  const Model m = make_model({2}, {{{0}, {0.0, 0.7}}});
  EXPECT_DOUBLE_EQ(m.log_score(State{1}), 0.7);
}

TEST(LogScoreTest, IsingAllZeros) {
  EXPECT_DOUBLE_EQ(testing::ising_2x2().log_score(State{0, 0, 0, 0}), 2.0);
}

TEST(LogScoreTest, MatchesOracleOnRandomModel) {
  const Model m = testing::random_binary(5, 17);
  Rng rng(3);
  for (int t = 0; t < 32; ++t) {
    State x(5);
    for (int& v : x) v = static_cast<int>(uniform_index(rng, 2));
    EXPECT_NEAR(m.log_score(x), oracle::log_score(m, x), 1e-12);
  }
}

TEST(LogScoreTest, RejectsOutOfRangeValue) {
  EXPECT_THROW(testing::ising_2x2().log_score(State{0, 2, 0, 0}), InvalidStateError);
  EXPECT_THROW(testing::ising_2x2().log_score(State{0, 0, 0}), InvalidStateError);
}

TEST(ModelTest, RejectsHardZero) {
  EXPECT_THROW(make_model({2}, {{{0}, {0.0, -std::numeric_limits<double>::infinity()}}}),
               InvalidModelError);
}

TEST(ModelTest, RejectsBadStructure) {
  EXPECT_THROW(make_model({1}, {}), InvalidModelError);
  EXPECT_THROW(make_model({2, 2}, {{{0, 0}, {0, 0, 0, 0}}}), InvalidModelError);
  EXPECT_THROW(make_model({2, 2}, {{{0, 1}, {0, 0, 0}}}), InvalidModelError);
  EXPECT_THROW(make_model({2}, {{{3}, {0, 0}}}), InvalidModelError);
}

TEST(ModelTest, IncidenceMatchesScopes) {
  for (const auto& [name, m] : testing::zoo()) {
    for (int v = 0; v < m.num_variables(); ++v) {
      std::vector<int> expected;
      for (const Potential& p : m.potentials()) {
        if (std::find(p.scope.begin(), p.scope.end(), v) != p.scope.end()) expected.push_back(p.id);
      }
      const auto actual = m.potentials_of(v);
      EXPECT_EQ(std::vector<int>(actual.begin(), actual.end()), expected) << name;
    }
  }
}

TEST(DeltaLogScoreTest, EmptyChangeSetIsZero) {
  EXPECT_EQ(testing::ising_2x2().delta_log_score(State{0, 1, 0, 1}, {}), 0.0);
}

TEST(DeltaLogScoreTest, CornerFlip) {
  const std::vector<Change> flip{{0, 1}};
  EXPECT_DOUBLE_EQ(testing::ising_2x2().delta_log_score(State{0, 0, 0, 0}, flip), -2.0);
}

TEST(DeltaLogScoreTest, MatchesFullReevaluationOnZoo) {
  Rng rng(11);
  for (const auto& [name, m] : testing::zoo()) {
    for (int t = 0; t < 1000; ++t) {
      State x(m.num_variables());
      for (int v = 0; v < m.num_variables(); ++v) {
        x[v] = static_cast<int>(uniform_index(rng, m.cardinality(v)));
      }
      std::vector<Change> changes;
      State y = x;
      for (int v = 0; v < m.num_variables(); ++v) {
        if (uniform01(rng) < 0.3) {
          const int value = static_cast<int>(uniform_index(rng, m.cardinality(v)));
          changes.push_back({v, value});
          y[v] = value;
        }
      }
      ASSERT_NEAR(m.delta_log_score(x, changes), m.log_score(y) - m.log_score(x), 1e-12) << name;
    }
  }
}

TEST(DeltaLogScoreTest, RejectsRepeatedVariable) {
  const std::vector<Change> twice{{0, 1}, {0, 0}};
  EXPECT_THROW(testing::ising_2x2().delta_log_score(State{0, 0, 0, 0}, twice), InvalidStateError);
}

TEST(DeltaScorerTest, SwapInTwiceRestores) {
  const Model m = testing::random_binary(6, 2);
  DeltaScorer scorer(m);
  State x{0, 1, 1, 0, 1, 0};
  const State original = x;
  std::vector<int> vars{1, 4, 5};
  std::vector<int> values{0, 0, 1};
  const double before = m.log_score(x);
  const double d = scorer.swap_in(x, vars, values);
  EXPECT_NEAR(d, m.log_score(x) - before, 1e-12);
  EXPECT_NEAR(scorer.swap_in(x, vars, values), -d, 1e-12);
  EXPECT_EQ(x, original);
}

TEST(ConditionalTest, NoIncidentPotentialsIsUniform) {
  const Model m = make_model({3, 2}, {{{1}, {0.0, 1.0}}});
  const std::vector<double> c = m.conditional_distribution(State{0, 0}, 0);
  for (double p : c) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
}

TEST(ConditionalTest, UnaryLn2) {
  const Model m = make_model({2}, {{{0}, {0.0, std::log(2.0)}}});
  const std::vector<double> c = m.conditional_distribution(State{0}, 0);
  EXPECT_NEAR(c[0], 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(c[1], 2.0 / 3.0, 1e-12);
}

TEST(ConditionalTest, AgreesWithJointOnZoo) {
  for (const auto& [name, m] : testing::zoo()) {
    const std::vector<double> pi = oracle::joint(m);
    for (std::uint64_t i = 0; i < pi.size(); i += 7) {
      const std::vector<int> x = oracle::decode(m, i);
      for (int v = 0; v < m.num_variables(); ++v) {
        const std::vector<double> c = m.conditional_distribution(x, v);
        double total = 0.0;
        std::vector<double> expected;
        for (int a = 0; a < m.cardinality(v); ++a) {
          std::vector<int> y = x;
          y[v] = a;
          expected.push_back(pi[oracle::encode(m, y)]);
          total += expected.back();
        }
        double sum = 0.0;
        for (int a = 0; a < m.cardinality(v); ++a) {
          ASSERT_GE(c[a], 0.0);
          ASSERT_NEAR(c[a], expected[a] / total, 1e-12) << name;
          sum += c[a];
        }
        ASSERT_NEAR(sum, 1.0, 1e-12);
      }
    }
  }
}

TEST(ConditionalTest, RejectsUnknownVariable) {
  EXPECT_THROW(testing::ising_2x2().conditional_distribution(State{0, 0, 0, 0}, 4),
               InvalidStateError);
}

TEST(ExactMarginalsTest, UnaryLn2) {
  const Model m = make_model({2}, {{{0}, {0.0, std::log(2.0)}}});
  EXPECT_NEAR(enumerate_exact_marginals(m).probabilities[0][1], 2.0 / 3.0, 1e-12);
}

TEST(ExactMarginalsTest, IndependentVariablesFactorize) {
  const Model m = testing::unary_model();
  const MarginalTable t = enumerate_exact_marginals(m);
  for (const Potential& p : m.potentials()) {
    const double z = std::exp(p.log_table[0]) + std::exp(p.log_table[1]);
    EXPECT_NEAR(t.probabilities[p.scope[0]][1], std::exp(p.log_table[1]) / z, 1e-12);
  }
}

TEST(ExactMarginalsTest, ZeroFieldIsingIsHalf) {
  const MarginalTable t = enumerate_exact_marginals(testing::ising_2x2());
  for (const auto& row : t.probabilities) EXPECT_NEAR(row[1], 0.5, 1e-15);
}

TEST(ExactMarginalsTest, MatchesOracleOnZoo) {
  for (const auto& [name, m] : testing::zoo()) {
    const auto expected = oracle::marginals(m);
    const MarginalTable t = enumerate_exact_marginals(m);
    for (int v = 0; v < m.num_variables(); ++v) {
      for (int a = 0; a < m.cardinality(v); ++a) {
        EXPECT_NEAR(t.probabilities[v][a], expected[v][a], 1e-12) << name;
      }
    }
  }
}

TEST(ExactMarginalsTest, InvariantUnderPotentialReordering) {
  const Model m = testing::random_binary(7, 9);
  std::vector<Potential> pots(m.potentials().rbegin(), m.potentials().rend());
  for (int f = 0; f < static_cast<int>(pots.size()); ++f) pots[f].id = f;
  const Model reversed(m.variables(), pots);
  EXPECT_LE(enumerate_exact_marginals(m).max_abs_difference(enumerate_exact_marginals(reversed)),
            1e-12);
}

TEST(ExactMarginalsTest, InvariantUnderConstantShift) {
  const Model m = testing::random_binary(6, 4);
  for (int f = 0; f < m.num_potentials(); ++f) {
    std::vector<std::vector<double>> tables;
    for (const Potential& p : m.potentials()) tables.push_back(p.log_table);
    for (double& v : tables[f]) v += 3.25;
    EXPECT_LE(enumerate_exact_marginals(m).max_abs_difference(
                  enumerate_exact_marginals(m.with_tables(tables))),
              1e-12);
  }
}

TEST(ExactMarginalsTest, RefusesOverCap) {
  EXPECT_THROW(enumerate_exact_marginals(testing::random_binary(12, 1), 1000), std::length_error);
}

TEST(StateIndexTest, RoundTrip) {
  const Model m = testing::mixed_cardinality();
  for (std::uint64_t i = 0; i < 144; ++i) EXPECT_EQ(index_from_state(m, state_from_index(m, i)), i);
}

}  // namespace
}  // namespace lmh
