#include <numeric>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "lmh/group.h"
#include "lmh/symmetry.h"
#include "oracles.h"
#include "zoo.h"

namespace lmh {
namespace {

Permutation cycles(int degree, const std::vector<std::vector<int>>& c) {
  return Permutation::from_cycles(degree, c);
}

// Groups of order <= 48 with known structure.
std::vector<PermutationGroup> small_groups() {
  std::vector<PermutationGroup> out;
  out.emplace_back(4, std::vector<Permutation>{cycles(4, {{0, 1}, {2, 3}})});
  out.push_back(PermutationGroup::symmetric(5, {1, 2, 4}));
  out.emplace_back(6, std::vector<Permutation>{cycles(6, {{0, 1, 2, 3, 4, 5}})});
  out.emplace_back(9, template_generators({SymmetryTemplate::Kind::kGrid, 3, 3}, 9));
  out.emplace_back(6, std::vector<Permutation>{cycles(6, {{0, 1}}), cycles(6, {{0, 1, 2, 3}}),
                                               cycles(6, {{4, 5}})});
  out.emplace_back(7, std::vector<Permutation>{cycles(7, {{0, 1, 2}, {3, 4}}),
                                               cycles(7, {{5, 6}})});
  out.push_back(PermutationGroup::trivial(3));
  return out;
}

TEST(PermutationTest, ComposeIdentityAndInvolution) {
  const Permutation h = cycles(3, {{0, 2}});
  EXPECT_EQ(compose(Permutation::identity(3), h), h);
  const Permutation swap = cycles(3, {{0, 1}});
  EXPECT_TRUE(compose(swap, swap).is_identity());
}

TEST(PermutationTest, ComposeIsPointwise) {
  const Permutation g = cycles(3, {{0, 1, 2}});
  const Permutation h = cycles(3, {{0, 1}});
  const Permutation gh = compose(g, h);
  for (int v = 0; v < 3; ++v) EXPECT_EQ(gh(v), g(h(v)));
  EXPECT_THROW(compose(g, Permutation::identity(4)), std::invalid_argument);
}

TEST(PermutationTest, InverseAndCycles) {
  const Permutation g = cycles(6, {{0, 3, 5}, {1, 2}});
  EXPECT_TRUE(compose(g, g.inverse()).is_identity());
  EXPECT_EQ(g.cycles(), (std::vector<std::vector<int>>{{0, 3, 5}, {1, 2}}));
  EXPECT_EQ(g.support(), (std::vector<int>{0, 1, 2, 3, 5}));
  EXPECT_THROW(Permutation(std::vector<int>{0, 0}), std::invalid_argument);
  EXPECT_THROW(cycles(3, {{0, 1}, {1, 2}}), std::invalid_argument);
}

TEST(ApplyToStateTest, PairedSwap) {
  EXPECT_EQ(apply_to_state(cycles(4, {{0, 1}, {2, 3}}), State{0, 1, 1, 0}), (State{1, 0, 0, 1}));
}

TEST(ApplyToStateTest, IdentityAndThreeCycle) {
  EXPECT_EQ(apply_to_state(Permutation::identity(4), State{0, 1, 1, 0}), (State{0, 1, 1, 0}));
  EXPECT_EQ(apply_to_state(cycles(4, {{0, 1, 2}}), State{0, 1, 0, 0}), (State{0, 0, 1, 0}));
}

TEST(ApplyToStateTest, ActionLaw) {
  Rng rng(5);
  const int n = 7;
  for (int t = 0; t < 1000; ++t) {
    std::vector<int> a(n), b(n);
    std::iota(a.begin(), a.end(), 0);
    std::iota(b.begin(), b.end(), 0);
    shuffle(std::span<int>(a), rng);
    shuffle(std::span<int>(b), rng);
    const Permutation g(a), h(b);
    State x(n);
    for (int& v : x) v = static_cast<int>(uniform_index(rng, 3));
    ASSERT_EQ(apply_to_state(h, apply_to_state(g, x)), apply_to_state(compose(h, g), x));
  }
}

TEST(CompatibilityTest, RejectsCardinalityMismatchInCycle) {
  const Model m = testing::mixed_cardinality();
  EXPECT_THROW(check_compatible(cycles(5, {{0, 1}}), m), InvalidModelError);
  EXPECT_NO_THROW(check_compatible(cycles(5, {{1, 3}}), m));
}

TEST(OrbitsTest, PairedSwapToy) {
  const PermutationGroup g(4, {cycles(4, {{0, 1}, {2, 3}})});
  EXPECT_EQ(g.orbits().orbits, (std::vector<std::vector<int>>{{0, 1}, {2, 3}}));
}

TEST(OrbitsTest, TrivialGroupHasSingletons) {
  const PermutationGroup g(3, {Permutation::identity(3)});
  EXPECT_EQ(g.orbits().num_orbits(), 3);
  EXPECT_TRUE(g.is_trivial());
}

TEST(OrbitsTest, DihedralThreeByThree) {
  const PermutationGroup g(9, template_generators({SymmetryTemplate::Kind::kGrid, 3, 3}, 9));
  EXPECT_EQ(g.orbits().orbits,
            (std::vector<std::vector<int>>{{0, 2, 6, 8}, {1, 3, 5, 7}, {4}}));
  EXPECT_EQ(oracle::closure(g).size(), 8u);
}

TEST(OrbitsTest, MatchesExhaustiveClosure) {
  for (const PermutationGroup& g : small_groups()) {
    const auto elements = oracle::closure(g);
    ASSERT_LE(elements.size(), 48u);
    EXPECT_EQ(g.orbits().orbits, oracle::point_orbits(elements, g.degree()));
  }
}

TEST(StabilizerSymmetryTest, ProposalCountsAreSymmetric) {
  // |{g : x^g = y}| = |{g : y^g = x}| for states in one orbit.
  for (const PermutationGroup& g : small_groups()) {
    const auto elements = oracle::closure(g);
    const int n = g.degree();
    for (int bits = 0; bits < (1 << n); bits += 3) {
      std::vector<int> x(n);
      for (int v = 0; v < n; ++v) x[v] = (bits >> v) & 1;
      std::map<std::vector<int>, int> forward;
      for (const auto& e : elements) ++forward[oracle::act(e, x)];
      for (const auto& [y, count] : forward) {
        int back = 0;
        for (const auto& e : elements) back += oracle::act(e, y) == x;
        ASSERT_EQ(count, back);
      }
    }
  }
}

TEST(MovedSetsTest, IdentityGroupIsEmpty) {
  const MovedSets s = moved_sets(PermutationGroup::trivial(4), testing::chain4());
  EXPECT_TRUE(s.variables.empty());
  EXPECT_TRUE(s.potentials.empty());
}

TEST(MovedSetsTest, SwapOnChain) {
  // chain4: edges 0..2 are (0,1), (1,2), (2,3); unaries 3..6.
  const MovedSets s = moved_sets(PermutationGroup(4, {cycles(4, {{0, 1}})}), testing::chain4());
  EXPECT_EQ(s.variables, (std::vector<int>{0, 1}));
  EXPECT_EQ(s.potentials, (std::vector<int>{0, 1, 3, 4}));
}

TEST(MovedSetsTest, FullSymmetricGroupMovesEverything) {
  const Model m = testing::chain4();
  const MovedSets s = moved_sets(PermutationGroup::symmetric(4, {0, 1, 2, 3}), m);
  EXPECT_EQ(s.variables.size(), 4u);
  EXPECT_EQ(static_cast<int>(s.potentials.size()), m.num_potentials());
}

TEST(MovedSetsTest, PotentialsOutsideAreFixed) {
  const Model m = testing::random_binary(6, 8);
  const PermutationGroup g(6, {cycles(6, {{0, 2}}), cycles(6, {{2, 3}})});
  const MovedSets s = moved_sets(g, m);
  const std::set<int> moved(s.potentials.begin(), s.potentials.end());
  for (const auto& e : oracle::closure(g)) {
    for (int bits = 0; bits < 64; ++bits) {
      std::vector<int> x(6);
      for (int v = 0; v < 6; ++v) x[v] = (bits >> v) & 1;
      const std::vector<int> y = oracle::act(e, x);
      for (int f = 0; f < m.num_potentials(); ++f) {
        if (moved.contains(f)) continue;
        ASSERT_EQ(m.entry(f, x), m.entry(f, y));
      }
    }
  }
}

TEST(DeltaInvariantTest, AutomorphismSkipsEverything) {
  const Model m = testing::cycle4();
  const PermutationGroup g(4, {cycles(4, {{0, 1, 2, 3}})});
  EXPECT_EQ(delta_invariant_potentials(g, m).size(), 4u);
}

TEST(DeltaInvariantTest, KeepsOnlyPermutedFunctions) {
  // paired_swap_toy: the swap maps edge (0,2) to (1,3) with the same table, but the
  // unary tables differ.
  const Model m = testing::paired_swap_toy();
  const PermutationGroup g(4, {cycles(4, {{0, 1}, {2, 3}})});
  EXPECT_EQ(delta_invariant_potentials(g, m), (std::vector<int>{0, 1}));
}

TEST(DeltaInvariantTest, SumOverSetIsGroupInvariant) {
  for (const auto& [name, m] : testing::zoo()) {
    if (m.num_variables() > 10) continue;
    const ColorPartition colors = color_refinement(m);
    // Sym on the first color class with two or more same-cardinality members.
    std::map<int, std::vector<int>> classes;
    for (int v = 0; v < m.num_variables(); ++v) classes[colors.variable_colors[v]].push_back(v);
    for (const auto& [c, members] : classes) {
      if (members.size() < 2 || members.size() > 5) continue;
      const PermutationGroup g = PermutationGroup::symmetric(m.num_variables(), members);
      const std::vector<int> skip = delta_invariant_potentials(g, m);
      const auto elements = oracle::closure(g);
      const std::vector<double> pi = oracle::joint(m);
      for (std::uint64_t i = 0; i < pi.size(); i += 5) {
        const std::vector<int> x = oracle::decode(m, i);
        double base = 0.0;
        for (int f : skip) base += m.entry(f, x);
        for (const auto& e : elements) {
          const std::vector<int> y = oracle::act(e, x);
          double moved = 0.0;
          for (int f : skip) moved += m.entry(f, y);
          ASSERT_NEAR(moved, base, 1e-12) << name;
        }
      }
      break;
    }
  }
}

TEST(ElementSamplerTest, TrivialGroupGivesIdentity) {
  Rng rng(1);
  ElementSampler s(PermutationGroup::trivial(3), rng);
  for (int t = 0; t < 10; ++t) EXPECT_TRUE(s.random_element(rng).is_identity());
}

TEST(ElementSamplerTest, ProductReplacementParameters) {
  Rng rng(2);
  const PermutationGroup g(8, {cycles(8, {{0, 1, 2, 3, 4, 5, 6, 7}}), cycles(8, {{0, 1}})});
  ElementSampler s(g, rng);
  // Sym(8) has 40320 elements, above the enumeration limit.
  EXPECT_EQ(s.stored_elements(), 0);
  EXPECT_EQ(s.slot_count(), 10);
  std::set<std::vector<int>> seen;
  for (int t = 0; t < 2000; ++t) seen.insert(s.random_element(rng).image());
  EXPECT_GT(seen.size(), 1500u);
}

TEST(ElementSamplerTest, OrderTwoFrequencies) {
  Rng rng(3);
  const PermutationGroup g(4, {cycles(4, {{0, 1}, {2, 3}})});
  ElementSampler s(g, rng);
  int identity = 0;
  const int draws = 10000;
  for (int t = 0; t < draws; ++t) identity += s.random_element(rng).is_identity();
  EXPECT_NEAR(identity / static_cast<double>(draws), 0.5, 0.02);
}

TEST(ElementSamplerTest, SymmetricShuffleFrequencies) {
  Rng rng(4);
  const PermutationGroup g = PermutationGroup::symmetric(5, {1, 2, 3});
  ElementSampler s(g, rng);
  EXPECT_TRUE(s.exact_uniform());
  std::map<std::vector<int>, int> counts;
  const int draws = 100000;
  for (int t = 0; t < draws; ++t) ++counts[s.random_element(rng).image()];
  ASSERT_EQ(counts.size(), 6u);
  for (const auto& [image, c] : counts) EXPECT_NEAR(c / static_cast<double>(draws), 1.0 / 6.0, 0.01);
}

TEST(ElementSamplerTest, EnumeratedGroupIsUniform) {
  Rng rng(6);
  const PermutationGroup g(9, template_generators({SymmetryTemplate::Kind::kGrid, 3, 3}, 9));
  ElementSampler s(g, rng);
  EXPECT_EQ(s.stored_elements(), 8);
  std::map<std::vector<int>, int> counts;
  const int draws = 80000;
  for (int t = 0; t < draws; ++t) ++counts[s.random_element(rng).image()];
  const auto elements = oracle::closure(g);
  ASSERT_EQ(counts.size(), elements.size());
  for (const auto& e : elements) EXPECT_NEAR(counts[e] / static_cast<double>(draws), 0.125, 0.01);
}

TEST(PermutationGroupTest, SymmetricGroupGenerators) {
  const PermutationGroup g = PermutationGroup::symmetric(6, {1, 3, 4, 5});
  EXPECT_TRUE(g.is_symmetric_group());
  EXPECT_EQ(g.moved_variables(), (std::vector<int>{1, 3, 4, 5}));
  EXPECT_EQ(oracle::closure(g).size(), 24u);
  EXPECT_THROW(PermutationGroup::symmetric(6, {1, 1}), std::invalid_argument);
}

}  // namespace
}  // namespace lmh
