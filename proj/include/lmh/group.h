#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "lmh/model.h"
#include "lmh/random.h"

namespace lmh {

// Bijection on variable indices 0..degree-1, stored as an image array.
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<int> image);

  static Permutation identity(int degree);
  // Disjoint-cycle notation; points not mentioned are fixed.
  static Permutation from_cycles(int degree,
                                 const std::vector<std::vector<int>>& cycles);

  int degree() const { return static_cast<int>(image_.size()); }
  int operator()(int v) const { return image_[v]; }
  const std::vector<int>& image() const { return image_; }

  Permutation inverse() const;
  bool is_identity() const;
  // Points v with image(v) != v, ascending.
  std::vector<int> support() const;
  // Non-trivial cycles, each starting at its smallest point.
  std::vector<std::vector<int>> cycles() const;

  friend bool operator==(const Permutation&, const Permutation&) = default;
  friend auto operator<=>(const Permutation&, const Permutation&) = default;

 private:
  std::vector<int> image_;
};

// (g o h)(v) = g(h(v)).
Permutation compose(const Permutation& g, const Permutation& h);

// x^g, defined by y[g(v)] = x[v]. Satisfies (x^g)^h = x^(h o g).
State apply_to_state(const Permutation& g, std::span<const int> state);

// Throws InvalidModelError unless every cycle of `g` joins variables of equal
// cardinality in `model`, and the degrees agree.
void check_compatible(const Permutation& g, const Model& model);

struct VariableOrbitPartition {
  std::vector<int> orbit_of;             // orbit id per variable
  std::vector<std::vector<int>> orbits;  // sorted members, ordered by min

  int num_orbits() const { return static_cast<int>(orbits.size()); }
};

// Permutation group given by a generating set, with cached variable orbits
// and moved variables. A group may be flagged as the full symmetric group on
// a point set, which enables exactly uniform element sampling.
class PermutationGroup {
 public:
  PermutationGroup(int degree, std::vector<Permutation> generators);

  // Sym(points) with generators one transposition and one full cycle.
  static PermutationGroup symmetric(int degree, std::vector<int> points);
  static PermutationGroup trivial(int degree);

  int degree() const { return degree_; }
  const std::vector<Permutation>& generators() const { return generators_; }
  const VariableOrbitPartition& orbits() const { return orbits_; }
  const std::vector<int>& moved_variables() const { return moved_; }
  bool is_trivial() const { return moved_.empty(); }

  bool is_symmetric_group() const { return symmetric_points_.has_value(); }
  const std::vector<int>& symmetric_points() const { return *symmetric_points_; }

  void check_compatible(const Model& model) const;

 private:
  int degree_ = 0;
  std::vector<Permutation> generators_;
  VariableOrbitPartition orbits_;
  std::vector<int> moved_;
  std::optional<std::vector<int>> symmetric_points_;
};

VariableOrbitPartition variable_orbits(const PermutationGroup& group);

struct MovedSets {
  std::vector<int> variables;
  std::vector<int> potentials;
};

// Moved variables and the potentials whose scope intersects them.
MovedSets moved_sets(const PermutationGroup& group, const Model& model);

// A maximal set of potentials that every generator maps onto itself as a
// multiset of functions. Their summed score is the same at x and x^g for
// every group element g, so score differences may skip them. Ascending.
std::vector<int> delta_invariant_potentials(const PermutationGroup& group, const Model& model);

// Draws group elements near-uniformly by product replacement (rattle variant),
// or exactly uniformly by shuffling when the group is a flagged symmetric
// group or from a stored element list when the group is small. Elements are
// produced over the group's support only: local index i
// stands for variable support()[i]. Mutable and chain-private.
class ElementSampler {
 public:
  static constexpr int kMinSlots = 10;
  static constexpr int kBurnInSteps = 50;
  // Largest n with n! < 2^64; bigger symmetric groups shuffle point by point.
  static constexpr int kMaxLehmerPoints = 20;

  // Groups with at most this many elements, and at most kMaxStoredEntries
  // stored image entries, are enumerated once.
  static constexpr int kMaxStoredElements = 4096;
  static constexpr std::size_t kMaxStoredEntries = std::size_t{1} << 22;

  ElementSampler(const PermutationGroup& group, Rng& rng);

  std::span<const int> support() const { return support_; }
  bool exact_uniform() const { return exact_uniform_ || !elements_.empty(); }
  // Number of stored elements; 0 unless the group was enumerated.
  int stored_elements() const { return static_cast<int>(elements_.size()); }
  int slot_count() const { return static_cast<int>(slots_.size()); }

  // Local image of a fresh random element; valid until the next call.
  std::span<const int> draw_local(Rng& rng);

  // The same draw expanded to a full permutation of the group's degree.
  Permutation random_element(Rng& rng);

 private:
  void replacement_step(Rng& rng);
  bool enumerate(const std::vector<std::vector<int>>& gens);

  int degree_ = 0;
  std::vector<int> support_;
  bool exact_uniform_ = false;
  std::vector<std::vector<int>> slots_;
  std::vector<int> accumulator_;
  std::vector<int> scratch_;
  std::vector<int> product_;
  std::uint64_t factorial_ = 1;
  std::vector<std::vector<int>> elements_;
};

}  // namespace lmh
