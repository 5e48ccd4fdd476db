#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lmh/group.h"
#include "lmh/model.h"

namespace lmh {

// Variable and potential colors produced by color refinement.
struct ColorPartition {
  std::vector<int> variable_colors;
  std::vector<int> potential_colors;
  int iterations = 0;
  bool stable = false;

  int num_variable_colors() const;
  int num_potential_colors() const;
};

// Alternating variable/potential color passing. Initial potential colors are
// (scope size, table up to reordering of the scope); initial variable colors
// are (cardinality, multiset of incident potential colors). Stops at a fixed
// point or after `max_iterations` rounds (nullopt = unlimited).
ColorPartition color_refinement(const Model& model,
                                std::optional<int> max_iterations = std::nullopt);

// One symmetrized potential: where its table came from and what replaced it.
struct WeightReplacement {
  int potential = 0;
  int cluster = 0;
  std::vector<double> original;
  std::vector<double> replacement;
};

// Over-symmetric approximation: same variables and scopes, edited tables.
struct OSAModel {
  Model model;
  std::vector<WeightReplacement> provenance;  // only changed potentials
  int clusters = 0;                           // 0 when not clustered
  std::optional<int> bmf_rank;
  std::string method;

  // The source model, rebuilt from the provenance records.
  Model restore() const;
};

inline constexpr std::uint64_t kClusterSeed = 0x5eed'c1a5;
inline constexpr int kClusterMaxIterations = 100;

// Clusters the distinct potential tables into at most `clusters` groups per
// table shape (k-means++ seeding, Lloyd iterations) and replaces every table
// with its cluster centroid.
OSAModel cluster_weights(const Model& model, int clusters,
                         std::uint64_t seed = kClusterSeed);

// Replaces every single-variable table with zeros (an Ising-style model
// without external field).
OSAModel zero_unary_tables(const Model& model);

enum class AutomorphismMode { kTemplate, kSearch };

inline constexpr int kSearchVariableCap = 200;

class SearchCapError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// True when `g` maps every potential onto a potential with an identical table
// (as a function of its variables), counting multiplicities.
bool is_automorphism(const Model& model, const Permutation& g);

// Generators suggested by a structural template: dihedral generators for
// square grids (90-degree rotation and one reflection), the two axis
// reflections for rectangular grids, and index/cell symmetries for Chimera.
std::vector<Permutation> template_generators(const SymmetryTemplate& tmpl,
                                             int degree);

// Template mode keeps the template generators that are automorphisms of the
// model. Search mode runs color refinement and a backtracking search for one
// automorphism per (base level, image) pair, which yields a generating set.
PermutationGroup exact_automorphisms(const Model& model, AutomorphismMode mode);

struct HeuristicConfig {
  int max_moved_potentials = 50;  // K

  void validate() const;
};

// Number of potentials that Sym(points) does not fix as functions: those whose
// scope meets `points` unless the scope contains all of them and the table
// is invariant under permuting them.
int potentials_moved_by_symmetric_group(const Model& model, std::span<const int> points);

// Greedy subgroup construction: within each orbit, grow a point set O' from
// the pair sharing the most potentials, adding the variable that moves the
// fewest new potentials while at most K potentials are moved and the ratio
// |O'| / moved potentials does not drop; emit Sym(O') and repeat on the rest.
std::vector<PermutationGroup> subgroup_heuristic(const VariableOrbitPartition& orbits,
                                                 const Model& model,
                                                 const HeuristicConfig& config);

}  // namespace lmh
