#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lmh/marginals.h"

namespace lmh {

class InvalidModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidStateError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A total assignment: values[v] in [0, cardinality(v)).
using State = std::vector<int>;

struct Variable {
  int id = 0;
  int cardinality = 2;
  std::string name;
};

// Log-weights over the joint assignments of `scope`, row-major with the last
// scope variable varying fastest.
struct Potential {
  int id = 0;
  std::vector<int> scope;
  std::vector<double> log_table;
};

// Structural tag attached by the grid and Chimera generators. Template
// generators derived from it are validated against the tables before use.
struct SymmetryTemplate {
  enum class Kind { kGrid, kChimera };
  Kind kind = Kind::kGrid;
  int rows = 0;
  int cols = 0;

  friend bool operator==(const SymmetryTemplate&, const SymmetryTemplate&) = default;
};

struct Change {
  int var = 0;
  int value = 0;
};

// Immutable discrete factor graph over log-space potentials. Safe to share
// across concurrently running chains.
class Model {
 public:
  Model() = default;
  Model(std::vector<Variable> variables, std::vector<Potential> potentials,
        std::optional<SymmetryTemplate> symmetry_template = std::nullopt);

  int num_variables() const { return static_cast<int>(variables_.size()); }
  int num_potentials() const { return static_cast<int>(potentials_.size()); }
  int cardinality(int var) const { return variables_[var].cardinality; }
  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Potential>& potentials() const { return potentials_; }
  const std::optional<SymmetryTemplate>& symmetry_template() const {
    return template_;
  }
  std::vector<int> cardinalities() const;

  // Ids of the potentials whose scope contains `var`.
  std::span<const int> potentials_of(int var) const {
    return {incidence_.data() + incidence_offsets_[var],
            incidence_.data() + incidence_offsets_[var + 1]};
  }

  // Same variables and scopes, new tables (validated).
  Model with_tables(std::vector<std::vector<double>> tables) const;

  void check_state(std::span<const int> state) const;

  // Table entry of one potential at `state` restricted to its scope. No
  // validation; hot path.
  double entry(int potential, std::span<const int> state) const {
    const std::size_t begin = scope_offsets_[potential];
    const std::size_t end = scope_offsets_[potential + 1];
    std::size_t index = 0;
    for (std::size_t k = begin; k < end; ++k) {
      index += static_cast<std::size_t>(state[flat_scope_[k]]) * flat_strides_[k];
    }
    return potentials_[potential].log_table[index];
  }

  // Unnormalized log pi(state).
  double log_score(std::span<const int> state) const;

  // log_score(state with changes) - log_score(state), evaluated only on the
  // potentials incident to changed variables.
  double delta_log_score(std::span<const int> state,
                         std::span<const Change> changes) const;

  // Conditional distribution of `var` given all other values in `state`.
  std::vector<double> conditional_distribution(std::span<const int> state,
                                               int var) const;

  // Unnormalized conditional log-weights of each value of `var`; `out` must
  // hold cardinality(var) entries. Hot path of the Gibbs kernel.
  void conditional_log_weights(std::span<const int> state, int var,
                               std::span<double> out) const;

  // log2 of the number of joint states.
  double log2_state_count() const;

 private:
  void build_indices();

  std::vector<Variable> variables_;
  std::vector<Potential> potentials_;
  std::optional<SymmetryTemplate> template_;

  std::vector<std::size_t> scope_offsets_;
  std::vector<int> flat_scope_;
  std::vector<std::size_t> flat_strides_;
  std::vector<std::size_t> incidence_offsets_;
  std::vector<int> incidence_;
  std::vector<std::size_t> incidence_strides_;
};

// Chain-private scratch for repeated delta evaluations between two states.
class DeltaScorer {
 public:
  explicit DeltaScorer(const Model& model);

  // log_score(after) - log_score(before), where the two states differ only in
  // `changed_vars`. Each touched potential is evaluated once.
  double delta(std::span<const int> before, std::span<const int> after,
               std::span<const int> changed_vars);

  // Writes values[i] into state[vars[i]] and returns the resulting change of
  // log_score. The previous values are left in `values`, so a second call
  // with the same arguments undoes the change.
  double swap_in(std::span<int> state, std::span<const int> vars,
                 std::span<int> values);

  // Potentials left out of every later evaluation. Only sound when their
  // summed score is unchanged by all moves scored afterwards.
  void skip_potentials(std::span<const int> potentials);

  // Number of potentials evaluated by the last call.
  int last_touched() const { return last_touched_; }

 private:
  const Model* model_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
  int last_touched_ = 0;
  std::vector<int> touched_;
  std::vector<char> skipped_;
  // Incidence lists without skipped potentials, CSR form.
  std::vector<std::size_t> offsets_;
  std::vector<int> incidence_;

  void collect_touched(std::span<const int> vars);
};

inline constexpr std::uint64_t kDefaultEnumerationCap = std::uint64_t{1} << 24;

// Exact single-variable marginals by full enumeration.
MarginalTable enumerate_exact_marginals(
    const Model& model, std::uint64_t max_states = kDefaultEnumerationCap);

// Normalized joint probabilities of every state, in mixed-radix order with
// variable 0 most significant.
std::vector<double> enumerate_joint(
    const Model& model, std::uint64_t max_states = kDefaultEnumerationCap);

// Mixed-radix state <-> index helpers matching enumerate_joint.
State state_from_index(const Model& model, std::uint64_t index);
std::uint64_t index_from_state(const Model& model, std::span<const int> state);

double log_sum_exp(std::span<const double> values);

// Table of a potential re-expressed over the scope order scope[perm[0]],
// scope[perm[1]], ...
std::vector<double> reorder_table(std::span<const double> table, std::span<const int> cards,
                                  std::span<const int> perm);

std::vector<int> scope_cards(const Model& model, std::span<const int> scope);

// (sorted scope, table over the sorted scope): equal keys mean equal
// functions of the same variables.
using FunctionKey = std::pair<std::vector<int>, std::vector<double>>;

FunctionKey function_key(const Model& model, std::vector<int> scope,
                         std::span<const double> table);

}  // namespace lmh
