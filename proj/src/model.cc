#include "lmh/model.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace lmh {

double MarginalTable::max_abs_difference(const MarginalTable& other) const {
  if (other.probabilities.size() != probabilities.size()) {
    throw std::invalid_argument("marginal tables differ in variable count");
  }
  double worst = 0.0;
  for (std::size_t v = 0; v < probabilities.size(); ++v) {
    if (other.probabilities[v].size() != probabilities[v].size()) {
      throw std::invalid_argument("marginal tables differ in cardinality");
    }
    for (std::size_t a = 0; a < probabilities[v].size(); ++a) {
      worst = std::max(worst,
                       std::abs(probabilities[v][a] - other.probabilities[v][a]));
    }
  }
  return worst;
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double top = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - top);
  return top + std::log(sum);
}

Model::Model(std::vector<Variable> variables, std::vector<Potential> potentials,
             std::optional<SymmetryTemplate> symmetry_template)
    : variables_(std::move(variables)),
      potentials_(std::move(potentials)),
      template_(symmetry_template) {
  const int n = num_variables();
  for (int v = 0; v < n; ++v) {
    if (variables_[v].id != v) {
      throw InvalidModelError("variable ids must be contiguous from 0; got " +
                              std::to_string(variables_[v].id) + " at position " +
                              std::to_string(v));
    }
    if (variables_[v].cardinality < 2) {
      throw InvalidModelError("variable " + std::to_string(v) +
                              " has cardinality < 2");
    }
  }
  std::vector<char> seen(n, 0);
  for (int f = 0; f < num_potentials(); ++f) {
    const Potential& p = potentials_[f];
    if (p.id != f) {
      throw InvalidModelError("potential ids must be contiguous from 0; got " +
                              std::to_string(p.id) + " at position " +
                              std::to_string(f));
    }
    std::size_t expected = 1;
    for (int v : p.scope) {
      if (v < 0 || v >= n) {
        throw InvalidModelError("potential " + std::to_string(f) +
                                " references unknown variable " +
                                std::to_string(v));
      }
      if (seen[v]) {
        throw InvalidModelError("potential " + std::to_string(f) +
                                " repeats variable " + std::to_string(v));
      }
      seen[v] = 1;
      expected *= static_cast<std::size_t>(variables_[v].cardinality);
    }
    for (int v : p.scope) seen[v] = 0;
    if (p.log_table.size() != expected) {
      throw InvalidModelError("potential " + std::to_string(f) + " has " +
                              std::to_string(p.log_table.size()) +
                              " table entries, expected " +
                              std::to_string(expected));
    }
    for (double w : p.log_table) {
      if (!std::isfinite(w)) {
        throw InvalidModelError("potential " + std::to_string(f) +
                                " has a non-finite log-weight");
      }
    }
  }
  build_indices();
}

void Model::build_indices() {
  const int n = num_variables();
  const int m = num_potentials();
  scope_offsets_.assign(m + 1, 0);
  flat_scope_.clear();
  flat_strides_.clear();
  std::vector<std::size_t> degree(n, 0);
  for (int f = 0; f < m; ++f) {
    const auto& scope = potentials_[f].scope;
    std::vector<std::size_t> strides(scope.size());
    std::size_t stride = 1;
    for (std::size_t k = scope.size(); k-- > 0;) {
      strides[k] = stride;
      stride *= static_cast<std::size_t>(variables_[scope[k]].cardinality);
    }
    for (std::size_t k = 0; k < scope.size(); ++k) {
      flat_scope_.push_back(scope[k]);
      flat_strides_.push_back(strides[k]);
      ++degree[scope[k]];
    }
    scope_offsets_[f + 1] = flat_scope_.size();
  }
  incidence_offsets_.assign(n + 1, 0);
  for (int v = 0; v < n; ++v) incidence_offsets_[v + 1] = incidence_offsets_[v] + degree[v];
  incidence_.assign(incidence_offsets_[n], 0);
  incidence_strides_.assign(incidence_offsets_[n], 0);
  std::vector<std::size_t> cursor(incidence_offsets_.begin(), incidence_offsets_.end() - 1);
  for (int f = 0; f < m; ++f) {
    for (std::size_t k = scope_offsets_[f]; k < scope_offsets_[f + 1]; ++k) {
      const int v = flat_scope_[k];
      incidence_[cursor[v]] = f;
      incidence_strides_[cursor[v]] = flat_strides_[k];
      ++cursor[v];
    }
  }
}

std::vector<int> Model::cardinalities() const {
  std::vector<int> out(variables_.size());
  for (std::size_t v = 0; v < variables_.size(); ++v) out[v] = variables_[v].cardinality;
  return out;
}

Model Model::with_tables(std::vector<std::vector<double>> tables) const {
  if (tables.size() != potentials_.size()) {
    throw InvalidModelError("with_tables: table count mismatch");
  }
  std::vector<Potential> potentials = potentials_;
  for (std::size_t f = 0; f < tables.size(); ++f) {
    potentials[f].log_table = std::move(tables[f]);
  }
  return Model(variables_, std::move(potentials), template_);
}

void Model::check_state(std::span<const int> state) const {
  if (state.size() != variables_.size()) {
    throw InvalidStateError("state has " + std::to_string(state.size()) +
                            " values, model has " +
                            std::to_string(variables_.size()) + " variables");
  }
  for (std::size_t v = 0; v < state.size(); ++v) {
    if (state[v] < 0 || state[v] >= variables_[v].cardinality) {
      throw InvalidStateError("value " + std::to_string(state[v]) +
                              " out of range for variable " + std::to_string(v));
    }
  }
}

double Model::log_score(std::span<const int> state) const {
  check_state(state);
  double total = 0.0;
  for (int f = 0; f < num_potentials(); ++f) total += entry(f, state);
  return total;
}

double Model::delta_log_score(std::span<const int> state,
                              std::span<const Change> changes) const {
  check_state(state);
  if (changes.empty()) return 0.0;
  State after(state.begin(), state.end());
  std::vector<int> changed;
  std::vector<char> seen(variables_.size(), 0);
  for (const Change& c : changes) {
    if (c.var < 0 || c.var >= num_variables()) {
      throw InvalidStateError("change references unknown variable " +
                              std::to_string(c.var));
    }
    if (seen[c.var]) {
      throw InvalidStateError("change set repeats variable " +
                              std::to_string(c.var));
    }
    seen[c.var] = 1;
    if (c.value < 0 || c.value >= variables_[c.var].cardinality) {
      throw InvalidStateError("value " + std::to_string(c.value) +
                              " out of range for variable " +
                              std::to_string(c.var));
    }
    after[c.var] = c.value;
    changed.push_back(c.var);
  }
  DeltaScorer scorer(*this);
  return scorer.delta(state, after, changed);
}

void Model::conditional_log_weights(std::span<const int> state, int var,
                                    std::span<double> out) const {
  const int card = variables_[var].cardinality;
  std::fill(out.begin(), out.begin() + card, 0.0);
  const std::size_t current = static_cast<std::size_t>(state[var]);
  for (std::size_t k = incidence_offsets_[var]; k < incidence_offsets_[var + 1]; ++k) {
    const int f = incidence_[k];
    const std::size_t stride = incidence_strides_[k];
    std::size_t index = 0;
    for (std::size_t j = scope_offsets_[f]; j < scope_offsets_[f + 1]; ++j) {
      index += static_cast<std::size_t>(state[flat_scope_[j]]) * flat_strides_[j];
    }
    index -= current * stride;
    const double* table = potentials_[f].log_table.data();
    for (int a = 0; a < card; ++a) out[a] += table[index + a * stride];
  }
}

std::vector<double> Model::conditional_distribution(std::span<const int> state,
                                                    int var) const {
  if (var < 0 || var >= num_variables()) {
    throw InvalidStateError("unknown variable " + std::to_string(var));
  }
  check_state(state);
  std::vector<double> weights(variables_[var].cardinality);
  conditional_log_weights(state, var, weights);
  const double norm = log_sum_exp(weights);
  for (double& w : weights) w = std::exp(w - norm);
  return weights;
}

double Model::log2_state_count() const {
  double bits = 0.0;
  for (const Variable& v : variables_) bits += std::log2(v.cardinality);
  return bits;
}

DeltaScorer::DeltaScorer(const Model& model)
    : model_(&model), stamp_(model.num_potentials(), 0), skipped_(model.num_potentials(), 0) {
  skip_potentials({});
}

void DeltaScorer::skip_potentials(std::span<const int> potentials) {
  for (int f : potentials) skipped_.at(f) = 1;
  offsets_.assign(1, 0);
  incidence_.clear();
  for (int v = 0; v < model_->num_variables(); ++v) {
    for (int f : model_->potentials_of(v)) {
      if (!skipped_[f]) incidence_.push_back(f);
    }
    offsets_.push_back(incidence_.size());
  }
}

void DeltaScorer::collect_touched(std::span<const int> vars) {
  if (++epoch_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0);
    epoch_ = 1;
  }
  touched_.clear();
  for (int v : vars) {
    for (std::size_t i = offsets_[v]; i < offsets_[v + 1]; ++i) {
      const int f = incidence_[i];
      if (stamp_[f] == epoch_) continue;
      stamp_[f] = epoch_;
      touched_.push_back(f);
    }
  }
  last_touched_ = static_cast<int>(touched_.size());
}

double DeltaScorer::delta(std::span<const int> before, std::span<const int> after,
                          std::span<const int> changed_vars) {
  collect_touched(changed_vars);
  double total = 0.0;
  for (int f : touched_) total += model_->entry(f, after) - model_->entry(f, before);
  return total;
}

double DeltaScorer::swap_in(std::span<int> state, std::span<const int> vars,
                            std::span<int> values) {
  collect_touched(vars);
  double old_sum = 0.0;
  for (int f : touched_) old_sum += model_->entry(f, state);
  for (std::size_t i = 0; i < vars.size(); ++i) std::swap(state[vars[i]], values[i]);
  double new_sum = 0.0;
  for (int f : touched_) new_sum += model_->entry(f, state);
  return new_sum - old_sum;
}

namespace {

std::uint64_t checked_state_count(const Model& model, std::uint64_t max_states) {
  std::uint64_t count = 1;
  for (const Variable& v : model.variables()) {
    const auto card = static_cast<std::uint64_t>(v.cardinality);
    if (count > max_states / card) {
      throw std::length_error("state space exceeds the enumeration cap of " +
                              std::to_string(max_states) + " states");
    }
    count *= card;
  }
  return count;
}

// Visits every state in mixed-radix order, passing its log score.
template <typename Visit>
void for_each_state(const Model& model, std::uint64_t max_states, Visit&& visit) {
  const std::uint64_t count = checked_state_count(model, max_states);
  const int n = model.num_variables();
  State state(n, 0);
  for (std::uint64_t i = 0; i < count; ++i) {
    double score = 0.0;
    for (int f = 0; f < model.num_potentials(); ++f) score += model.entry(f, state);
    visit(state, score);
    for (int v = n - 1; v >= 0; --v) {
      if (++state[v] < model.cardinality(v)) break;
      state[v] = 0;
    }
  }
}

}  // namespace

std::vector<double> enumerate_joint(const Model& model, std::uint64_t max_states) {
  std::vector<double> scores;
  scores.reserve(checked_state_count(model, max_states));
  for_each_state(model, max_states,
                 [&](const State&, double score) { scores.push_back(score); });
  const double norm = log_sum_exp(scores);
  for (double& s : scores) s = std::exp(s - norm);
  return scores;
}

MarginalTable enumerate_exact_marginals(const Model& model, std::uint64_t max_states) {
  const int n = model.num_variables();
  // Two passes: the first finds the maximum score for stabilization.
  double top = -std::numeric_limits<double>::infinity();
  for_each_state(model, max_states,
                 [&](const State&, double score) { top = std::max(top, score); });
  MarginalTable table;
  table.probabilities.resize(n);
  for (int v = 0; v < n; ++v) table.probabilities[v].assign(model.cardinality(v), 0.0);
  double total = 0.0;
  for_each_state(model, max_states, [&](const State& state, double score) {
    const double w = std::exp(score - top);
    total += w;
    for (int v = 0; v < n; ++v) table.probabilities[v][state[v]] += w;
  });
  for (auto& row : table.probabilities) {
    for (double& p : row) p /= total;
  }
  return table;
}

State state_from_index(const Model& model, std::uint64_t index) {
  const int n = model.num_variables();
  State state(n, 0);
  for (int v = n - 1; v >= 0; --v) {
    const auto card = static_cast<std::uint64_t>(model.cardinality(v));
    state[v] = static_cast<int>(index % card);
    index /= card;
  }
  return state;
}

std::uint64_t index_from_state(const Model& model, std::span<const int> state) {
  std::uint64_t index = 0;
  for (int v = 0; v < model.num_variables(); ++v) {
    index = index * static_cast<std::uint64_t>(model.cardinality(v)) +
            static_cast<std::uint64_t>(state[v]);
  }
  return index;
}

std::vector<double> reorder_table(std::span<const double> table,
                                  std::span<const int> cards,
                                  std::span<const int> perm) {
  const std::size_t k = cards.size();
  std::vector<std::size_t> old_strides(k);
  std::size_t stride = 1;
  for (std::size_t i = k; i-- > 0;) {
    old_strides[i] = stride;
    stride *= static_cast<std::size_t>(cards[i]);
  }
  std::vector<double> out(table.size());
  std::vector<int> digits(k, 0);  // digits in the new order
  for (std::size_t index = 0; index < out.size(); ++index) {
    std::size_t old_index = 0;
    for (std::size_t i = 0; i < k; ++i) old_index += digits[i] * old_strides[perm[i]];
    out[index] = table[old_index];
    for (std::size_t i = k; i-- > 0;) {
      if (++digits[i] < cards[perm[i]]) break;
      digits[i] = 0;
    }
  }
  return out;
}

std::vector<int> scope_cards(const Model& model, std::span<const int> scope) {
  std::vector<int> cards;
  for (int v : scope) cards.push_back(model.cardinality(v));
  return cards;
}

FunctionKey function_key(const Model& model, std::vector<int> scope,
                         std::span<const double> table) {
  std::vector<int> perm(scope.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](int a, int b) { return scope[a] < scope[b]; });
  std::vector<double> reordered = reorder_table(table, scope_cards(model, scope), perm);
  std::sort(scope.begin(), scope.end());
  return {std::move(scope), std::move(reordered)};
}

}  // namespace lmh
