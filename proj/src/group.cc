#include "lmh/group.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <string>

namespace lmh {

Permutation::Permutation(std::vector<int> image) : image_(std::move(image)) {
  std::vector<char> hit(image_.size(), 0);
  for (int v : image_) {
    if (v < 0 || v >= degree() || hit[v]) {
      throw std::invalid_argument("image array is not a bijection");
    }
    hit[v] = 1;
  }
}

Permutation Permutation::identity(int degree) {
  std::vector<int> image(degree);
  std::iota(image.begin(), image.end(), 0);
  return Permutation(std::move(image));
}

Permutation Permutation::from_cycles(int degree,
                                     const std::vector<std::vector<int>>& cycles) {
  std::vector<int> image(degree);
  std::iota(image.begin(), image.end(), 0);
  std::vector<char> used(degree, 0);
  for (const auto& cycle : cycles) {
    for (std::size_t i = 0; i < cycle.size(); ++i) {
      const int v = cycle[i];
      if (v < 0 || v >= degree) {
        throw std::invalid_argument("cycle point " + std::to_string(v) +
                                    " outside degree " + std::to_string(degree));
      }
      if (used[v]) {
        throw std::invalid_argument("cycles are not disjoint at point " +
                                    std::to_string(v));
      }
      used[v] = 1;
      image[v] = cycle[(i + 1) % cycle.size()];
    }
  }
  return Permutation(std::move(image));
}

Permutation Permutation::inverse() const {
  std::vector<int> inv(image_.size());
  for (int v = 0; v < degree(); ++v) inv[image_[v]] = v;
  return Permutation(std::move(inv));
}

bool Permutation::is_identity() const {
  for (int v = 0; v < degree(); ++v) {
    if (image_[v] != v) return false;
  }
  return true;
}

std::vector<int> Permutation::support() const {
  std::vector<int> out;
  for (int v = 0; v < degree(); ++v) {
    if (image_[v] != v) out.push_back(v);
  }
  return out;
}

std::vector<std::vector<int>> Permutation::cycles() const {
  std::vector<std::vector<int>> out;
  std::vector<char> done(image_.size(), 0);
  for (int v = 0; v < degree(); ++v) {
    if (done[v] || image_[v] == v) continue;
    std::vector<int> cycle;
    for (int u = v; !done[u]; u = image_[u]) {
      done[u] = 1;
      cycle.push_back(u);
    }
    out.push_back(std::move(cycle));
  }
  return out;
}

Permutation compose(const Permutation& g, const Permutation& h) {
  if (g.degree() != h.degree()) {
    throw std::invalid_argument("compose: degree mismatch (" +
                                std::to_string(g.degree()) + " vs " +
                                std::to_string(h.degree()) + ")");
  }
  std::vector<int> image(g.degree());
  for (int v = 0; v < g.degree(); ++v) image[v] = g(h(v));
  return Permutation(std::move(image));
}

State apply_to_state(const Permutation& g, std::span<const int> state) {
  if (static_cast<int>(state.size()) != g.degree()) {
    throw std::invalid_argument("apply_to_state: degree does not match state size");
  }
  State out(state.size());
  for (int v = 0; v < g.degree(); ++v) out[g(v)] = state[v];
  return out;
}

void check_compatible(const Permutation& g, const Model& model) {
  if (g.degree() != model.num_variables()) {
    throw std::invalid_argument("permutation degree " + std::to_string(g.degree()) +
                                " does not match " +
                                std::to_string(model.num_variables()) + " variables");
  }
  for (int v = 0; v < g.degree(); ++v) {
    if (model.cardinality(v) != model.cardinality(g(v))) {
      throw InvalidModelError("permutation maps variable " + std::to_string(v) +
                              " onto variable " + std::to_string(g(v)) +
                              " of different cardinality");
    }
  }
}

namespace {

int find_root(std::vector<int>& parent, int v) {
  while (parent[v] != v) {
    parent[v] = parent[parent[v]];
    v = parent[v];
  }
  return v;
}

VariableOrbitPartition orbits_from_generators(int degree,
                                              const std::vector<Permutation>& gens) {
  std::vector<int> parent(degree);
  std::iota(parent.begin(), parent.end(), 0);
  for (const Permutation& g : gens) {
    for (int v = 0; v < degree; ++v) {
      const int a = find_root(parent, v);
      const int b = find_root(parent, g(v));
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  VariableOrbitPartition partition;
  partition.orbit_of.assign(degree, -1);
  std::vector<int> id_of_root(degree, -1);
  for (int v = 0; v < degree; ++v) {
    const int root = find_root(parent, v);
    if (id_of_root[root] < 0) {
      id_of_root[root] = partition.num_orbits();
      partition.orbits.emplace_back();
    }
    partition.orbit_of[v] = id_of_root[root];
    partition.orbits[id_of_root[root]].push_back(v);
  }
  return partition;
}

}  // namespace

PermutationGroup::PermutationGroup(int degree, std::vector<Permutation> generators)
    : degree_(degree), generators_(std::move(generators)) {
  if (generators_.empty()) generators_.push_back(Permutation::identity(degree));
  std::vector<char> moved(degree, 0);
  for (const Permutation& g : generators_) {
    if (g.degree() != degree) {
      throw std::invalid_argument("generator degree " + std::to_string(g.degree()) +
                                  " differs from group degree " +
                                  std::to_string(degree));
    }
    for (int v : g.support()) moved[v] = 1;
  }
  for (int v = 0; v < degree; ++v) {
    if (moved[v]) moved_.push_back(v);
  }
  orbits_ = orbits_from_generators(degree, generators_);
}

PermutationGroup PermutationGroup::symmetric(int degree, std::vector<int> points) {
  std::sort(points.begin(), points.end());
  if (std::adjacent_find(points.begin(), points.end()) != points.end()) {
    throw std::invalid_argument("symmetric group points must be distinct");
  }
  std::vector<Permutation> gens;
  if (points.size() >= 2) {
    gens.push_back(Permutation::from_cycles(degree, {{points[0], points[1]}}));
    if (points.size() >= 3) gens.push_back(Permutation::from_cycles(degree, {points}));
  }
  PermutationGroup group(degree, std::move(gens));
  if (points.size() >= 2) group.symmetric_points_ = std::move(points);
  return group;
}

PermutationGroup PermutationGroup::trivial(int degree) {
  return PermutationGroup(degree, {});
}

void PermutationGroup::check_compatible(const Model& model) const {
  if (degree_ != model.num_variables()) {
    throw std::invalid_argument("group degree " + std::to_string(degree_) +
                                " does not match " +
                                std::to_string(model.num_variables()) + " variables");
  }
  for (const Permutation& g : generators_) lmh::check_compatible(g, model);
}

VariableOrbitPartition variable_orbits(const PermutationGroup& group) {
  return group.orbits();
}

MovedSets moved_sets(const PermutationGroup& group, const Model& model) {
  if (group.degree() != model.num_variables()) {
    throw std::invalid_argument("moved_sets: group degree does not match model");
  }
  MovedSets out;
  out.variables = group.moved_variables();
  std::vector<char> hit(model.num_potentials(), 0);
  for (int v : out.variables) {
    for (int f : model.potentials_of(v)) hit[f] = 1;
  }
  for (int f = 0; f < model.num_potentials(); ++f) {
    if (hit[f]) out.potentials.push_back(f);
  }
  return out;
}

ElementSampler::ElementSampler(const PermutationGroup& group, Rng& rng)
    : degree_(group.degree()), support_(group.moved_variables()) {
  const int s = static_cast<int>(support_.size());
  accumulator_.resize(s);
  std::iota(accumulator_.begin(), accumulator_.end(), 0);
  scratch_.resize(s);
  product_.resize(s);
  if (group.is_symmetric_group()) {
    exact_uniform_ = true;
    for (int i = 2; i <= std::min(s, kMaxLehmerPoints); ++i) factorial_ *= static_cast<std::uint64_t>(i);
    return;
  }
  if (s == 0) return;
  std::vector<int> local_of(degree_, -1);
  for (int i = 0; i < s; ++i) local_of[support_[i]] = i;
  std::vector<std::vector<int>> gens;
  for (const Permutation& g : group.generators()) {
    std::vector<int> local(s);
    for (int i = 0; i < s; ++i) local[i] = local_of[g(support_[i])];
    gens.push_back(std::move(local));
  }
  if (enumerate(gens)) return;
  const int slots = std::max(kMinSlots, 2 * static_cast<int>(gens.size()));
  for (int i = 0; i < slots; ++i) slots_.push_back(gens[i % gens.size()]);
  for (int i = 0; i < kBurnInSteps; ++i) replacement_step(rng);
}

bool ElementSampler::enumerate(const std::vector<std::vector<int>>& gens) {
  const std::size_t s = support_.size();
  std::vector<int> identity(s);
  std::iota(identity.begin(), identity.end(), 0);
  std::set<std::vector<int>> seen{identity};
  std::vector<std::vector<int>> found{identity};
  const std::size_t cap =
      std::min<std::size_t>(kMaxStoredElements, kMaxStoredEntries / std::max<std::size_t>(s, 1));
  for (std::size_t next = 0; next < found.size(); ++next) {
    for (const std::vector<int>& g : gens) {
      std::vector<int> product(s);
      for (std::size_t k = 0; k < s; ++k) product[k] = g[found[next][k]];
      if (!seen.insert(product).second) continue;
      if (found.size() >= cap) return false;
      found.push_back(std::move(product));
    }
  }
  elements_ = std::move(found);
  return true;
}

void ElementSampler::replacement_step(Rng& rng) {
  const int r = static_cast<int>(slots_.size());
  const auto i = static_cast<int>(uniform_index(rng, r));
  auto j = static_cast<int>(uniform_index(rng, r - 1));
  if (j >= i) ++j;
  const bool invert = (rng() & 1) != 0;
  const bool left = (rng() & 1) != 0;
  std::vector<int>& target = slots_[i];
  const std::vector<int>& other = slots_[j];
  const int s = static_cast<int>(target.size());
  // factor = other or its inverse
  std::vector<int>& factor = scratch_;
  if (invert) {
    for (int k = 0; k < s; ++k) factor[other[k]] = k;
  } else {
    std::copy(other.begin(), other.end(), factor.begin());
  }
  std::vector<int>& result = product_;
  if (left) {
    for (int k = 0; k < s; ++k) result[k] = factor[target[k]];
  } else {
    for (int k = 0; k < s; ++k) result[k] = target[factor[k]];
  }
  target.swap(result);
  // Rattle: accumulate the refreshed slot.
  for (int k = 0; k < s; ++k) result[k] = accumulator_[target[k]];
  accumulator_.swap(result);
}

std::span<const int> ElementSampler::draw_local(Rng& rng) {
  if (support_.empty()) return accumulator_;
  if (exact_uniform_) {
    std::iota(accumulator_.begin(), accumulator_.end(), 0);
    const std::size_t s = accumulator_.size();
    if (s <= kMaxLehmerPoints) {
      // One draw from [0, s!) read as mixed-radix digits drives Fisher-Yates.
      std::uint64_t r = uniform_index(rng, factorial_);
      for (std::size_t i = s; i > 1; --i) {
        std::swap(accumulator_[i - 1], accumulator_[r % i]);
        r /= i;
      }
    } else {
      shuffle(std::span<int>(accumulator_), rng);
    }
    return accumulator_;
  }
  if (!elements_.empty()) return elements_[uniform_index(rng, elements_.size())];
  replacement_step(rng);
  return accumulator_;
}

Permutation ElementSampler::random_element(Rng& rng) {
  const std::span<const int> local = draw_local(rng);
  std::vector<int> image(degree_);
  std::iota(image.begin(), image.end(), 0);
  for (std::size_t i = 0; i < local.size(); ++i) image[support_[i]] = support_[local[i]];
  return Permutation(std::move(image));
}

std::vector<int> delta_invariant_potentials(const PermutationGroup& group, const Model& model) {
  const int n = model.num_potentials();
  std::vector<FunctionKey> keys;
  keys.reserve(n);
  for (const Potential& p : model.potentials()) keys.push_back(function_key(model, p.scope, p.log_table));
  std::vector<std::vector<FunctionKey>> images;
  for (const Permutation& g : group.generators()) {
    std::vector<FunctionKey> row;
    row.reserve(n);
    for (const Potential& p : model.potentials()) {
      std::vector<int> scope;
      for (int v : p.scope) scope.push_back(g(v));
      row.push_back(function_key(model, std::move(scope), p.log_table));
    }
    images.push_back(std::move(row));
  }
  std::vector<char> kept(n, 1);
  // Drop potentials whose image class has the wrong multiplicity until every
  // generator permutes the kept multiset.
  for (bool changed = true; changed;) {
    changed = false;
    std::map<FunctionKey, int> count;
    for (int f = 0; f < n; ++f) {
      if (kept[f]) ++count[keys[f]];
    }
    std::vector<int> drop;
    for (const std::vector<FunctionKey>& row : images) {
      for (int f = 0; f < n; ++f) {
        if (!kept[f]) continue;
        const auto it = count.find(row[f]);
        if (it == count.end() || it->second != count[keys[f]]) drop.push_back(f);
      }
    }
    for (int f : drop) {
      if (kept[f]) {
        kept[f] = 0;
        changed = true;
      }
    }
  }
  std::vector<int> out;
  for (int f = 0; f < n; ++f) {
    if (kept[f]) out.push_back(f);
  }
  return out;
}

}  // namespace lmh
