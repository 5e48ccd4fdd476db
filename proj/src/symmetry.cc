#include "lmh/symmetry.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "lmh/random.h"

namespace lmh {

namespace {

// Table up to reordering of the scope: lexicographically smallest reordering
// for small scopes, else the sorted entries. Prefixed with the scope size.
std::vector<double> shape_free_signature(const Model& model, const Potential& p) {
  std::vector<double> key{static_cast<double>(p.scope.size())};
  const std::vector<int> cards = scope_cards(model, p.scope);
  if (p.scope.size() <= 6) {
    std::vector<int> perm(p.scope.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<double> best;
    do {
      std::vector<int> permuted_cards;
      for (int i : perm) permuted_cards.push_back(cards[i]);
      std::vector<double> candidate(permuted_cards.begin(), permuted_cards.end());
      const auto table = reorder_table(p.log_table, cards, perm);
      candidate.insert(candidate.end(), table.begin(), table.end());
      if (best.empty() || candidate < best) best = std::move(candidate);
    } while (std::next_permutation(perm.begin(), perm.end()));
    key.insert(key.end(), best.begin(), best.end());
  } else {
    std::vector<int> sorted_cards = cards;
    std::sort(sorted_cards.begin(), sorted_cards.end());
    key.insert(key.end(), sorted_cards.begin(), sorted_cards.end());
    std::vector<double> sorted_table = p.log_table;
    std::sort(sorted_table.begin(), sorted_table.end());
    key.insert(key.end(), sorted_table.begin(), sorted_table.end());
  }
  return key;
}

template <typename Key>
std::vector<int> name_colors(const std::vector<std::vector<Key>>& keys_per_coloring,
                             std::vector<std::vector<int>*> outputs) {
  std::map<Key, int> names;
  for (const auto& keys : keys_per_coloring) {
    for (const Key& k : keys) names.emplace(k, 0);
  }
  int next = 0;
  for (auto& [key, id] : names) id = next++;
  for (std::size_t c = 0; c < keys_per_coloring.size(); ++c) {
    auto& out = *outputs[c];
    out.resize(keys_per_coloring[c].size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = names[keys_per_coloring[c][i]];
  }
  return {};
}

int count_distinct(const std::vector<int>& colors) {
  std::vector<int> sorted = colors;
  std::sort(sorted.begin(), sorted.end());
  return static_cast<int>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

struct Coloring {
  std::vector<int> vars;
  std::vector<int> pots;
};

// Refines several colorings of one model in lock step, naming colors from a
// shared signature table so that colors are comparable across colorings.
// Returns the number of rounds that changed some coloring.
int refine_lockstep(const Model& model, std::vector<Coloring*> colorings,
                    std::optional<int> max_rounds, bool* stable) {
  int rounds = 0;
  *stable = false;
  while (!max_rounds || rounds < *max_rounds) {
    std::vector<std::vector<std::vector<int>>> pot_keys(colorings.size());
    std::vector<std::vector<int>*> pot_out;
    std::vector<Coloring> next(colorings.size());
    for (std::size_t c = 0; c < colorings.size(); ++c) {
      const Coloring& col = *colorings[c];
      for (int f = 0; f < model.num_potentials(); ++f) {
        std::vector<int> key;
        for (int v : model.potentials()[f].scope) key.push_back(col.vars[v]);
        std::sort(key.begin(), key.end());
        key.insert(key.begin(), col.pots[f]);
        pot_keys[c].push_back(std::move(key));
      }
      pot_out.push_back(&next[c].pots);
    }
    name_colors(pot_keys, pot_out);
    std::vector<std::vector<std::vector<int>>> var_keys(colorings.size());
    std::vector<std::vector<int>*> var_out;
    for (std::size_t c = 0; c < colorings.size(); ++c) {
      for (int v = 0; v < model.num_variables(); ++v) {
        std::vector<int> key;
        for (int f : model.potentials_of(v)) key.push_back(next[c].pots[f]);
        std::sort(key.begin(), key.end());
        key.insert(key.begin(), colorings[c]->vars[v]);
        var_keys[c].push_back(std::move(key));
      }
      var_out.push_back(&next[c].vars);
    }
    name_colors(var_keys, var_out);
    bool changed = false;
    for (std::size_t c = 0; c < colorings.size(); ++c) {
      if (count_distinct(next[c].vars) != count_distinct(colorings[c]->vars) ||
          count_distinct(next[c].pots) != count_distinct(colorings[c]->pots)) {
        changed = true;
      }
    }
    if (!changed) {
      *stable = true;
      break;
    }
    for (std::size_t c = 0; c < colorings.size(); ++c) *colorings[c] = std::move(next[c]);
    ++rounds;
  }
  return rounds;
}

Coloring initial_coloring(const Model& model) {
  Coloring col;
  std::vector<std::vector<std::vector<double>>> pot_keys(1);
  for (const Potential& p : model.potentials()) {
    pot_keys[0].push_back(shape_free_signature(model, p));
  }
  name_colors(pot_keys, {&col.pots});
  std::vector<std::vector<std::vector<int>>> var_keys(1);
  for (int v = 0; v < model.num_variables(); ++v) {
    std::vector<int> key;
    for (int f : model.potentials_of(v)) key.push_back(col.pots[f]);
    std::sort(key.begin(), key.end());
    key.insert(key.begin(), model.cardinality(v));
    var_keys[0].push_back(std::move(key));
  }
  name_colors(var_keys, {&col.vars});
  return col;
}

}  // namespace

int ColorPartition::num_variable_colors() const { return count_distinct(variable_colors); }
int ColorPartition::num_potential_colors() const { return count_distinct(potential_colors); }

ColorPartition color_refinement(const Model& model, std::optional<int> max_iterations) {
  Coloring col = initial_coloring(model);
  ColorPartition out;
  out.iterations = refine_lockstep(model, {&col}, max_iterations, &out.stable);
  out.variable_colors = std::move(col.vars);
  out.potential_colors = std::move(col.pots);
  return out;
}

// ---------------------------------------------------------------------------
// Over-symmetric approximations

Model OSAModel::restore() const {
  std::vector<std::vector<double>> tables;
  for (const Potential& p : model.potentials()) tables.push_back(p.log_table);
  for (const WeightReplacement& r : provenance) tables[r.potential] = r.original;
  return model.with_tables(std::move(tables));
}

namespace {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += (a[i] - b[i]) * (a[i] - b[i]);
  return total;
}

struct KMeansResult {
  std::vector<int> assignment;
  std::vector<std::vector<double>> centroids;
  double inertia = 0.0;
};

KMeansResult kmeans(const std::vector<std::vector<double>>& points, int k, Rng& rng) {
  const std::size_t n = points.size();
  KMeansResult res;
  res.centroids.push_back(points[uniform_index(rng, n)]);
  std::vector<double> d2(n);
  while (static_cast<int>(res.centroids.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : res.centroids) best = std::min(best, squared_distance(points[i], c));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) break;
    double u = uniform01(rng) * total;
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (u < d2[i]) {
        pick = i;
        break;
      }
      u -= d2[i];
    }
    res.centroids.push_back(points[pick]);
  }
  res.assignment.assign(n, -1);
  for (int iter = 0; iter < kClusterMaxIterations; ++iter) {
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < res.centroids.size(); ++c) {
        const double d = squared_distance(points[i], res.centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      if (res.assignment[i] != best) {
        res.assignment[i] = best;
        moved = true;
      }
    }
    if (!moved) break;
    for (std::size_t c = 0; c < res.centroids.size(); ++c) {
      std::vector<double> sum(points[0].size(), 0.0);
      int count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (res.assignment[i] != static_cast<int>(c)) continue;
        for (std::size_t d = 0; d < sum.size(); ++d) sum[d] += points[i][d];
        ++count;
      }
      if (count == 0) continue;
      for (double& s : sum) s /= count;
      res.centroids[c] = std::move(sum);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    res.inertia += squared_distance(points[i], res.centroids[res.assignment[i]]);
  }
  return res;
}

constexpr int kClusterRestarts = 8;

}  // namespace

OSAModel cluster_weights(const Model& model, int clusters, std::uint64_t seed) {
  if (clusters < 1) throw std::invalid_argument("cluster count must be >= 1");
  // Shape = cardinalities along the scope; only equal shapes can share tables.
  std::map<std::vector<int>, std::vector<int>> by_shape;
  for (const Potential& p : model.potentials()) {
    by_shape[scope_cards(model, p.scope)].push_back(p.id);
  }
  Rng rng(seed);
  std::vector<std::vector<double>> tables;
  for (const Potential& p : model.potentials()) tables.push_back(p.log_table);
  OSAModel osa;
  osa.clusters = clusters;
  osa.method = "cluster";
  int cluster_offset = 0;
  for (const auto& [shape, members] : by_shape) {
    std::map<std::vector<double>, int> point_index;
    std::vector<std::vector<double>> points;
    for (int f : members) {
      if (point_index.emplace(model.potentials()[f].log_table, points.size()).second) {
        points.push_back(model.potentials()[f].log_table);
      }
    }
    if (static_cast<int>(points.size()) <= clusters) {
      cluster_offset += static_cast<int>(points.size());
      continue;
    }
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < kClusterRestarts; ++restart) {
      KMeansResult run = kmeans(points, clusters, rng);
      if (run.inertia < best.inertia) best = std::move(run);
    }
    for (int f : members) {
      const int point = point_index[model.potentials()[f].log_table];
      const int cluster = best.assignment[point];
      const std::vector<double>& centroid = best.centroids[cluster];
      if (centroid == tables[f]) continue;
      osa.provenance.push_back({f, cluster_offset + cluster, tables[f], centroid});
      tables[f] = centroid;
    }
    cluster_offset += static_cast<int>(best.centroids.size());
  }
  osa.model = model.with_tables(std::move(tables));
  return osa;
}

OSAModel zero_unary_tables(const Model& model) {
  std::vector<std::vector<double>> tables;
  OSAModel osa;
  osa.method = "zero-unary";
  for (const Potential& p : model.potentials()) {
    tables.push_back(p.log_table);
    if (p.scope.size() != 1) continue;
    std::vector<double> zeros(p.log_table.size(), 0.0);
    if (zeros != p.log_table) {
      osa.provenance.push_back({p.id, 0, p.log_table, zeros});
      tables.back() = std::move(zeros);
    }
  }
  osa.model = model.with_tables(std::move(tables));
  return osa;
}

// ---------------------------------------------------------------------------
// Exact automorphisms

namespace {

std::map<FunctionKey, int> function_multiset(const Model& model,
                                             const Permutation* mapping) {
  std::map<FunctionKey, int> out;
  for (const Potential& p : model.potentials()) {
    std::vector<int> scope = p.scope;
    if (mapping != nullptr) {
      for (int& v : scope) v = (*mapping)(v);
    }
    ++out[function_key(model, std::move(scope), p.log_table)];
  }
  return out;
}

}  // namespace

bool is_automorphism(const Model& model, const Permutation& g) {
  if (g.degree() != model.num_variables()) return false;
  for (int v = 0; v < g.degree(); ++v) {
    if (model.cardinality(v) != model.cardinality(g(v))) return false;
  }
  return function_multiset(model, nullptr) == function_multiset(model, &g);
}

std::vector<Permutation> template_generators(const SymmetryTemplate& tmpl, int degree) {
  std::vector<Permutation> gens;
  auto push = [&](std::vector<int> image) {
    Permutation p(std::move(image));
    if (!p.is_identity()) gens.push_back(std::move(p));
  };
  if (tmpl.kind == SymmetryTemplate::Kind::kGrid) {
    const int rows = tmpl.rows;
    const int cols = tmpl.cols;
    if (rows * cols != degree) {
      throw std::invalid_argument("grid template does not match the variable count");
    }
    auto at = [cols](int r, int c) { return r * cols + c; };
    std::vector<int> image(degree);
    if (rows == cols) {
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) image[at(r, c)] = at(c, rows - 1 - r);
      }
      push(image);
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) image[at(r, c)] = at(r, cols - 1 - c);
      }
      push(image);
    } else {
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) image[at(r, c)] = at(r, cols - 1 - c);
      }
      push(image);
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) image[at(r, c)] = at(rows - 1 - r, c);
      }
      push(image);
    }
    return gens;
  }
  // Chimera: cell (r, c) holds variables 8 * (r * cols + c) + k; k < 4 is the
  // left shore (vertical couplers), k >= 4 the right shore (horizontal).
  const int rows = tmpl.rows;
  const int cols = tmpl.cols;
  if (8 * rows * cols != degree) {
    throw std::invalid_argument("Chimera template does not match the variable count");
  }
  auto var = [cols](int r, int c, int k) { return 8 * (r * cols + c) + k; };
  auto per_index = [&](auto&& map_k) {
    std::vector<int> image(degree);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        for (int k = 0; k < 8; ++k) image[var(r, c, k)] = var(r, c, map_k(k));
      }
    }
    push(std::move(image));
  };
  per_index([](int k) { return k == 0 ? 1 : k == 1 ? 0 : k; });
  per_index([](int k) { return k < 4 ? (k + 1) % 4 : k; });
  per_index([](int k) { return k == 4 ? 5 : k == 5 ? 4 : k; });
  per_index([](int k) { return k >= 4 ? 4 + (k - 3) % 4 : k; });
  auto per_cell = [&](auto&& map_cell) {
    std::vector<int> image(degree);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        for (int k = 0; k < 8; ++k) {
          const auto [r2, c2, k2] = map_cell(r, c, k);
          image[var(r, c, k)] = var(r2, c2, k2);
        }
      }
    }
    push(std::move(image));
  };
  per_cell([&](int r, int c, int k) { return std::tuple{rows - 1 - r, c, k}; });
  per_cell([&](int r, int c, int k) { return std::tuple{r, cols - 1 - c, k}; });
  if (rows == cols) {
    per_cell([](int r, int c, int k) { return std::tuple{c, r, k < 4 ? k + 4 : k - 4}; });
  }
  return gens;
}

namespace {

class AutomorphismSearch {
 public:
  explicit AutomorphismSearch(const Model& model) : model_(model) {
    const int n = model.num_variables();
    for (const Potential& p : model.potentials()) {
      FunctionKey key = function_key(model, p.scope, p.log_table);
      tables_by_scope_[key.first].push_back(std::move(key.second));
    }
    neighbors_.resize(n);
    for (const Potential& p : model.potentials()) {
      for (int a : p.scope) {
        for (int b : p.scope) {
          if (a != b) neighbors_[a].push_back(b);
        }
      }
    }
    for (auto& adj : neighbors_) {
      std::sort(adj.begin(), adj.end());
      adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    }
    // Base order: breadth-first over the interaction graph, so that every new
    // point is adjacent to earlier ones whenever possible.
    std::vector<char> seen(n, 0);
    for (int start = 0; start < n; ++start) {
      if (seen[start]) continue;
      seen[start] = 1;
      std::size_t head = order_.size();
      order_.push_back(start);
      while (head < order_.size()) {
        const int u = order_[head++];
        for (int w : neighbors_[u]) {
          if (!seen[w]) {
            seen[w] = 1;
            order_.push_back(w);
          }
        }
      }
    }
    base_ = initial_coloring(model);
    bool stable = false;
    refine_lockstep(model_, {&base_}, std::nullopt, &stable);
  }

  std::vector<Permutation> run() {
    const int n = model_.num_variables();
    std::vector<Permutation> gens;
    for (int level = n - 1; level >= 0; --level) {
      const int b = order_[level];
      const std::vector<int> fixed(order_.begin(), order_.begin() + level);
      Coloring stab = individualize(base_, fixed, -1, -1);
      bool stable = false;
      refine_lockstep(model_, {&stab}, std::nullopt, &stable);
      std::vector<int> candidates;
      for (int c = 0; c < n; ++c) {
        if (c != b && stab.vars[c] == stab.vars[b]) candidates.push_back(c);
      }
      if (candidates.empty()) continue;
      // Orbit of b under generators found so far; those fix `fixed`.
      std::vector<char> in_orbit = orbit_mask(gens, b);
      for (int c : candidates) {
        if (in_orbit[c]) continue;
        std::optional<Permutation> found = find_mapping(fixed, b, c);
        if (!found) continue;
        gens.push_back(std::move(*found));
        in_orbit = orbit_mask(gens, b);
      }
    }
    return gens;
  }

 private:
  Coloring individualize(const Coloring& base, const std::vector<int>& fixed, int last_src,
                         int last_dst) const {
    Coloring col = base;
    const int offset = model_.num_variables() + model_.num_potentials() + 1;
    for (std::size_t i = 0; i < fixed.size(); ++i) col.vars[fixed[i]] = offset + static_cast<int>(i);
    if (last_src >= 0) col.vars[last_src] = offset + static_cast<int>(fixed.size());
    (void)last_dst;
    return col;
  }

  std::vector<char> orbit_mask(const std::vector<Permutation>& gens, int point) const {
    std::vector<char> mask(model_.num_variables(), 0);
    std::vector<int> queue{point};
    mask[point] = 1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      for (const Permutation& g : gens) {
        const int w = g(queue[head]);
        if (!mask[w]) {
          mask[w] = 1;
          queue.push_back(w);
        }
      }
    }
    return mask;
  }

  std::optional<Permutation> find_mapping(const std::vector<int>& fixed, int b, int c) {
    Coloring src = individualize(base_, fixed, b, -1);
    Coloring dst = individualize(base_, fixed, c, -1);
    bool stable = false;
    refine_lockstep(model_, {&src, &dst}, std::nullopt, &stable);
    std::vector<int> hs = src.vars, hd = dst.vars;
    std::sort(hs.begin(), hs.end());
    std::sort(hd.begin(), hd.end());
    if (hs != hd) return std::nullopt;
    std::vector<int> ps = src.pots, pd = dst.pots;
    std::sort(ps.begin(), ps.end());
    std::sort(pd.begin(), pd.end());
    if (ps != pd) return std::nullopt;

    const int n = model_.num_variables();
    src_colors_ = std::move(src.vars);
    dst_by_color_.clear();
    for (int w = 0; w < n; ++w) dst_by_color_[dst.vars[w]].push_back(w);
    image_.assign(n, -1);
    used_.assign(n, 0);
    if (!extend(0)) return std::nullopt;
    Permutation candidate(image_);
    if (!is_automorphism(model_, candidate)) return std::nullopt;
    return candidate;
  }

  bool extend(std::size_t depth) {
    if (depth == order_.size()) {
      return is_automorphism(model_, Permutation(image_));
    }
    const int u = order_[depth];
    const auto it = dst_by_color_.find(src_colors_[u]);
    if (it == dst_by_color_.end()) return false;
    for (int w : it->second) {
      if (used_[w]) continue;
      image_[u] = w;
      used_[w] = 1;
      if (consistent(u) && extend(depth + 1)) return true;
      used_[w] = 0;
      image_[u] = -1;
    }
    return false;
  }

  // Every potential whose scope is fully mapped has a matching image.
  bool consistent(int u) const {
    for (int f : model_.potentials_of(u)) {
      const Potential& p = model_.potentials()[f];
      std::vector<int> scope;
      bool complete = true;
      for (int v : p.scope) {
        if (image_[v] < 0) {
          complete = false;
          break;
        }
        scope.push_back(image_[v]);
      }
      if (!complete) continue;
      const FunctionKey key = function_key(model_, std::move(scope), p.log_table);
      const auto hit = tables_by_scope_.find(key.first);
      if (hit == tables_by_scope_.end()) return false;
      if (std::find(hit->second.begin(), hit->second.end(), key.second) == hit->second.end()) {
        return false;
      }
    }
    return true;
  }

  const Model& model_;
  std::map<std::vector<int>, std::vector<std::vector<double>>> tables_by_scope_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<int> order_;
  Coloring base_;
  std::vector<int> src_colors_;
  std::map<int, std::vector<int>> dst_by_color_;
  std::vector<int> image_;
  std::vector<char> used_;
};

}  // namespace

PermutationGroup exact_automorphisms(const Model& model, AutomorphismMode mode) {
  const int n = model.num_variables();
  if (mode == AutomorphismMode::kTemplate) {
    if (!model.symmetry_template()) {
      throw std::invalid_argument("template mode needs a model with a symmetry template");
    }
    std::vector<Permutation> gens;
    for (Permutation& g : template_generators(*model.symmetry_template(), n)) {
      if (is_automorphism(model, g)) gens.push_back(std::move(g));
    }
    return PermutationGroup(n, std::move(gens));
  }
  if (n > kSearchVariableCap) {
    throw SearchCapError("automorphism search is capped at " +
                         std::to_string(kSearchVariableCap) + " variables; model has " +
                         std::to_string(n));
  }
  AutomorphismSearch search(model);
  return PermutationGroup(n, search.run());
}

// ---------------------------------------------------------------------------
// Subgroup heuristic

void HeuristicConfig::validate() const {
  if (max_moved_potentials < 1) {
    throw std::invalid_argument("heuristic bound K must be >= 1");
  }
}

namespace {

bool table_invariant(const Model& model, const Potential& p, const std::vector<int>& perm) {
  return reorder_table(p.log_table, scope_cards(model, p.scope), perm) == p.log_table;
}

}  // namespace

int potentials_moved_by_symmetric_group(const Model& model, std::span<const int> points) {
  if (points.size() < 2) return 0;
  std::vector<char> in_set(model.num_variables(), 0);
  for (int v : points) in_set[v] = 1;
  std::vector<int> touched;
  for (int v : points) {
    for (int f : model.potentials_of(v)) touched.push_back(f);
  }
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  int moved = 0;
  for (int f : touched) {
    const Potential& p = model.potentials()[f];
    std::vector<int> positions;
    for (std::size_t k = 0; k < p.scope.size(); ++k) {
      if (in_set[p.scope[k]]) positions.push_back(static_cast<int>(k));
    }
    if (positions.size() < points.size()) {
      ++moved;
      continue;
    }
    // All points lie in the scope: fixed iff the table is symmetric in them.
    // A transposition and a full cycle of the positions generate Sym.
    std::vector<int> swap(p.scope.size());
    std::iota(swap.begin(), swap.end(), 0);
    std::swap(swap[positions[0]], swap[positions[1]]);
    std::vector<int> cycle(p.scope.size());
    std::iota(cycle.begin(), cycle.end(), 0);
    for (std::size_t i = 0; i < positions.size(); ++i) {
      cycle[positions[i]] = positions[(i + 1) % positions.size()];
    }
    if (!table_invariant(model, p, swap) || !table_invariant(model, p, cycle)) ++moved;
  }
  return moved;
}

std::vector<PermutationGroup> subgroup_heuristic(const VariableOrbitPartition& orbits,
                                                 const Model& model,
                                                 const HeuristicConfig& config) {
  config.validate();
  const int n = model.num_variables();
  if (static_cast<int>(orbits.orbit_of.size()) != n) {
    throw std::invalid_argument("orbit partition does not match the model");
  }
  const int bound = config.max_moved_potentials;
  std::vector<PermutationGroup> out;
  auto shared_count = [&](int u, int v) {
    const auto a = model.potentials_of(u);
    const auto b = model.potentials_of(v);
    int shared = 0;
    for (int f : a) shared += std::find(b.begin(), b.end(), f) != b.end();
    return shared;
  };
  for (const std::vector<int>& orbit : orbits.orbits) {
    // Sym(O') needs equal cardinalities; split the orbit accordingly.
    std::map<int, std::vector<int>> by_card;
    for (int v : orbit) by_card[model.cardinality(v)].push_back(v);
    for (auto& [card, remaining] : by_card) {
      while (remaining.size() >= 2) {
        int best_u = -1, best_v = -1, best_shared = -1, best_moved = 0;
        for (std::size_t i = 0; i < remaining.size(); ++i) {
          for (std::size_t j = i + 1; j < remaining.size(); ++j) {
            const int pair[2] = {remaining[i], remaining[j]};
            const int moved = potentials_moved_by_symmetric_group(model, pair);
            if (moved > bound) continue;
            const int shared = shared_count(pair[0], pair[1]);
            if (shared > best_shared || (shared == best_shared && moved < best_moved)) {
              best_u = pair[0];
              best_v = pair[1];
              best_shared = shared;
              best_moved = moved;
            }
          }
        }
        if (best_u < 0) break;
        std::vector<int> chosen{best_u, best_v};
        int chosen_moved = best_moved;
        while (true) {
          int pick = -1;
          int pick_moved = std::numeric_limits<int>::max();
          for (int w : remaining) {
            if (std::find(chosen.begin(), chosen.end(), w) != chosen.end()) continue;
            chosen.push_back(w);
            const int moved = potentials_moved_by_symmetric_group(model, chosen);
            chosen.pop_back();
            if (moved <= bound && moved < pick_moved) {
              pick = w;
              pick_moved = moved;
            }
          }
          if (pick < 0) break;
          const auto size = static_cast<long>(chosen.size());
          // Stop when |O'| / moved would strictly decrease.
          if ((size + 1) * chosen_moved < size * pick_moved) break;
          chosen.push_back(pick);
          chosen_moved = pick_moved;
        }
        std::vector<int> rest;
        for (int v : remaining) {
          if (std::find(chosen.begin(), chosen.end(), v) == chosen.end()) rest.push_back(v);
        }
        remaining = std::move(rest);
        out.push_back(PermutationGroup::symmetric(n, std::move(chosen)));
      }
    }
  }
  return out;
}

}  // namespace lmh
