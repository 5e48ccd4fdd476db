#include "oracles.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>
#include <stdexcept>

namespace lmh::oracle {

double log_score(const Model& model, const std::vector<int>& state) {
  double total = 0.0;
  for (const Potential& p : model.potentials()) {
    std::size_t index = 0;
    for (int v : p.scope) index = index * model.variables()[v].cardinality + state[v];
    total += p.log_table[index];
  }
  return total;
}

std::vector<int> decode(const Model& model, std::uint64_t index) {
  const int n = model.num_variables();
  std::vector<int> state(n);
  for (int v = n - 1; v >= 0; --v) {
    const auto card = static_cast<std::uint64_t>(model.variables()[v].cardinality);
    state[v] = static_cast<int>(index % card);
    index /= card;
  }
  return state;
}

std::uint64_t encode(const Model& model, const std::vector<int>& state) {
  std::uint64_t index = 0;
  for (int v = 0; v < model.num_variables(); ++v) {
    index = index * model.variables()[v].cardinality + state[v];
  }
  return index;
}

std::vector<double> joint(const Model& model) {
  std::uint64_t count = 1;
  for (const Variable& v : model.variables()) count *= v.cardinality;
  if (count > (1u << 22)) throw std::length_error("oracle joint too large");
  std::vector<double> logs(count);
  for (std::uint64_t i = 0; i < count; ++i) logs[i] = log_score(model, decode(model, i));
  const double top = *std::max_element(logs.begin(), logs.end());
  std::vector<double> p(count);
  double z = 0.0;
  for (std::uint64_t i = 0; i < count; ++i) z += p[i] = std::exp(logs[i] - top);
  for (double& x : p) x /= z;
  return p;
}

std::vector<std::vector<double>> marginals(const Model& model) {
  const std::vector<double> p = joint(model);
  std::vector<std::vector<double>> out;
  for (const Variable& v : model.variables()) out.emplace_back(v.cardinality, 0.0);
  for (std::uint64_t i = 0; i < p.size(); ++i) {
    const std::vector<int> x = decode(model, i);
    for (int v = 0; v < model.num_variables(); ++v) out[v][x[v]] += p[i];
  }
  return out;
}

std::vector<std::vector<int>> closure(const std::vector<std::vector<int>>& generators,
                                      int degree) {
  std::vector<int> identity(degree);
  std::iota(identity.begin(), identity.end(), 0);
  std::set<std::vector<int>> seen{identity};
  std::deque<std::vector<int>> queue{identity};
  while (!queue.empty()) {
    const std::vector<int> e = queue.front();
    queue.pop_front();
    for (const std::vector<int>& g : generators) {
      std::vector<int> product(degree);
      for (int v = 0; v < degree; ++v) product[v] = g[e[v]];
      if (seen.insert(product).second) queue.push_back(product);
    }
  }
  return {seen.begin(), seen.end()};
}

std::vector<std::vector<int>> closure(const PermutationGroup& group) {
  std::vector<std::vector<int>> gens;
  for (const Permutation& g : group.generators()) gens.push_back(g.image());
  return closure(gens, group.degree());
}

std::vector<int> act(const std::vector<int>& g, const std::vector<int>& x) {
  std::vector<int> y(x.size());
  for (std::size_t v = 0; v < x.size(); ++v) y[g[v]] = x[v];
  return y;
}

std::vector<std::vector<int>> point_orbits(const std::vector<std::vector<int>>& elements,
                                           int degree) {
  std::vector<std::vector<int>> out;
  std::vector<bool> done(degree, false);
  for (int v = 0; v < degree; ++v) {
    if (done[v]) continue;
    std::set<int> orbit;
    for (const std::vector<int>& g : elements) orbit.insert(g[v]);
    for (int w : orbit) done[w] = true;
    out.emplace_back(orbit.begin(), orbit.end());
  }
  return out;
}

KernelMatrix gibbs_matrix(const Model& model, const std::vector<double>& pi) {
  const int n = model.num_variables();
  KernelMatrix p(pi.size());
  for (std::uint64_t i = 0; i < pi.size(); ++i) {
    const std::vector<int> x = decode(model, i);
    for (int v = 0; v < n; ++v) {
      const int card = model.variables()[v].cardinality;
      std::vector<std::uint64_t> targets;
      double mass = 0.0;
      for (int a = 0; a < card; ++a) {
        std::vector<int> y = x;
        y[v] = a;
        targets.push_back(encode(model, y));
        mass += pi[targets.back()];
      }
      for (std::uint64_t t : targets) p[i][t] += pi[t] / mass / n;
    }
  }
  return p;
}

KernelMatrix orbital_matrix(const Model& model, const std::vector<double>& pi,
                            const std::vector<std::vector<int>>& elements) {
  KernelMatrix p(pi.size());
  const double share = 1.0 / static_cast<double>(elements.size());
  for (std::uint64_t i = 0; i < pi.size(); ++i) {
    const std::vector<int> x = decode(model, i);
    for (const std::vector<int>& g : elements) {
      const std::uint64_t j = encode(model, act(g, x));
      const double accept = std::min(1.0, pi[j] / pi[i]);
      p[i][j] += share * accept;
      p[i][i] += share * (1.0 - accept);
    }
  }
  return p;
}

KernelMatrix mixture_matrix(double alpha, const KernelMatrix& gibbs,
                            const std::vector<KernelMatrix>& orbitals,
                            const std::vector<double>& weights) {
  KernelMatrix p(gibbs.size());
  for (std::size_t i = 0; i < gibbs.size(); ++i) {
    for (const auto& [j, v] : gibbs[i]) p[i][j] += alpha * v;
    for (std::size_t k = 0; k < orbitals.size(); ++k) {
      for (const auto& [j, v] : orbitals[k][i]) p[i][j] += (1.0 - alpha) * weights[k] * v;
    }
  }
  return p;
}

double stationarity_error(const KernelMatrix& p, const std::vector<double>& pi) {
  std::vector<double> next(pi.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (const auto& [j, v] : p[i]) next[j] += pi[i] * v;
  }
  double worst = 0.0;
  for (std::size_t j = 0; j < pi.size(); ++j) worst = std::max(worst, std::abs(next[j] - pi[j]));
  return worst;
}

double detailed_balance_error(const KernelMatrix& p, const std::vector<double>& pi) {
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (const auto& [j, v] : p[i]) {
      const auto back = p[j].find(i);
      const double reverse = back == p[j].end() ? 0.0 : back->second;
      worst = std::max(worst, std::abs(pi[i] * v - pi[j] * reverse));
    }
  }
  return worst;
}

double row_sum_error(const KernelMatrix& p) {
  double worst = 0.0;
  for (const Row& row : p) {
    double sum = 0.0;
    for (const auto& [j, v] : row) sum += v;
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

bool irreducible(const KernelMatrix& p) {
  // Strong connectivity: everything reachable from 0 forwards and backwards.
  const std::size_t n = p.size();
  std::vector<std::vector<std::uint64_t>> reverse(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [j, v] : p[i]) {
      if (v > 0.0) reverse[j].push_back(i);
    }
  }
  auto reach = [&](bool forward) {
    std::vector<bool> seen(n, false);
    std::deque<std::uint64_t> queue{0};
    seen[0] = true;
    std::size_t count = 1;
    while (!queue.empty()) {
      const std::uint64_t i = queue.front();
      queue.pop_front();
      auto visit = [&](std::uint64_t j) {
        if (!seen[j]) {
          seen[j] = true;
          ++count;
          queue.push_back(j);
        }
      };
      if (forward) {
        for (const auto& [j, v] : p[i]) {
          if (v > 0.0) visit(j);
        }
      } else {
        for (std::uint64_t j : reverse[i]) visit(j);
      }
    }
    return count == n;
  };
  return reach(true) && reach(false);
}

namespace {

// Potential as a sorted-scope function: the table re-indexed so the scope is
// ascending. Built by evaluating every assignment.
std::pair<std::vector<int>, std::vector<double>> canonical(const Model& model,
                                                           const std::vector<int>& scope,
                                                           const std::vector<double>& table) {
  std::vector<int> sorted = scope;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> cards;
  for (int v : sorted) cards.push_back(model.variables()[v].cardinality);
  std::size_t size = 1;
  for (int c : cards) size *= c;
  std::vector<double> out(size);
  std::vector<int> digits(sorted.size(), 0);
  for (std::size_t index = 0; index < size; ++index) {
    std::size_t original = 0;
    for (int v : scope) {
      const auto pos = std::find(sorted.begin(), sorted.end(), v) - sorted.begin();
      original = original * model.variables()[v].cardinality + digits[pos];
    }
    out[index] = table[original];
    for (std::size_t k = sorted.size(); k-- > 0;) {
      if (++digits[k] < cards[k]) break;
      digits[k] = 0;
    }
  }
  return {sorted, out};
}

}  // namespace

std::vector<std::vector<int>> brute_force_automorphisms(const Model& model) {
  const int n = model.num_variables();
  if (n > 8) throw std::length_error("brute force limited to 8 variables");
  std::multiset<std::pair<std::vector<int>, std::vector<double>>> functions;
  for (const Potential& p : model.potentials()) functions.insert(canonical(model, p.scope, p.log_table));
  std::vector<int> g(n);
  std::iota(g.begin(), g.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    bool ok = true;
    for (int v = 0; v < n && ok; ++v) {
      ok = model.variables()[v].cardinality == model.variables()[g[v]].cardinality;
    }
    if (!ok) continue;
    std::multiset<std::pair<std::vector<int>, std::vector<double>>> images;
    for (const Potential& p : model.potentials()) {
      std::vector<int> scope;
      for (int v : p.scope) scope.push_back(g[v]);
      images.insert(canonical(model, scope, p.log_table));
    }
    if (images == functions) out.push_back(g);
  } while (std::next_permutation(g.begin(), g.end()));
  return out;
}

bool preserves_scores(const Model& model, const std::vector<int>& g, double tolerance) {
  std::uint64_t count = 1;
  for (const Variable& v : model.variables()) count *= v.cardinality;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::vector<int> x = decode(model, i);
    if (std::abs(log_score(model, x) - log_score(model, act(g, x))) > tolerance) return false;
  }
  return true;
}

}  // namespace lmh::oracle
