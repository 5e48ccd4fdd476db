#include "lmh/generators.h"

#include <cmath>
#include <stdexcept>
#include <string>

#include "lmh/random.h"

namespace lmh {

namespace {

std::vector<double> edge_table(double j) { return {j, -j, -j, j}; }

void check_finite(const std::vector<double>& values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be finite");
  }
}

Model assemble(int n, const std::vector<std::pair<int, int>>& edges,
               const std::vector<double>& couplings, const std::vector<double>& fields,
               SymmetryTemplate tmpl) {
  std::vector<Variable> variables;
  variables.reserve(n);
  for (int v = 0; v < n; ++v) variables.push_back({v, 2, ""});
  std::vector<Potential> potentials;
  potentials.reserve(edges.size() + n);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const int id = static_cast<int>(potentials.size());
    potentials.push_back({id, {edges[e].first, edges[e].second}, edge_table(couplings[e])});
  }
  for (int v = 0; v < n; ++v) {
    const int id = static_cast<int>(potentials.size());
    potentials.push_back({id, {v}, {-fields[v], fields[v]}});
  }
  return Model(std::move(variables), std::move(potentials), tmpl);
}

}  // namespace

void IsingSpec::validate() const {
  if (rows < 1 || cols < 1) throw std::invalid_argument("grid dimensions must be >= 1");
  if (!field.empty() && static_cast<int>(field.size()) != rows * cols) {
    throw std::invalid_argument("field vector must have rows * cols entries");
  }
  if (!std::isfinite(coupling) || !std::isfinite(constant_field)) {
    throw std::invalid_argument("Ising weights must be finite");
  }
  check_finite(field, "field");
}

double IsingSpec::field_at(int site) const {
  return field.empty() ? constant_field : field[site];
}

std::vector<std::pair<int, int>> grid_edges(int rows, int cols) {
  std::vector<std::pair<int, int>> edges;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int v = r * cols + c;
      if (c + 1 < cols) edges.emplace_back(v, v + 1);
      if (r + 1 < rows) edges.emplace_back(v, v + cols);
    }
  }
  return edges;
}

Model ising_grid(const IsingSpec& spec) {
  spec.validate();
  const int n = spec.rows * spec.cols;
  const auto edges = grid_edges(spec.rows, spec.cols);
  std::vector<double> fields(n);
  for (int v = 0; v < n; ++v) fields[v] = spec.field_at(v);
  return assemble(n, edges, std::vector<double>(edges.size(), spec.coupling), fields,
                  {SymmetryTemplate::Kind::kGrid, spec.rows, spec.cols});
}

void ChimeraSpec::validate() const {
  if (cell_rows < 1 || cell_cols < 1) {
    throw std::invalid_argument("Chimera cell dimensions must be >= 1");
  }
  if (!intra_couplings.empty() &&
      intra_couplings.size() != chimera_intra_edges(*this).size()) {
    throw std::invalid_argument("intra coupling vector has the wrong length");
  }
  if (!inter_couplings.empty() &&
      inter_couplings.size() != chimera_inter_edges(*this).size()) {
    throw std::invalid_argument("inter coupling vector has the wrong length");
  }
  if (!field.empty() && static_cast<int>(field.size()) != num_variables()) {
    throw std::invalid_argument("field vector must have one entry per variable");
  }
  if (!std::isfinite(intra_coupling) || !std::isfinite(inter_coupling) ||
      !std::isfinite(constant_field)) {
    throw std::invalid_argument("Chimera weights must be finite");
  }
  check_finite(intra_couplings, "intra couplings");
  check_finite(inter_couplings, "inter couplings");
  check_finite(field, "field");
}

std::vector<std::pair<int, int>> chimera_intra_edges(const ChimeraSpec& spec) {
  std::vector<std::pair<int, int>> edges;
  for (int cell = 0; cell < spec.cell_rows * spec.cell_cols; ++cell) {
    for (int i = 0; i < 4; ++i) {
      for (int j = 4; j < 8; ++j) edges.emplace_back(8 * cell + i, 8 * cell + j);
    }
  }
  return edges;
}

std::vector<std::pair<int, int>> chimera_inter_edges(const ChimeraSpec& spec) {
  std::vector<std::pair<int, int>> edges;
  auto var = [&](int r, int c, int k) { return 8 * (r * spec.cell_cols + c) + k; };
  for (int r = 0; r < spec.cell_rows; ++r) {
    for (int c = 0; c < spec.cell_cols; ++c) {
      if (r + 1 < spec.cell_rows) {
        for (int k = 0; k < 4; ++k) edges.emplace_back(var(r, c, k), var(r + 1, c, k));
      }
      if (c + 1 < spec.cell_cols) {
        for (int k = 4; k < 8; ++k) edges.emplace_back(var(r, c, k), var(r, c + 1, k));
      }
    }
  }
  return edges;
}

Model chimera(const ChimeraSpec& spec) {
  spec.validate();
  auto edges = chimera_intra_edges(spec);
  std::vector<double> couplings =
      spec.intra_couplings.empty() ? std::vector<double>(edges.size(), spec.intra_coupling)
                                   : spec.intra_couplings;
  const auto inter = chimera_inter_edges(spec);
  for (std::size_t e = 0; e < inter.size(); ++e) {
    edges.push_back(inter[e]);
    couplings.push_back(spec.inter_couplings.empty() ? spec.inter_coupling
                                                     : spec.inter_couplings[e]);
  }
  const int n = spec.num_variables();
  std::vector<double> fields =
      spec.field.empty() ? std::vector<double>(n, spec.constant_field) : spec.field;
  return assemble(n, edges, couplings, fields,
                  {SymmetryTemplate::Kind::kChimera, spec.cell_rows, spec.cell_cols});
}

std::vector<double> perturbed_values(double base, double spread, int count,
                                     std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("count must be >= 0");
  Rng rng(seed);
  std::vector<double> out(count);
  for (double& v : out) v = base + spread * (2.0 * uniform01(rng) - 1.0);
  return out;
}

}  // namespace lmh
