#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lmh/model.h"

namespace lmh {

// Ferromagnetic grid: site (r, c) is variable r * cols + c. Edge potentials
// come first (right neighbor, then lower neighbor, site by site), followed by
// one unary potential per site.
struct IsingSpec {
  int rows = 1;
  int cols = 1;
  double coupling = 0.5;        // J
  double constant_field = 0.0;  // h, used when `field` is empty
  std::vector<double> field;    // per-site h_v

  void validate() const;
  double field_at(int site) const;
};

// Edge log-table [J, -J, -J, J]; unary log-table [-h, h]. Always tagged with
// the grid template; which template generators are automorphisms depends on
// the weights.
Model ising_grid(const IsingSpec& spec);

// Lattice adjacencies of a rows x cols grid in potential order.
std::vector<std::pair<int, int>> grid_edges(int rows, int cols);

// Unit cells of 8 binary variables: cell (r, c) holds 8 * (r * cell_cols + c)
// + k, with k < 4 the left partition and k >= 4 the right partition. Left
// variables couple to the same index in the cell below, right variables to
// the same index in the cell to the right.
struct ChimeraSpec {
  int cell_rows = 1;
  int cell_cols = 1;
  double intra_coupling = 0.5;
  double inter_coupling = 0.5;
  std::vector<double> intra_couplings;  // per intra edge, overrides the constant
  std::vector<double> inter_couplings;  // per inter edge, overrides the constant
  double constant_field = 0.0;
  std::vector<double> field;

  void validate() const;
  int num_variables() const { return 8 * cell_rows * cell_cols; }
};

// Intra-cell edges (cell by cell, left index major) then inter-cell edges.
std::vector<std::pair<int, int>> chimera_intra_edges(const ChimeraSpec& spec);
std::vector<std::pair<int, int>> chimera_inter_edges(const ChimeraSpec& spec);

// Potentials as in ising_grid: all edges, then one unary per variable.
Model chimera(const ChimeraSpec& spec);

// `count` values base + U(-spread, spread) from a fixed seed.
std::vector<double> perturbed_values(double base, double spread, int count,
                                     std::uint64_t seed);

}  // namespace lmh
