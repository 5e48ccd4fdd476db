#pragma once

#include <cstdint>
#include <vector>

namespace lmh {

// Per-variable probability vectors over dense values 0..cardinality-1.
struct MarginalTable {
  std::vector<std::vector<double>> probabilities;
  std::uint64_t sample_count = 0;

  int num_variables() const { return static_cast<int>(probabilities.size()); }
  double max_abs_difference(const MarginalTable& other) const;
};

}  // namespace lmh
