#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace lmh {

// Dense row-major bit grid.
class BooleanMatrix {
 public:
  BooleanMatrix() = default;
  BooleanMatrix(int rows, int cols) : rows_(rows), cols_(cols), bits_(rows * cols, 0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool get(int r, int c) const { return bits_[static_cast<std::size_t>(r) * cols_ + c] != 0; }
  void set(int r, int c, bool value) {
    bits_[static_cast<std::size_t>(r) * cols_ + c] = value ? 1 : 0;
  }
  std::size_t count_ones() const;
  // Number of mismatched cells; shapes must agree.
  std::size_t hamming(const BooleanMatrix& other) const;

  // (a o b)[i][j] = OR_k a[i][k] AND b[k][j].
  static BooleanMatrix product(const BooleanMatrix& a, const BooleanMatrix& b);

  friend bool operator==(const BooleanMatrix&, const BooleanMatrix&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct BMFResult {
  BooleanMatrix left;   // rows x rank (usage)
  BooleanMatrix right;  // rank x cols (basis)
  BooleanMatrix reconstruction;
  std::size_t error = 0;  // Hamming distance to the input
  int used_rank = 0;      // factors that improved the cover
};

inline constexpr double kAssoThreshold = 0.5;

// Greedy ASSO-style Boolean factorization. Candidate basis rows come from the
// thresholded column association matrix; each of `rank` rounds adds the
// candidate (with its best usage column) that removes the most error, and
// stops adding once no candidate improves the cover.
BMFResult boolean_rank_approx(const BooleanMatrix& matrix, int rank,
                              double threshold = kAssoThreshold);

}  // namespace lmh
