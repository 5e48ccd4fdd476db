#include "lmh/bmf.h"

#include <stdexcept>

namespace lmh {

std::size_t BooleanMatrix::count_ones() const {
  std::size_t total = 0;
  for (auto b : bits_) total += b;
  return total;
}

std::size_t BooleanMatrix::hamming(const BooleanMatrix& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw std::invalid_argument("hamming: shape mismatch");
  }
  std::size_t total = 0;
  for (std::size_t i = 0; i < bits_.size(); ++i) total += bits_[i] != other.bits_[i];
  return total;
}

BooleanMatrix BooleanMatrix::product(const BooleanMatrix& a, const BooleanMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("product: inner dimension mismatch");
  BooleanMatrix out(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int k = 0; k < a.cols(); ++k) {
      if (!a.get(i, k)) continue;
      for (int j = 0; j < b.cols(); ++j) {
        if (b.get(k, j)) out.set(i, j, true);
      }
    }
  }
  return out;
}

BMFResult boolean_rank_approx(const BooleanMatrix& matrix, int rank, double threshold) {
  if (rank < 1) throw std::invalid_argument("Boolean rank must be >= 1");
  const int n = matrix.rows();
  const int m = matrix.cols();

  // Column association: conf(i -> j) = |col_i AND col_j| / |col_i|.
  std::vector<int> column_ones(m, 0);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < m; ++c) column_ones[c] += matrix.get(r, c);
  }
  std::vector<std::vector<std::uint8_t>> candidates(m, std::vector<std::uint8_t>(m, 0));
  for (int i = 0; i < m; ++i) {
    if (column_ones[i] == 0) continue;
    for (int j = 0; j < m; ++j) {
      int both = 0;
      for (int r = 0; r < n; ++r) both += matrix.get(r, i) && matrix.get(r, j);
      candidates[i][j] = static_cast<double>(both) / column_ones[i] >= threshold;
    }
  }

  BMFResult result;
  result.left = BooleanMatrix(n, rank);
  result.right = BooleanMatrix(rank, m);
  BooleanMatrix cover(n, m);
  std::vector<int> row_gain(n);
  for (int round = 0; round < rank; ++round) {
    long best_gain = 0;
    int best = -1;
    for (int i = 0; i < m; ++i) {
      long gain = 0;
      for (int r = 0; r < n; ++r) {
        int g = 0;
        for (int c = 0; c < m; ++c) {
          if (!candidates[i][c] || cover.get(r, c)) continue;
          g += matrix.get(r, c) ? 1 : -1;
        }
        if (g > 0) gain += g;
      }
      if (gain > best_gain) {
        best_gain = gain;
        best = i;
      }
    }
    if (best < 0) break;
    for (int c = 0; c < m; ++c) result.right.set(round, c, candidates[best][c] != 0);
    for (int r = 0; r < n; ++r) {
      int g = 0;
      for (int c = 0; c < m; ++c) {
        if (!candidates[best][c] || cover.get(r, c)) continue;
        g += matrix.get(r, c) ? 1 : -1;
      }
      if (g <= 0) continue;
      result.left.set(r, round, true);
      for (int c = 0; c < m; ++c) {
        if (candidates[best][c]) cover.set(r, c, true);
      }
    }
    ++result.used_rank;
  }
  result.reconstruction = BooleanMatrix::product(result.left, result.right);
  result.error = result.reconstruction.hamming(matrix);
  return result;
}

}  // namespace lmh
