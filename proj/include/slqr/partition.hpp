#pragma once

#include <Eigen/Dense>
#include <numeric>
#include <vector>

#include "slqr/errors.hpp"

namespace slqr {

// Block structure of a gain matrix: row_sizes are the per-agent input
// dimensions, col_sizes the per-agent state dimensions. Block (i,j) couples
// agent i's input to agent j's state.
struct BlockPartition {
  std::vector<int> row_sizes;
  std::vector<int> col_sizes;

  int block_rows() const { return static_cast<int>(row_sizes.size()); }
  int block_cols() const { return static_cast<int>(col_sizes.size()); }
  int total_rows() const { return std::accumulate(row_sizes.begin(), row_sizes.end(), 0); }
  int total_cols() const { return std::accumulate(col_sizes.begin(), col_sizes.end(), 0); }

  int row_offset(int i) const { return std::accumulate(row_sizes.begin(), row_sizes.begin() + i, 0); }
  int col_offset(int j) const { return std::accumulate(col_sizes.begin(), col_sizes.begin() + j, 0); }

  using ConstBlockView =
      Eigen::Map<const Eigen::MatrixXd, Eigen::Unaligned, Eigen::OuterStride<>>;

  // Read access returns a Map holding the data pointer by value. An
  // Eigen::Block would reference the Ref wrapper instead, which dangles as
  // soon as the wrapper is a temporary (any call that passes a plain matrix
  // or an expression), so a stored view would silently read freed memory.
  ConstBlockView block(const Eigen::Ref<const Eigen::MatrixXd>& K, int i, int j) const {
    return ConstBlockView(
        K.data() + row_offset(i) + K.outerStride() * col_offset(j),
        row_sizes[i], col_sizes[j], Eigen::OuterStride<>(K.outerStride()));
  }
  Eigen::Block<Eigen::MatrixXd> block(Eigen::MatrixXd& K, int i, int j) const {
    return K.block(row_offset(i), col_offset(j), row_sizes[i], col_sizes[j]);
  }

  // Uniform partition: nb blocks of rs×cs each.
  static BlockPartition uniform(int nb, int rs, int cs) {
    BlockPartition p;
    p.row_sizes.assign(nb, rs);
    p.col_sizes.assign(nb, cs);
    return p;
  }

  void check_against(const Eigen::MatrixXd& K) const {
    if (row_sizes.empty() || col_sizes.empty())
      throw PartitionMismatch("partition has no blocks");
    for (int s : row_sizes)
      if (s < 1) throw PartitionMismatch("partition row size < 1");
    for (int s : col_sizes)
      if (s < 1) throw PartitionMismatch("partition col size < 1");
    if (total_rows() != K.rows() || total_cols() != K.cols())
      throw PartitionMismatch("partition sizes do not sum to matrix dimensions");
  }
};

}  // namespace slqr
