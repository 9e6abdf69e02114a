#pragma once

#include <Eigen/SparseCore>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "sns/types.hpp"

namespace sns {

using SparseMat = Eigen::SparseMatrix<double, Eigen::RowMajor, std::int64_t>;

// Binary adjacency in CSR form. Rows are source nodes, columns destination
// nodes; column indices strictly increasing within each row (multi-edges
// collapse on construction).
class SparseAdj {
 public:
  SparseAdj() = default;
  SparseAdj(NodeId rows, NodeId cols) : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

  static SparseAdj from_edges(NodeId rows, NodeId cols,
                              std::span<const std::pair<NodeId, NodeId>> edges);

  NodeId rows() const { return rows_; }
  NodeId cols() const { return cols_; }
  std::int64_t num_edges() const { return static_cast<std::int64_t>(col_idx_.size()); }

  std::span<const NodeId> row(NodeId r) const {
    return {col_idx_.data() + row_ptr_[r], col_idx_.data() + row_ptr_[r + 1]};
  }
  NodeId degree(NodeId r) const { return static_cast<NodeId>(row_ptr_[r + 1] - row_ptr_[r]); }
  bool has_edge(NodeId r, NodeId c) const;

  SparseAdj transposed() const;

  // 1.0-valued Eigen view for spmv / spgemm work.
  SparseMat to_eigen() const;
  static SparseAdj from_eigen_binarized(const SparseMat& m);

  const std::vector<std::int64_t>& row_ptr() const { return row_ptr_; }
  const std::vector<NodeId>& col_idx() const { return col_idx_; }

  bool operator==(const SparseAdj& other) const = default;

 private:
  NodeId rows_ = 0;
  NodeId cols_ = 0;
  std::vector<std::int64_t> row_ptr_ = {0};
  std::vector<NodeId> col_idx_;
};

}  // namespace sns
