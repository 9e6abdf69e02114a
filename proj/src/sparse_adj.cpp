#include "sns/sparse_adj.hpp"

#include <algorithm>

namespace sns {

SparseAdj SparseAdj::from_edges(NodeId rows, NodeId cols,
                                std::span<const std::pair<NodeId, NodeId>> edges) {
  SparseAdj a(rows, cols);
  for (auto [r, c] : edges) {
    if (r < 0 || r >= rows || c < 0 || c >= cols)
      throw DataError("edge (" + std::to_string(r) + "," + std::to_string(c) + ") out of bounds " +
                      std::to_string(rows) + "x" + std::to_string(cols));
    ++a.row_ptr_[r + 1];
  }
  for (NodeId r = 0; r < rows; ++r) a.row_ptr_[r + 1] += a.row_ptr_[r];
  a.col_idx_.resize(static_cast<std::size_t>(a.row_ptr_[rows]));
  std::vector<std::int64_t> fill(a.row_ptr_.begin(), a.row_ptr_.end() - 1);
  for (auto [r, c] : edges) a.col_idx_[static_cast<std::size_t>(fill[r]++)] = c;

  // sort each row and collapse duplicates
  std::vector<NodeId> packed;
  packed.reserve(a.col_idx_.size());
  std::vector<std::int64_t> new_ptr(rows + 1, 0);
  for (NodeId r = 0; r < rows; ++r) {
    auto begin = a.col_idx_.begin() + a.row_ptr_[r];
    auto end = a.col_idx_.begin() + a.row_ptr_[r + 1];
    std::sort(begin, end);
    auto last = std::unique(begin, end);
    packed.insert(packed.end(), begin, last);
    new_ptr[r + 1] = static_cast<std::int64_t>(packed.size());
  }
  a.row_ptr_ = std::move(new_ptr);
  a.col_idx_ = std::move(packed);
  return a;
}

bool SparseAdj::has_edge(NodeId r, NodeId c) const {
  auto cols = row(r);
  return std::binary_search(cols.begin(), cols.end(), c);
}

SparseAdj SparseAdj::transposed() const {
  SparseAdj t(cols_, rows_);
  for (NodeId c : col_idx_) ++t.row_ptr_[c + 1];
  for (NodeId r = 0; r < cols_; ++r) t.row_ptr_[r + 1] += t.row_ptr_[r];
  t.col_idx_.resize(col_idx_.size());
  std::vector<std::int64_t> fill(t.row_ptr_.begin(), t.row_ptr_.end() - 1);
  for (NodeId r = 0; r < rows_; ++r)
    for (NodeId c : row(r)) t.col_idx_[static_cast<std::size_t>(fill[c]++)] = r;
  return t;  // counting pass preserves ascending column order per row
}

SparseMat SparseAdj::to_eigen() const {
  SparseMat m(rows_, cols_);
  m.reserve(Eigen::VectorXi::Constant(static_cast<int>(rows_), 0));
  std::vector<Eigen::Triplet<double, std::int64_t>> trips;
  trips.reserve(col_idx_.size());
  for (NodeId r = 0; r < rows_; ++r)
    for (NodeId c : row(r)) trips.emplace_back(r, c, 1.0);
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

SparseAdj SparseAdj::from_eigen_binarized(const SparseMat& m) {
  SparseAdj a(m.rows(), m.cols());
  a.row_ptr_.assign(m.rows() + 1, 0);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (SparseMat::InnerIterator it(m, r); it; ++it) {
      if (it.value() != 0.0) {
        a.col_idx_.push_back(it.col());
        ++a.row_ptr_[r + 1];
      }
    }
  }
  for (NodeId r = 0; r < a.rows_; ++r) a.row_ptr_[r + 1] += a.row_ptr_[r];
  return a;
}

}  // namespace sns
