#pragma once

#include <Eigen/Core>
#include <map>
#include <vector>

#include "sns/schema.hpp"
#include "sns/sparse_adj.hpp"

namespace sns {

// Heterogeneous information network: schema, one adjacency per relation,
// one dense attribute matrix per attributed node type. Immutable after
// construction; safe to share read-only across threads.
struct HinGraph {
  NetworkSchema schema;
  std::vector<SparseAdj> adjacency;        // indexed by RelationId
  std::vector<Eigen::MatrixXd> attributes; // indexed by NodeTypeId; 0x0 if attributeless

  // Checks every relation has a matrix of matching dimensions and every
  // attribute matrix has one row per node.
  void validate() const;

  NodeId num_nodes(NodeTypeId t) const { return schema.node_type(t).count; }
};

constexpr int kUnlabeled = -1;

// Labels and splits for the target node type.
struct LabelSpec {
  NodeTypeId target_type = -1;
  int num_classes = 0;
  std::vector<int> labels;            // per target node; kUnlabeled allowed
  std::vector<std::uint8_t> train_mask;
  std::vector<std::uint8_t> val_mask;
  std::vector<std::uint8_t> test_mask;
  std::vector<int> minority_classes;  // sorted ascending

  NodeId num_target_nodes() const { return static_cast<NodeId>(labels.size()); }
  bool is_minority(int class_id) const;
  // Labeled train-mask node ids of one class, ascending.
  std::vector<NodeId> train_members(int class_id) const;
  std::vector<NodeId> class_train_sizes() const;

  // Masks pairwise disjoint, within bounds, every train node labeled.
  void validate() const;
};

// Relations incident to `t` (src or dst), ascending RelationId.
std::vector<RelationId> first_order_relations(const NetworkSchema& schema, NodeTypeId t);

// Distinct neighbor types across first-order relations of `t`, ascending.
// Includes `t` itself when a self-relation exists.
std::vector<NodeTypeId> neighbor_types(const NetworkSchema& schema, NodeTypeId t);

// Lowest-id relation linking the unordered pair {a, b}; -1 if none.
RelationId canonical_relation(const NetworkSchema& schema, NodeTypeId a, NodeTypeId b);

// Groups first-order relations of `t` that are exact mirrors of one another:
// swapped endpoints and bit-identical transposed adjacency. Each group lists
// the member RelationIds ascending; non-mirrored relations form singleton
// groups. Used so a synthetic edge sampled once lands in both directions of a
// bidirectional relation pair.
std::vector<std::vector<RelationId>> mirror_groups(const HinGraph& graph, NodeTypeId t);

// Orients relation `r` as (target rows x neighbor cols); transposes when the
// relation is stored neighbor->target.
SparseAdj target_to_neighbor(const HinGraph& graph, RelationId r, NodeTypeId target);

}  // namespace sns
