#include "sns/hin_graph.hpp"

#include <algorithm>

namespace sns {

void HinGraph::validate() const {
  schema.validate();
  if (static_cast<int>(adjacency.size()) != schema.num_relations())
    throw DataError("adjacency count does not match relation count");
  for (int r = 0; r < schema.num_relations(); ++r) {
    const auto& rel = schema.relation(r);
    const auto& adj = adjacency[r];
    if (adj.rows() != schema.node_type(rel.src).count || adj.cols() != schema.node_type(rel.dst).count)
      throw DataError("relation '" + rel.name + "' adjacency is " + std::to_string(adj.rows()) + "x" +
                      std::to_string(adj.cols()) + ", expected " +
                      std::to_string(schema.node_type(rel.src).count) + "x" +
                      std::to_string(schema.node_type(rel.dst).count));
  }
  if (static_cast<int>(attributes.size()) != schema.num_node_types())
    throw DataError("attribute matrix count does not match node type count");
  for (int t = 0; t < schema.num_node_types(); ++t) {
    const auto& info = schema.node_type(t);
    const auto& x = attributes[t];
    if (info.attr_dim == 0) {
      if (x.size() != 0) throw DataError("attributeless type '" + info.name + "' carries attributes");
    } else if (x.rows() != info.count || x.cols() != info.attr_dim) {
      throw DataError("type '" + info.name + "' attributes are " + std::to_string(x.rows()) + "x" +
                      std::to_string(x.cols()) + ", expected " + std::to_string(info.count) + "x" +
                      std::to_string(info.attr_dim));
    }
  }
}

bool LabelSpec::is_minority(int class_id) const {
  return std::binary_search(minority_classes.begin(), minority_classes.end(), class_id);
}

std::vector<NodeId> LabelSpec::train_members(int class_id) const {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < num_target_nodes(); ++v)
    if (train_mask[v] && labels[v] == class_id) out.push_back(v);
  return out;
}

std::vector<NodeId> LabelSpec::class_train_sizes() const {
  std::vector<NodeId> sizes(num_classes, 0);
  for (NodeId v = 0; v < num_target_nodes(); ++v)
    if (train_mask[v] && labels[v] >= 0) ++sizes[labels[v]];
  return sizes;
}

void LabelSpec::validate() const {
  const auto n = labels.size();
  if (train_mask.size() != n || val_mask.size() != n || test_mask.size() != n)
    throw DataError("mask length does not match target node count");
  for (std::size_t v = 0; v < n; ++v) {
    if (train_mask[v] + val_mask[v] + test_mask[v] > 1)
      throw DataError("node " + std::to_string(v) + " appears in more than one split");
    if (train_mask[v] && labels[v] == kUnlabeled)
      throw DataError("train node " + std::to_string(v) + " is unlabeled");
    if (labels[v] != kUnlabeled && (labels[v] < 0 || labels[v] >= num_classes))
      throw DataError("node " + std::to_string(v) + " has class " + std::to_string(labels[v]) +
                      " outside [0," + std::to_string(num_classes) + ")");
  }
  for (int c : minority_classes)
    if (c < 0 || c >= num_classes) throw DataError("minority class " + std::to_string(c) + " out of range");
}

std::vector<RelationId> first_order_relations(const NetworkSchema& schema, NodeTypeId t) {
  std::vector<RelationId> out;
  for (RelationId r = 0; r < schema.num_relations(); ++r) {
    const auto& rel = schema.relation(r);
    if (rel.src == t || rel.dst == t) out.push_back(r);
  }
  return out;
}

std::vector<NodeTypeId> neighbor_types(const NetworkSchema& schema, NodeTypeId t) {
  std::vector<NodeTypeId> out;
  for (RelationId r : first_order_relations(schema, t)) {
    const auto& rel = schema.relation(r);
    NodeTypeId other = (rel.src == t) ? rel.dst : rel.src;
    if (!std::count(out.begin(), out.end(), other)) out.push_back(other);
  }
  std::sort(out.begin(), out.end());
  return out;
}

RelationId canonical_relation(const NetworkSchema& schema, NodeTypeId a, NodeTypeId b) {
  for (RelationId r = 0; r < schema.num_relations(); ++r) {
    const auto& rel = schema.relation(r);
    if ((rel.src == a && rel.dst == b) || (rel.src == b && rel.dst == a)) return r;
  }
  return -1;
}

std::vector<std::vector<RelationId>> mirror_groups(const HinGraph& graph, NodeTypeId t) {
  auto rels = first_order_relations(graph.schema, t);
  std::vector<std::vector<RelationId>> groups;
  std::vector<bool> used(rels.size(), false);
  for (std::size_t i = 0; i < rels.size(); ++i) {
    if (used[i]) continue;
    std::vector<RelationId> group{rels[i]};
    used[i] = true;
    const auto& ri = graph.schema.relation(rels[i]);
    for (std::size_t j = i + 1; j < rels.size(); ++j) {
      if (used[j]) continue;
      const auto& rj = graph.schema.relation(rels[j]);
      if (rj.src == ri.dst && rj.dst == ri.src &&
          graph.adjacency[rels[i]].transposed() == graph.adjacency[rels[j]]) {
        group.push_back(rels[j]);
        used[j] = true;
        break;  // pair at most once
      }
    }
    groups.push_back(std::move(group));
  }
  return groups;
}

SparseAdj target_to_neighbor(const HinGraph& graph, RelationId r, NodeTypeId target) {
  const auto& rel = graph.schema.relation(r);
  if (rel.src == target) return graph.adjacency[r];
  if (rel.dst == target) return graph.adjacency[r].transposed();
  throw DataError("relation '" + rel.name + "' does not touch the target type");
}

}  // namespace sns
