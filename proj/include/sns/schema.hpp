#pragma once

#include <string>
#include <vector>

#include "sns/types.hpp"

namespace sns {

struct NodeTypeInfo {
  std::string name;
  NodeId count = 0;
  int attr_dim = 0;  // 0 = attributeless
};

struct RelationInfo {
  std::string name;
  NodeTypeId src = -1;
  NodeTypeId dst = -1;
};

// Meta-level graph: node types connected by directed relations.
class NetworkSchema {
 public:
  NodeTypeId add_node_type(std::string name, NodeId count, int attr_dim = 0);
  RelationId add_relation(std::string name, NodeTypeId src, NodeTypeId dst);

  int num_node_types() const { return static_cast<int>(node_types_.size()); }
  int num_relations() const { return static_cast<int>(relations_.size()); }

  const NodeTypeInfo& node_type(NodeTypeId t) const { return node_types_.at(t); }
  const RelationInfo& relation(RelationId r) const { return relations_.at(r); }
  const std::vector<NodeTypeInfo>& node_types() const { return node_types_; }
  const std::vector<RelationInfo>& relations() const { return relations_; }

  // -1 if not present
  NodeTypeId find_node_type(const std::string& name) const;
  RelationId find_relation(const std::string& name) const;

  // |A| + |R| > 2 plus referential integrity of relation endpoints.
  void validate() const;

 private:
  std::vector<NodeTypeInfo> node_types_;
  std::vector<RelationInfo> relations_;
};

// Ordered relation sequence; consecutive relations must compose
// (dst of each step equals src of the next).
struct MetaPath {
  std::vector<RelationId> relations;

  bool well_formed(const NetworkSchema& schema) const;
  NodeTypeId src_type(const NetworkSchema& schema) const;
  NodeTypeId dst_type(const NetworkSchema& schema) const;
};

}  // namespace sns
