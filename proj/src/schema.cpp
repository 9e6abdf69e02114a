#include "sns/schema.hpp"

#include <cstdio>

namespace sns {

namespace log {
void warn(const std::string& msg) { std::fprintf(stderr, "warning: %s\n", msg.c_str()); }
}  // namespace log

NodeTypeId NetworkSchema::add_node_type(std::string name, NodeId count, int attr_dim) {
  if (count < 0 || attr_dim < 0) throw DataError("node type '" + name + "': negative count or attr_dim");
  if (find_node_type(name) >= 0) throw DataError("duplicate node type '" + name + "'");
  node_types_.push_back({std::move(name), count, attr_dim});
  return static_cast<NodeTypeId>(node_types_.size() - 1);
}

RelationId NetworkSchema::add_relation(std::string name, NodeTypeId src, NodeTypeId dst) {
  if (src < 0 || src >= num_node_types() || dst < 0 || dst >= num_node_types())
    throw DataError("relation '" + name + "' references unregistered node type");
  if (find_relation(name) >= 0) throw DataError("duplicate relation '" + name + "'");
  relations_.push_back({std::move(name), src, dst});
  return static_cast<RelationId>(relations_.size() - 1);
}

NodeTypeId NetworkSchema::find_node_type(const std::string& name) const {
  for (int i = 0; i < num_node_types(); ++i)
    if (node_types_[i].name == name) return i;
  return -1;
}

RelationId NetworkSchema::find_relation(const std::string& name) const {
  for (int i = 0; i < num_relations(); ++i)
    if (relations_[i].name == name) return i;
  return -1;
}

void NetworkSchema::validate() const {
  if (num_node_types() + num_relations() <= 2)
    throw DataError("schema is not heterogeneous: |node types| + |relations| must exceed 2");
  for (const auto& r : relations_)
    if (r.src < 0 || r.src >= num_node_types() || r.dst < 0 || r.dst >= num_node_types())
      throw DataError("relation '" + r.name + "' references unregistered node type");
}

bool MetaPath::well_formed(const NetworkSchema& schema) const {
  if (relations.empty()) return false;
  for (RelationId r : relations)
    if (r < 0 || r >= schema.num_relations()) return false;
  for (std::size_t i = 0; i + 1 < relations.size(); ++i)
    if (schema.relation(relations[i]).dst != schema.relation(relations[i + 1]).src) return false;
  return true;
}

NodeTypeId MetaPath::src_type(const NetworkSchema& schema) const {
  return schema.relation(relations.front()).src;
}

NodeTypeId MetaPath::dst_type(const NetworkSchema& schema) const {
  return schema.relation(relations.back()).dst;
}

}  // namespace sns
