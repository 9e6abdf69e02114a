#include "sns/metapath.hpp"

namespace sns {

SparseAdj compose_metapath_adjacency(const HinGraph& graph, const MetaPath& path) {
  if (path.relations.empty()) throw DataError("empty meta-path");
  for (std::size_t i = 0; i + 1 < path.relations.size(); ++i) {
    const auto& a = graph.schema.relation(path.relations[i]);
    const auto& b = graph.schema.relation(path.relations[i + 1]);
    if (a.dst != b.src)
      throw DataError("meta-path type mismatch: '" + a.name + "' ends at '" +
                      graph.schema.node_type(a.dst).name + "' but '" + b.name + "' starts at '" +
                      graph.schema.node_type(b.src).name + "'");
  }
  if (path.relations.size() == 1) return graph.adjacency[path.relations.front()];

  SparseMat acc = graph.adjacency[path.relations.front()].to_eigen();
  for (std::size_t i = 1; i < path.relations.size(); ++i) {
    SparseMat next = graph.adjacency[path.relations[i]].to_eigen();
    acc = (acc * next).pruned();
  }
  return SparseAdj::from_eigen_binarized(acc);
}

}  // namespace sns
