#pragma once

#include "sns/hin_graph.hpp"

namespace sns {

// Boolean sparse product of the constituent relation matrices: entry (i,j) is
// 1 iff at least one path instance connects i to j. Dimensions
// |src type of first relation| x |dst type of last relation|.
SparseAdj compose_metapath_adjacency(const HinGraph& graph, const MetaPath& path);

}  // namespace sns
