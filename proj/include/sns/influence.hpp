#pragma once

#include <Eigen/Core>

#include "sns/hin_graph.hpp"
#include "sns/metapath.hpp"

namespace sns {

struct PprConfig {
  double alpha = 0.15;   // restart probability, in (0,1]
  int max_iters = 200;
  double tol = 1e-8;     // max per-column L1 change between iterates
};

// Symmetrically normalized block matrix over neighbor + target nodes:
//   [[0, B], [B^T, 0]]  with B the neighbor->target bipartite adjacency,
// normalized D^{-1/2} M D^{-1/2}. Neighbor block occupies rows/cols
// [0, neighbor_count); isolated nodes have all-zero rows.
struct BidirectionalBlock {
  SparseMat norm_adj;
  NodeId neighbor_count = 0;
  NodeId target_count = 0;
};

BidirectionalBlock bidirectional_normalized(const HinGraph& graph, RelationId relation,
                                            NodeTypeId target_type);
// Same construction from an explicit neighbor->target bipartite adjacency
// (used for composed meta-path subgraphs).
BidirectionalBlock bidirectional_normalized(const SparseAdj& neighbor_to_target);

struct PprResult {
  Eigen::MatrixXd pi;
  bool converged = false;
  int iters = 0;
};

// Personalized PageRank alpha * (I - (1-alpha) A)^{-1}, computed by power
// iteration on the Neumann series. Iterates are the partial sums, so they
// grow monotonically entrywise. Non-convergence within max_iters sets
// converged=false; it is not an error.
PprResult ppr(const SparseMat& norm_adj, const PprConfig& cfg);

// Pi * restart without forming Pi, via the same partial-sum recurrence;
// the workhorse for class-aggregated scores, where restart is an indicator
// over the class members.
Eigen::VectorXd ppr_apply(const SparseMat& norm_adj, const Eigen::VectorXd& restart,
                          const PprConfig& cfg);

// Per-path PPR over the bidirectional block of each meta-path between the
// neighbor and target type, summed entrywise; returns the neighbor-rows x
// target-columns submatrix (|A_k| x |A_t|). Paths may run in either
// direction between the two types; composed adjacency is binarized before
// normalization.
Eigen::MatrixXd aggregate_influence(const HinGraph& graph, NodeTypeId target_type,
                                    NodeTypeId neighbor_type, const std::vector<MetaPath>& paths,
                                    const PprConfig& cfg);

// Score of every neighbor node against one minority class: column sums of
// the influence submatrix over the class members.
Eigen::VectorXd minority_influence(const Eigen::MatrixXd& influence,
                                   const std::vector<NodeId>& minority_members);

// minority_influence(aggregate_influence(...), members) without the dense
// Pi: one vector PPR per meta-path, restarted on the member targets.
Eigen::VectorXd aggregate_influence_scores(const HinGraph& graph, NodeTypeId target_type,
                                           NodeTypeId neighbor_type,
                                           const std::vector<MetaPath>& paths,
                                           const std::vector<NodeId>& members,
                                           const PprConfig& cfg);

// Ranked candidate neighbors for one (minority class, neighbor type) pair.
struct InfluenceTable {
  NodeTypeId neighbor_type = -1;
  int class_id = -1;
  Eigen::VectorXd scores;
  std::vector<NodeId> candidates;  // ascending node ids
  int k_used = 0;
  bool all_zero_scores = false;
};

// k = min(ceil(scale * d_max), |A_k|); scale = kCandidateScaleAll selects
// every node. Ranking is by score descending, ties broken by ascending id.
InfluenceTable select_candidates(const Eigen::VectorXd& scores, double candidate_scale, NodeId d_max);

}  // namespace sns
