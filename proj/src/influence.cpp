#include "sns/influence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sns {

BidirectionalBlock bidirectional_normalized(const SparseAdj& neighbor_to_target) {
  const NodeId nk = neighbor_to_target.rows();
  const NodeId nt = neighbor_to_target.cols();
  const NodeId n = nk + nt;

  Eigen::VectorXd degree = Eigen::VectorXd::Zero(n);
  for (NodeId i = 0; i < nk; ++i) degree[i] = static_cast<double>(neighbor_to_target.degree(i));
  for (NodeId i = 0; i < nk; ++i)
    for (NodeId j : neighbor_to_target.row(i)) degree[nk + j] += 1.0;
  Eigen::VectorXd inv_sqrt = degree.unaryExpr([](double d) { return d > 0.0 ? 1.0 / std::sqrt(d) : 0.0; });

  std::vector<Eigen::Triplet<double, std::int64_t>> trips;
  trips.reserve(2 * static_cast<std::size_t>(neighbor_to_target.num_edges()));
  for (NodeId i = 0; i < nk; ++i) {
    for (NodeId j : neighbor_to_target.row(i)) {
      const double w = inv_sqrt[i] * inv_sqrt[nk + j];
      trips.emplace_back(i, nk + j, w);
      trips.emplace_back(nk + j, i, w);
    }
  }
  BidirectionalBlock block;
  block.neighbor_count = nk;
  block.target_count = nt;
  block.norm_adj.resize(n, n);
  block.norm_adj.setFromTriplets(trips.begin(), trips.end());
  block.norm_adj.makeCompressed();
  return block;
}

BidirectionalBlock bidirectional_normalized(const HinGraph& graph, RelationId relation,
                                            NodeTypeId target_type) {
  return bidirectional_normalized(target_to_neighbor(graph, relation, target_type).transposed());
}

PprResult ppr(const SparseMat& norm_adj, const PprConfig& cfg) {
  if (norm_adj.rows() != norm_adj.cols()) throw NumericalError("ppr requires a square matrix");
  if (cfg.alpha <= 0.0 || cfg.alpha > 1.0) throw NumericalError("ppr alpha must be in (0,1]");
  const Eigen::Index n = norm_adj.rows();
  const double damp = 1.0 - cfg.alpha;

  PprResult res;
  res.pi = cfg.alpha * Eigen::MatrixXd::Identity(n, n);
  if (damp == 0.0 || norm_adj.nonZeros() == 0) {
    res.converged = true;
    return res;
  }
  Eigen::MatrixXd next(n, n);
  for (int it = 1; it <= cfg.max_iters; ++it) {
    next.noalias() = damp * (norm_adj * res.pi);
    next.diagonal().array() += cfg.alpha;
    const double change = (next - res.pi).cwiseAbs().colwise().sum().maxCoeff();
    res.pi.swap(next);
    res.iters = it;
    if (change < cfg.tol) {
      res.converged = true;
      return res;
    }
  }
  log::warn("ppr did not converge within " + std::to_string(cfg.max_iters) + " iterations");
  return res;
}

Eigen::VectorXd ppr_apply(const SparseMat& norm_adj, const Eigen::VectorXd& restart,
                          const PprConfig& cfg) {
  if (norm_adj.rows() != norm_adj.cols()) throw NumericalError("ppr requires a square matrix");
  if (cfg.alpha <= 0.0 || cfg.alpha > 1.0) throw NumericalError("ppr alpha must be in (0,1]");
  if (restart.size() != norm_adj.rows()) throw DataError("ppr_apply: restart length mismatch");
  const double damp = 1.0 - cfg.alpha;
  Eigen::VectorXd s = cfg.alpha * restart;
  if (damp == 0.0 || norm_adj.nonZeros() == 0) return s;
  Eigen::VectorXd next(s.size());
  for (int it = 1; it <= cfg.max_iters; ++it) {
    next.noalias() = damp * (norm_adj * s);
    next.noalias() += cfg.alpha * restart;
    const double change = (next - s).cwiseAbs().sum();
    s.swap(next);
    if (change < cfg.tol) return s;
  }
  log::warn("ppr_apply did not converge within " + std::to_string(cfg.max_iters) + " iterations");
  return s;
}

namespace {

// neighbor -> target composed adjacency, transposed if the path runs the
// other way
SparseAdj oriented_path_adjacency(const HinGraph& graph, NodeTypeId target_type,
                                  NodeTypeId neighbor_type, const MetaPath& path) {
  const NodeTypeId a = path.src_type(graph.schema);
  const NodeTypeId b = path.dst_type(graph.schema);
  SparseAdj composed = compose_metapath_adjacency(graph, path);
  if (a == neighbor_type && b == target_type) return composed;
  if (a == target_type && b == neighbor_type) return composed.transposed();
  throw DataError("meta-path does not connect the neighbor and target types");
}

}  // namespace

Eigen::MatrixXd aggregate_influence(const HinGraph& graph, NodeTypeId target_type,
                                    NodeTypeId neighbor_type, const std::vector<MetaPath>& paths,
                                    const PprConfig& cfg) {
  if (paths.empty()) throw DataError("aggregate_influence: empty meta-path list");
  const NodeId nk = graph.num_nodes(neighbor_type);
  const NodeId nt = graph.num_nodes(target_type);
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(nk, nt);
  for (const auto& path : paths) {
    auto block = bidirectional_normalized(oriented_path_adjacency(graph, target_type, neighbor_type, path));
    auto res = ppr(block.norm_adj, cfg);
    total += res.pi.block(0, nk, nk, nt);
  }
  return total;
}

Eigen::VectorXd aggregate_influence_scores(const HinGraph& graph, NodeTypeId target_type,
                                           NodeTypeId neighbor_type,
                                           const std::vector<MetaPath>& paths,
                                           const std::vector<NodeId>& members,
                                           const PprConfig& cfg) {
  if (paths.empty()) throw DataError("aggregate_influence: empty meta-path list");
  if (members.empty()) throw DataError("minority_influence: empty member set");
  const NodeId nk = graph.num_nodes(neighbor_type);
  const NodeId nt = graph.num_nodes(target_type);
  Eigen::VectorXd restart = Eigen::VectorXd::Zero(nk + nt);
  for (NodeId v : members) {
    if (v < 0 || v >= nt) throw DataError("minority member id " + std::to_string(v) + " out of range");
    restart[nk + v] = 1.0;
  }
  Eigen::VectorXd total = Eigen::VectorXd::Zero(nk);
  for (const auto& path : paths) {
    auto block = bidirectional_normalized(oriented_path_adjacency(graph, target_type, neighbor_type, path));
    total += ppr_apply(block.norm_adj, restart, cfg).head(nk);
  }
  return total;
}

Eigen::VectorXd minority_influence(const Eigen::MatrixXd& influence,
                                   const std::vector<NodeId>& minority_members) {
  if (minority_members.empty()) throw DataError("minority_influence: empty member set");
  Eigen::VectorXd p = Eigen::VectorXd::Zero(influence.rows());
  for (NodeId v : minority_members) {
    if (v < 0 || v >= influence.cols())
      throw DataError("minority member id " + std::to_string(v) + " out of range");
    p += influence.col(v);
  }
  return p;
}

InfluenceTable select_candidates(const Eigen::VectorXd& scores, double candidate_scale, NodeId d_max) {
  if (d_max < 1) throw DataError("select_candidates: d_max must be at least 1");
  const NodeId n = scores.size();
  NodeId k = n;
  if (std::isfinite(candidate_scale)) {
    if (candidate_scale <= 0.0) throw DataError("select_candidates: candidate scale must be positive");
    k = std::min<NodeId>(static_cast<NodeId>(std::ceil(candidate_scale * static_cast<double>(d_max))), n);
  }

  std::vector<NodeId> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](NodeId a, NodeId b) { return scores[a] > scores[b]; });

  InfluenceTable table;
  table.scores = scores;
  table.k_used = static_cast<int>(k);
  table.candidates.assign(order.begin(), order.begin() + k);
  std::sort(table.candidates.begin(), table.candidates.end());
  table.all_zero_scores = n > 0 && scores.cwiseAbs().maxCoeff() == 0.0;
  if (table.all_zero_scores)
    log::warn("candidate selection saw all-zero influence scores; consider wider meta-paths");
  return table;
}

}  // namespace sns
