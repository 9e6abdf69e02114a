#include "sns/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sns {

void SynthesisConfig::validate() const {
  if (keep_percent < 0.0 || keep_percent > 100.0) throw DataError("keep_percent must be in [0,100]");
  if (!(candidate_scale > 0.0)) throw DataError("candidate_scale must be positive");
  if (oversample == OversampleMode::Ratio && oversample_ratio <= 0.0)
    throw DataError("oversample ratio must be positive");
}

std::map<int, NodeId> plan_counts(const LabelSpec& labels, const SynthesisConfig& cfg) {
  auto sizes = labels.class_train_sizes();
  const NodeId max_class = *std::max_element(sizes.begin(), sizes.end());
  NodeId target = max_class;
  if (cfg.oversample == OversampleMode::Ratio)
    target = static_cast<NodeId>(std::ceil(cfg.oversample_ratio * static_cast<double>(max_class)));
  std::map<int, NodeId> plan;
  for (int c : labels.minority_classes) {
    if (sizes[c] == 0) throw DataError("minority class " + std::to_string(c) + " has no train members");
    plan[c] = std::max<NodeId>(0, target - sizes[c]);
  }
  return plan;
}

NodeId sample_degree(const std::vector<NodeId>& minority_degrees, Rng& rng, bool* fallback) {
  if (minority_degrees.empty()) {
    log::warn("empty minority degree multiset; falling back to degree 1");
    if (fallback) *fallback = true;
    return 1;
  }
  std::uniform_int_distribution<std::size_t> pick(0, minority_degrees.size() - 1);
  return minority_degrees[pick(rng)];
}

std::vector<NodeId> sample_neighbors(const InfluenceTable& candidates, NodeId degree, Rng& rng) {
  if (candidates.candidates.empty()) throw DataError("sample_neighbors: empty candidate set");
  const auto& pool = candidates.candidates;
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(degree), pool.size());
  // partial Fisher-Yates over an index scratch
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<NodeId> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
    out.push_back(pool[idx[i]]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Eigen::VectorXd attribute_saliency(const Eigen::MatrixXd& grad_wrt_attrs, NodeId node) {
  if (node < 0 || node >= grad_wrt_attrs.rows())
    throw DataError("attribute_saliency: node id out of range");
  return grad_wrt_attrs.row(node).cwiseAbs().transpose();
}

Eigen::VectorXd synthesize_attributes(const Eigen::VectorXd& x_a, const Eigen::VectorXd& x_b,
                                      const Eigen::VectorXd& saliency_a, double keep_percent,
                                      double blend) {
  const Eigen::Index d = x_a.size();
  if (x_b.size() != d || saliency_a.size() != d)
    throw DataError("synthesize_attributes: dimension mismatch");
  const auto keep = static_cast<Eigen::Index>(std::ceil(keep_percent * static_cast<double>(d) / 100.0));

  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return saliency_a[a] > saliency_a[b]; });

  Eigen::VectorXd out = blend * x_a + (1.0 - blend) * x_b;
  for (Eigen::Index i = 0; i < keep; ++i) out[order[i]] = x_a[order[i]];
  return out;
}

std::map<NodeTypeId, NodeId> minority_max_degrees(const HinGraph& graph, const LabelSpec& labels) {
  std::vector<NodeId> minorities;
  for (NodeId v = 0; v < labels.num_target_nodes(); ++v)
    if (labels.train_mask[v] && labels.labels[v] != kUnlabeled && labels.is_minority(labels.labels[v]))
      minorities.push_back(v);

  std::map<NodeTypeId, NodeId> d_max;
  for (NodeTypeId k : neighbor_types(graph.schema, labels.target_type)) d_max[k] = 0;
  std::map<NodeId, std::map<NodeTypeId, NodeId>> per_node;
  for (const auto& group : mirror_groups(graph, labels.target_type)) {
    const RelationId r = group.front();
    const auto& rel = graph.schema.relation(r);
    const NodeTypeId other = (rel.src == labels.target_type) ? rel.dst : rel.src;
    SparseAdj oriented = target_to_neighbor(graph, r, labels.target_type);
    for (NodeId v : minorities) per_node[v][other] += oriented.degree(v);
  }
  for (const auto& [v, per_type] : per_node)
    for (const auto& [k, deg] : per_type) d_max[k] = std::max(d_max[k], deg);
  return d_max;
}

std::vector<NodeId> minority_degree_multiset(const HinGraph& graph, const LabelSpec& labels,
                                             RelationId relation) {
  SparseAdj oriented = target_to_neighbor(graph, relation, labels.target_type);
  std::vector<NodeId> degrees;
  for (NodeId v = 0; v < labels.num_target_nodes(); ++v)
    if (labels.train_mask[v] && labels.labels[v] != kUnlabeled && labels.is_minority(labels.labels[v]))
      degrees.push_back(oriented.degree(v));
  return degrees;
}

namespace {

Eigen::VectorXd node_saliency(const HinGraph& graph, NodeTypeId target, NodeId parent,
                              const Eigen::MatrixXd* grads) {
  if (grads != nullptr && grads->rows() > parent) return attribute_saliency(*grads, parent);
  // no gradients yet: retain the largest-magnitude attributes of the parent
  return graph.attributes[target].row(parent).cwiseAbs().transpose();
}

}  // namespace

SyntheticBatch synthesize_batch(const HinGraph& graph, const LabelSpec& labels,
                                const std::map<std::pair<int, NodeTypeId>, InfluenceTable>& tables,
                                const SynthesisConfig& cfg,
                                const Eigen::MatrixXd* grad_wrt_target_attrs, Rng& rng) {
  cfg.validate();
  const NodeTypeId target = labels.target_type;
  if (graph.schema.node_type(target).attr_dim == 0)
    throw DataError("attribute synthesis requires an attributed target type");

  SyntheticBatch batch;
  batch.target_type = target;
  batch.first_id = graph.num_nodes(target);
  batch.relation_groups = mirror_groups(graph, target);

  // one degree multiset per relation group (mirrored pairs share it)
  std::vector<std::vector<NodeId>> multisets;
  std::vector<NodeTypeId> group_neighbor_type;
  for (const auto& group : batch.relation_groups) {
    multisets.push_back(minority_degree_multiset(graph, labels, group.front()));
    const auto& rel = graph.schema.relation(group.front());
    group_neighbor_type.push_back(rel.src == target ? rel.dst : rel.src);
  }

  const auto plan = plan_counts(labels, cfg);
  NodeId next_id = batch.first_id;
  for (const auto& [class_id, count] : plan) {
    const auto members = labels.train_members(class_id);
    if (members.empty()) throw DataError("class " + std::to_string(class_id) + " has no train members");
    for (NodeId i = 0; i < count; ++i) {
      SyntheticNode node;
      node.id = next_id++;
      node.class_id = class_id;
      std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
      node.parent_a = members[pick(rng)];
      if (members.size() >= 2) {
        do {
          node.parent_b = members[pick(rng)];
        } while (node.parent_b == node.parent_a);
      } else {
        node.parent_b = node.parent_a;
      }
      node.blend = std::uniform_real_distribution<double>(0.0, 1.0)(rng);

      for (std::size_t g = 0; g < batch.relation_groups.size(); ++g) {
        auto it = tables.find({class_id, group_neighbor_type[g]});
        if (it == tables.end())
          throw DataError("missing influence table for class " + std::to_string(class_id) + ", type '" +
                          graph.schema.node_type(group_neighbor_type[g]).name + "'");
        bool fb = false;
        const NodeId degree = sample_degree(multisets[g], rng, &fb);
        batch.degree_fallback_used |= fb;
        node.neighbors.push_back(sample_neighbors(it->second, degree, rng));
      }

      const auto& x = graph.attributes[target];
      node.attributes = synthesize_attributes(
          x.row(node.parent_a).transpose(), x.row(node.parent_b).transpose(),
          node_saliency(graph, target, node.parent_a, grad_wrt_target_attrs), cfg.keep_percent,
          node.blend);
      batch.nodes.push_back(std::move(node));
    }
  }
  return batch;
}

void refresh_attributes(SyntheticBatch& batch, const HinGraph& graph, double keep_percent,
                        const Eigen::MatrixXd* grad_wrt_target_attrs) {
  const auto& x = graph.attributes[batch.target_type];
  for (auto& node : batch.nodes) {
    node.attributes = synthesize_attributes(
        x.row(node.parent_a).transpose(), x.row(node.parent_b).transpose(),
        node_saliency(graph, batch.target_type, node.parent_a, grad_wrt_target_attrs), keep_percent,
        node.blend);
  }
}

Augmented augment_graph(const HinGraph& graph, const LabelSpec& labels, const SyntheticBatch& batch) {
  Augmented aug;
  aug.first_synthetic = batch.first_id;
  const NodeTypeId target = batch.target_type;
  const NodeId n_syn = batch.size();

  NetworkSchema schema;
  for (int t = 0; t < graph.schema.num_node_types(); ++t) {
    const auto& info = graph.schema.node_type(t);
    schema.add_node_type(info.name, info.count + (t == target ? n_syn : 0), info.attr_dim);
  }
  for (int r = 0; r < graph.schema.num_relations(); ++r) {
    const auto& rel = graph.schema.relation(r);
    schema.add_relation(rel.name, rel.src, rel.dst);
  }
  aug.graph.schema = std::move(schema);

  // new edges per relation, grouped lists written into every mirror member
  std::vector<std::vector<std::pair<NodeId, NodeId>>> extra(graph.schema.num_relations());
  for (std::size_t g = 0; g < batch.relation_groups.size(); ++g) {
    for (const auto& node : batch.nodes) {
      for (NodeId nb : node.neighbors[g]) {
        for (RelationId r : batch.relation_groups[g]) {
          const auto& rel = graph.schema.relation(r);
          if (rel.src == target)
            extra[r].emplace_back(node.id, nb);
          else
            extra[r].emplace_back(nb, node.id);
        }
      }
    }
  }
  for (int r = 0; r < graph.schema.num_relations(); ++r) {
    const auto& rel = graph.schema.relation(r);
    const auto& old = graph.adjacency[r];
    std::vector<std::pair<NodeId, NodeId>> edges;
    edges.reserve(static_cast<std::size_t>(old.num_edges()) + extra[r].size());
    for (NodeId s = 0; s < old.rows(); ++s)
      for (NodeId d : old.row(s)) edges.emplace_back(s, d);
    edges.insert(edges.end(), extra[r].begin(), extra[r].end());
    aug.graph.adjacency.push_back(SparseAdj::from_edges(aug.graph.schema.node_type(rel.src).count,
                                                        aug.graph.schema.node_type(rel.dst).count, edges));
  }

  for (int t = 0; t < graph.schema.num_node_types(); ++t) {
    if (t != target || graph.schema.node_type(t).attr_dim == 0) {
      aug.graph.attributes.push_back(graph.attributes[t]);
      continue;
    }
    Eigen::MatrixXd x(graph.attributes[t].rows() + n_syn, graph.attributes[t].cols());
    x.topRows(graph.attributes[t].rows()) = graph.attributes[t];
    aug.graph.attributes.push_back(std::move(x));
  }

  aug.labels = labels;
  aug.labels.labels.resize(labels.num_target_nodes() + n_syn, kUnlabeled);
  aug.labels.train_mask.resize(labels.num_target_nodes() + n_syn, 0);
  aug.labels.val_mask.resize(labels.num_target_nodes() + n_syn, 0);
  aug.labels.test_mask.resize(labels.num_target_nodes() + n_syn, 0);
  for (const auto& node : batch.nodes) {
    aug.labels.labels[node.id] = node.class_id;
    aug.labels.train_mask[node.id] = 1;
  }

  write_synthetic_attributes(aug.graph, batch);
  aug.graph.validate();
  aug.labels.validate();
  return aug;
}

void write_synthetic_attributes(HinGraph& augmented, const SyntheticBatch& batch) {
  auto& x = augmented.attributes[batch.target_type];
  for (const auto& node : batch.nodes) x.row(node.id) = node.attributes.transpose();
}

}  // namespace sns
