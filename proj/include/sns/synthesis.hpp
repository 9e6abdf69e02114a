#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>

#include "sns/influence.hpp"

namespace sns {

enum class OversampleMode { MatchMajority, Ratio };

struct SynthesisConfig {
  double candidate_scale = kCandidateScaleAll;  // top-k scale; ALL by default
  double keep_percent = 10.0;                   // retained-attribute fraction, [0,100]
  OversampleMode oversample = OversampleMode::MatchMajority;
  double oversample_ratio = 1.0;                // used when oversample == Ratio
  bool resample_topology_each_epoch = false;
  std::uint64_t seed = 0;

  void validate() const;
};

// One generated minority target node. Neighbor lists are indexed against the
// relation-group layout of the batch that owns it.
struct SyntheticNode {
  NodeId id = -1;  // appended after real target ids
  int class_id = -1;
  NodeId parent_a = -1;  // saliency source
  NodeId parent_b = -1;
  double blend = 0.0;  // interpolation coefficient for non-retained attributes
  std::vector<std::vector<NodeId>> neighbors;  // per relation group
  Eigen::VectorXd attributes;
};

struct SyntheticBatch {
  NodeTypeId target_type = -1;
  NodeId first_id = 0;  // == number of real target nodes
  // Mirrored relation pairs share one sampled neighbor list; each group's
  // edges are written into every member relation.
  std::vector<std::vector<RelationId>> relation_groups;
  std::vector<SyntheticNode> nodes;
  bool degree_fallback_used = false;

  NodeId size() const { return static_cast<NodeId>(nodes.size()); }
};

// Synthetic node count per minority class needed to reach the oversampling
// target (largest train class, or ratio * that).
std::map<int, NodeId> plan_counts(const LabelSpec& labels, const SynthesisConfig& cfg);

// Uniform draw from the empirical degree multiset; empty multiset falls back
// to degree 1 with a warning.
NodeId sample_degree(const std::vector<NodeId>& minority_degrees, Rng& rng, bool* fallback = nullptr);

// Uniform sample without replacement of min(degree, |candidates|) ids.
std::vector<NodeId> sample_neighbors(const InfluenceTable& candidates, NodeId degree, Rng& rng);

// Elementwise |gradient| of the loss w.r.t. one node's attribute row.
Eigen::VectorXd attribute_saliency(const Eigen::MatrixXd& grad_wrt_attrs, NodeId node);

// Retains the ceil(keep_percent*d/100) attributes of x_a with the largest
// saliency (ties to the lower index); interpolates the rest as
// blend*x_a + (1-blend)*x_b.
Eigen::VectorXd synthesize_attributes(const Eigen::VectorXd& x_a, const Eigen::VectorXd& x_b,
                                      const Eigen::VectorXd& saliency_a, double keep_percent,
                                      double blend);

// Full batch: parents, per-relation-group topology, and attributes for every
// planned synthetic node. Influence tables are keyed by (class, neighbor
// type). `grad_wrt_target_attrs` is the loss gradient on the target
// attribute matrix from a previous iteration; pass nullptr before the first
// one (saliency then falls back to |x_a| itself).
SyntheticBatch synthesize_batch(const HinGraph& graph, const LabelSpec& labels,
                                const std::map<std::pair<int, NodeTypeId>, InfluenceTable>& tables,
                                const SynthesisConfig& cfg,
                                const Eigen::MatrixXd* grad_wrt_target_attrs, Rng& rng);

// Recomputes every synthetic attribute vector in place from the latest
// gradients, keeping parents, blend coefficients, and topology fixed.
void refresh_attributes(SyntheticBatch& batch, const HinGraph& graph, double keep_percent,
                        const Eigen::MatrixXd* grad_wrt_target_attrs);

// Maximum degree of train-mask minority nodes w.r.t. each neighbor type,
// summed across relation groups to that type (mirrored pairs count once).
std::map<NodeTypeId, NodeId> minority_max_degrees(const HinGraph& graph, const LabelSpec& labels);

// Empirical degree multiset of train-mask minority nodes for one relation.
std::vector<NodeId> minority_degree_multiset(const HinGraph& graph, const LabelSpec& labels,
                                             RelationId relation);

// Original graph plus synthetic target nodes: counts, adjacency, attribute
// rows, labels, and train mask extended; val/test untouched.
struct Augmented {
  HinGraph graph;
  LabelSpec labels;
  NodeId first_synthetic = 0;
};

Augmented augment_graph(const HinGraph& graph, const LabelSpec& labels, const SyntheticBatch& batch);

// Writes the batch's attribute rows into an already-augmented graph (after
// refresh_attributes).
void write_synthetic_attributes(HinGraph& augmented, const SyntheticBatch& batch);

}  // namespace sns
