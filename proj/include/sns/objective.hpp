#pragma once

#include "sns/encoder.hpp"

namespace sns {

struct LossConfig {
  double lambda1 = 1.0;     // semantic term weight
  double lambda2 = 1.0;     // prototype term weight
  double temperature = 1.0;
  // The semantic loss as written uses positive edges only; this adds one
  // uniformly sampled non-neighbor per positive term.
  bool negative_sampling = false;

  void validate() const;  // lambdas >= 0, temperature > 0
};

struct LossBreakdown {
  double cla = 0.0;
  double sem = 0.0;
  double proto_e = 0.0;
  double proto_o = 0.0;
  double pro = 0.0;
  double total = 0.0;  // cla + lambda1*sem + lambda2*pro
  std::map<NodeTypeId, double> sem_per_type;
};

// Mean softmax cross-entropy over masked rows. When dlogits is non-null it
// receives (softmax - onehot)/N on masked rows, zero elsewhere.
double classification_loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                           const std::vector<std::uint8_t>& train_mask, Eigen::MatrixXd* dlogits);

// Per neighbor type: -(1/|targets|) sum_i (1/|hood|) sum_{j in hood}
// A_{ij} log sigmoid(p_i . p_j), where hood is the union of that type's
// 1-hop neighbors of synthetic nodes and p comes from the semantic heads.
// Summed over types. With dz non-null, gradient contributions scaled by
// grad_scale are accumulated into dz (per type) and into the head weights.
// neg_rng is required when negative_sampling is set.
double semantic_loss(const GraphOps& ops, NodeId first_synthetic,
                     const std::vector<Eigen::MatrixXd>& z, ModelState& state,
                     std::map<NodeTypeId, double>* per_type, std::vector<Eigen::MatrixXd>* dz,
                     double grad_scale, bool negative_sampling, Rng* neg_rng);

// Per-target aggregate of projections: (q_i + sum_k mean_{j in N_k(i)} q_j)
// / (1 + K); an empty neighbor set contributes zero but K stays fixed.
Eigen::MatrixXd semantic_embeddings(const GraphOps& ops, const std::vector<Eigen::MatrixXd>& q);

struct PrototypeResult {
  double e = 0.0;
  double o = 0.0;
  double pro = 0.0;  // (e + o) / 2
};

// Softmax-contrastive pull of each synthetic node toward its own class
// prototype, in both the projection domain (e) and the aggregated semantic
// domain (o). Prototypes are class means over labeled real train nodes and
// stay inside the differentiation graph.
PrototypeResult prototype_loss(const GraphOps& ops, const LabelSpec& labels_aug,
                               NodeId first_synthetic, const std::vector<Eigen::MatrixXd>& z,
                               ModelState& state, double temperature,
                               std::vector<Eigen::MatrixXd>* dz, double grad_scale);

struct ObjectiveGrads {
  Eigen::MatrixXd dlogits;
  std::vector<Eigen::MatrixXd> dz;  // per type
};

// Full objective on one forward pass. With grads non-null, fills upstream
// gradients for encoder backward and accumulates head-weight gradients into
// state (lambda scaling applied). Skips the synthetic-only terms when the
// graph has no synthetic nodes.
LossBreakdown evaluate_objective(const GraphOps& ops, const LabelSpec& labels_aug,
                                 NodeId first_synthetic, const ForwardResult& fwd,
                                 ModelState& state, const LossConfig& cfg, ObjectiveGrads* grads,
                                 Rng* neg_rng = nullptr);

}  // namespace sns
