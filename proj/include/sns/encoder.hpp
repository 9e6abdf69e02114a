#pragma once

#include <Eigen/Core>
#include <array>
#include <filesystem>

#include "sns/hin_graph.hpp"
#include "sns/synthesis.hpp"

namespace sns {

struct ModelConfig {
  int hidden_dim = 16;
  int embed_dim = 16;
  int proj_dim = 8;
  std::uint64_t seed = 0;

  void validate() const;  // all dims >= 1
};

// Named parameter with its gradient and Adam moment buffers.
struct Tensor {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;
  Eigen::MatrixXd m;
  Eigen::MatrixXd v;
};

enum class HeadKind { Semantic, Projection };

// Flat registry of every learnable tensor plus role indices into it.
// Creation order is fixed, which pins both the seeded initialization and the
// checkpoint layout:
//   per type: input projection (attributed) or embedding table;
//   per type: self transforms for layers 1,2;
//   per relation: message weights for layers 1,2;
//   classifier; per type: semantic head (2 tensors); per type: projection
//   head (2 tensors).
class ModelState {
 public:
  static ModelState init(const NetworkSchema& schema, NodeTypeId target_type, int num_classes,
                         const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  NodeTypeId target_type() const { return target_; }
  int num_classes() const { return classes_; }

  std::vector<Tensor>& tensors() { return tensors_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }

  Tensor& input(NodeTypeId t) { return tensors_[w_in_[t]]; }
  Tensor& self_weight(NodeTypeId t, int layer) { return tensors_[w_self_[t][layer]]; }
  Tensor& relation_weight(RelationId r, int layer) { return tensors_[w_rel_[r][layer]]; }
  Tensor& classifier() { return tensors_[w_cls_]; }
  Tensor& head(HeadKind kind, NodeTypeId t, int layer) {
    return tensors_[(kind == HeadKind::Semantic ? mlp_s_ : mlp_p_)[t][layer]];
  }
  const Tensor& input(NodeTypeId t) const { return tensors_[w_in_[t]]; }
  const Tensor& self_weight(NodeTypeId t, int layer) const { return tensors_[w_self_[t][layer]]; }
  const Tensor& relation_weight(RelationId r, int layer) const {
    return tensors_[w_rel_[r][layer]];
  }
  const Tensor& classifier() const { return tensors_[w_cls_]; }
  const Tensor& head(HeadKind kind, NodeTypeId t, int layer) const {
    return tensors_[(kind == HeadKind::Semantic ? mlp_s_ : mlp_p_)[t][layer]];
  }

  bool type_is_attributed(NodeTypeId t) const { return attributed_[t]; }
  int num_types() const { return static_cast<int>(w_in_.size()); }

  void zero_grad();
  // Parameter mutation (init, adam, checkpoint load) invalidates outstanding tapes.
  std::uint64_t version() const { return version_; }
  void bump_version() { ++version_; }

  int adam_step_count() const { return adam_t_; }
  void set_adam_step_count(int t) { adam_t_ = t; }

 private:
  ModelConfig cfg_;
  NodeTypeId target_ = -1;
  int classes_ = 0;
  std::vector<Tensor> tensors_;
  std::vector<int> w_in_;
  std::vector<std::array<int, 2>> w_self_;
  std::vector<std::array<int, 2>> w_rel_;
  int w_cls_ = -1;
  std::vector<std::array<int, 2>> mlp_s_;
  std::vector<std::array<int, 2>> mlp_p_;
  std::vector<bool> attributed_;
  std::uint64_t version_ = 0;
  int adam_t_ = 0;
};

// Graph-derived operators shared by every forward/backward pass: receiver-
// normalized message matrices per relation and the binary target-to-neighbor
// union adjacency per neighbor type (any first-order relation links, used by
// the loss terms).
struct GraphOps {
  const HinGraph* graph = nullptr;
  NodeTypeId target_type = -1;
  std::vector<SparseMat> recv;                    // per relation: dst x src, rows /= in-degree
  std::vector<std::vector<RelationId>> incoming;  // per type
  std::map<NodeTypeId, SparseMat> target_adj;     // targets x |A_k|, binary
  std::map<NodeTypeId, SparseMat> target_mean;    // target_adj with rows /= degree
};

GraphOps build_ops(const HinGraph& graph, NodeTypeId target_type);

// Everything backward needs to replay the two-layer pass.
struct ForwardResult {
  std::vector<Eigen::MatrixXd> h0;    // per type, post input projection
  std::vector<Eigen::MatrixXd> pre1;  // pre-activation, layer 1
  std::vector<Eigen::MatrixXd> h1;
  std::vector<Eigen::MatrixXd> pre2;
  std::vector<Eigen::MatrixXd> z;     // = rectifier(pre2)
  Eigen::MatrixXd logits;             // targets x m
  std::uint64_t version = 0;          // ModelState::version at forward time
};

ForwardResult forward(const GraphOps& ops, const ModelState& state);

// Reverse pass. dz may hold an empty matrix for types without upstream
// gradient. Accumulates parameter gradients into state; returns the gradient
// w.r.t. each type's input attribute matrix (empty for attributeless types,
// whose embedding tables receive gradients as parameters instead).
// Throws NumericalError when the tape predates the current parameters.
std::vector<Eigen::MatrixXd> backward(const GraphOps& ops, ModelState& state,
                                      const ForwardResult& fwd,
                                      const std::vector<Eigen::MatrixXd>& dz,
                                      const Eigen::MatrixXd& dlogits);

// One-hidden-layer rectifier head: out = rectifier(z W1) W2.
struct HeadCache {
  Eigen::MatrixXd hidden_pre;
  Eigen::MatrixXd out;
};

HeadCache head_forward(const ModelState& state, HeadKind kind, NodeTypeId type,
                       const Eigen::MatrixXd& z);
// Accumulates head weight gradients (scaled by the caller) into state and
// returns the gradient on z.
Eigen::MatrixXd head_backward(ModelState& state, HeadKind kind, NodeTypeId type,
                              const Eigen::MatrixXd& z, const HeadCache& cache,
                              const Eigen::MatrixXd& dout);

// Standard bias-corrected Adam over every tensor's .grad.
// Throws NumericalError naming the first tensor with a non-finite gradient.
void adam_step(ModelState& state, double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

// Versioned binary checkpoint: model config, every tensor with its Adam
// moments, the optimizer step counter, and the synthetic batch whose
// attributes the weights were trained against.
void save_checkpoint(const std::filesystem::path& file, const ModelState& state,
                     const SyntheticBatch& batch);
struct Checkpoint {
  ModelState state;
  SyntheticBatch batch;
};
// `schema` is the original (pre-augmentation) dataset schema; tensor shapes
// and the batch id range are validated against it.
Checkpoint load_checkpoint(const std::filesystem::path& file, const NetworkSchema& schema,
                           NodeTypeId target_type, int num_classes);

}  // namespace sns
