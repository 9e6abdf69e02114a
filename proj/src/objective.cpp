#include "sns/objective.hpp"

#include <cmath>

namespace sns {

void LossConfig::validate() const {
  if (lambda1 < 0.0 || lambda2 < 0.0) throw DataError("loss weights must be non-negative");
  if (!(temperature > 0.0)) throw DataError("temperature must be positive");
}

namespace {

inline double log_sigmoid(double x) {
  return (x >= 0.0) ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  return (x >= 0.0) ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// log softmax of one row, in place; returns log-sum-exp
void log_softmax_row(Eigen::VectorXd& s) {
  const double mx = s.maxCoeff();
  const double lse = mx + std::log((s.array() - mx).exp().sum());
  s.array() -= lse;
}

}  // namespace

double classification_loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                           const std::vector<std::uint8_t>& train_mask, Eigen::MatrixXd* dlogits) {
  const auto n = logits.rows();
  const auto m = logits.cols();
  if (static_cast<NodeId>(labels.size()) != n || static_cast<NodeId>(train_mask.size()) != n)
    throw DataError("classification_loss: label/mask length mismatch");

  std::int64_t count = 0;
  for (NodeId i = 0; i < n; ++i) count += train_mask[i];
  if (count == 0) throw DataError("classification_loss: empty train mask");

  if (dlogits) dlogits->setZero(n, m);
  double loss = 0.0;
  const double inv = 1.0 / static_cast<double>(count);
  for (NodeId i = 0; i < n; ++i) {
    if (!train_mask[i]) continue;
    const int y = labels[i];
    if (y < 0 || y >= m) throw DataError("classification_loss: unlabeled or out-of-range class in mask");
    Eigen::VectorXd row = logits.row(i).transpose();
    log_softmax_row(row);
    loss -= row[y] * inv;
    if (dlogits) {
      dlogits->row(i) = row.array().exp().transpose() * inv;
      (*dlogits)(i, y) -= inv;
    }
  }
  return loss;
}

double semantic_loss(const GraphOps& ops, NodeId first_synthetic,
                     const std::vector<Eigen::MatrixXd>& z, ModelState& state,
                     std::map<NodeTypeId, double>* per_type, std::vector<Eigen::MatrixXd>* dz,
                     double grad_scale, bool negative_sampling, Rng* neg_rng) {
  const NodeTypeId target = ops.target_type;
  const NodeId n_t = ops.graph->num_nodes(target);
  if (per_type) per_type->clear();
  if (first_synthetic >= n_t) {
    log::warn("semantic loss skipped: no synthetic nodes");
    return 0.0;
  }
  if (negative_sampling && neg_rng == nullptr)
    throw DataError("semantic_loss: negative sampling requires an rng");

  const bool with_grad = dz != nullptr && grad_scale != 0.0;
  HeadCache cache_t = head_forward(state, HeadKind::Semantic, target, z[target]);
  Eigen::MatrixXd dp_t;
  if (with_grad) dp_t = Eigen::MatrixXd::Zero(cache_t.out.rows(), cache_t.out.cols());

  double total = 0.0;
  for (const auto& [k, adj] : ops.target_adj) {
    // neighborhood: type-k nodes adjacent to at least one synthetic target
    std::vector<std::uint8_t> in_hood(ops.graph->num_nodes(k), 0);
    NodeId hood = 0;
    for (NodeId i = first_synthetic; i < n_t; ++i)
      for (SparseMat::InnerIterator it(adj, i); it; ++it)
        if (!in_hood[it.col()]) {
          in_hood[it.col()] = 1;
          ++hood;
        }
    if (per_type) (*per_type)[k] = 0.0;
    if (hood == 0) continue;

    const bool self_pair = (k == target);
    HeadCache cache_k = self_pair ? cache_t : head_forward(state, HeadKind::Semantic, k, z[k]);
    const Eigen::MatrixXd& p_t = cache_t.out;
    const Eigen::MatrixXd& p_k = cache_k.out;
    Eigen::MatrixXd dp_k;
    if (with_grad && !self_pair) dp_k = Eigen::MatrixXd::Zero(p_k.rows(), p_k.cols());
    Eigen::MatrixXd& dp_k_ref = self_pair ? dp_t : dp_k;

    const double w = 1.0 / (static_cast<double>(n_t) * static_cast<double>(hood));
    std::uniform_int_distribution<NodeId> uk(0, ops.graph->num_nodes(k) - 1);
    double term = 0.0;
    for (NodeId i = 0; i < n_t; ++i) {
      for (SparseMat::InnerIterator it(adj, i); it; ++it) {
        const NodeId j = it.col();
        if (!in_hood[j]) continue;
        const double s = p_t.row(i).dot(p_k.row(j));
        term -= w * log_sigmoid(s);
        if (with_grad) {
          const double ds = -w * sigmoid(-s) * grad_scale;
          dp_t.row(i) += ds * p_k.row(j);
          dp_k_ref.row(j) += ds * p_t.row(i);
        }
        if (negative_sampling) {
          NodeId neg = -1;
          for (int attempt = 0; attempt < 16; ++attempt) {
            const NodeId cand = uk(*neg_rng);
            bool linked = false;
            for (SparseMat::InnerIterator jt(adj, i); jt; ++jt)
              if (jt.col() == cand) {
                linked = true;
                break;
              }
            if (!linked) {
              neg = cand;
              break;
            }
          }
          if (neg < 0) continue;
          const double sn = p_t.row(i).dot(p_k.row(neg));
          term -= w * log_sigmoid(-sn);
          if (with_grad) {
            const double ds = w * sigmoid(sn) * grad_scale;
            dp_t.row(i) += ds * p_k.row(neg);
            dp_k_ref.row(neg) += ds * p_t.row(i);
          }
        }
      }
    }
    total += term;
    if (per_type) (*per_type)[k] = term;

    if (with_grad && !self_pair)
      (*dz)[k] += head_backward(state, HeadKind::Semantic, k, z[k], cache_k, dp_k);
  }
  if (with_grad)
    (*dz)[target] += head_backward(state, HeadKind::Semantic, target, z[target], cache_t, dp_t);
  return total;
}

Eigen::MatrixXd semantic_embeddings(const GraphOps& ops, const std::vector<Eigen::MatrixXd>& q) {
  const NodeTypeId target = ops.target_type;
  Eigen::MatrixXd g = q[target];
  for (const auto& [k, mean] : ops.target_mean) g.noalias() += mean * q[k];
  g /= 1.0 + static_cast<double>(ops.target_mean.size());
  return g;
}

PrototypeResult prototype_loss(const GraphOps& ops, const LabelSpec& labels_aug,
                               NodeId first_synthetic, const std::vector<Eigen::MatrixXd>& z,
                               ModelState& state, double temperature,
                               std::vector<Eigen::MatrixXd>* dz, double grad_scale) {
  const NodeTypeId target = ops.target_type;
  const NodeId n_t = ops.graph->num_nodes(target);
  const int m = labels_aug.num_classes;
  if (!(temperature > 0.0)) throw DataError("temperature must be positive");

  // synthetic members per class
  std::vector<std::vector<NodeId>> synth(m);
  for (NodeId i = first_synthetic; i < n_t; ++i)
    if (labels_aug.labels[i] != kUnlabeled) synth[labels_aug.labels[i]].push_back(i);
  std::vector<int> active;
  for (int c = 0; c < m; ++c)
    if (!synth[c].empty()) active.push_back(c);
  if (active.empty()) {
    log::warn("prototype loss skipped: no synthetic nodes");
    return {};
  }

  // real labeled train members per class (prototype support)
  std::vector<std::vector<NodeId>> real(m);
  for (NodeId i = 0; i < std::min<NodeId>(first_synthetic, n_t); ++i)
    if (labels_aug.train_mask[i] && labels_aug.labels[i] != kUnlabeled)
      real[labels_aug.labels[i]].push_back(i);
  for (int c = 0; c < m; ++c)
    if (real[c].empty())
      throw DataError("prototype loss: class " + std::to_string(c) + " has no labeled real train node");

  const bool with_grad = dz != nullptr && grad_scale != 0.0;

  // q projections for the target and every neighbor type
  const int n_types = ops.graph->schema.num_node_types();
  std::vector<HeadCache> caches(n_types);
  std::vector<Eigen::MatrixXd> q(n_types);
  std::vector<bool> used(n_types, false);
  auto ensure_q = [&](NodeTypeId t) {
    if (used[t]) return;
    caches[t] = head_forward(state, HeadKind::Projection, t, z[t]);
    q[t] = caches[t].out;
    used[t] = true;
  };
  ensure_q(target);
  for (const auto& [k, mean] : ops.target_mean) ensure_q(k);

  const Eigen::MatrixXd g = semantic_embeddings(ops, q);
  const auto proj = q[target].cols();

  Eigen::MatrixXd protos_e(m, proj), protos_o(m, proj);
  for (int c = 0; c < m; ++c) {
    Eigen::RowVectorXd se = Eigen::RowVectorXd::Zero(proj), so = Eigen::RowVectorXd::Zero(proj);
    for (NodeId i : real[c]) {
      se += q[target].row(i);
      so += g.row(i);
    }
    protos_e.row(c) = se / static_cast<double>(real[c].size());
    protos_o.row(c) = so / static_cast<double>(real[c].size());
  }

  Eigen::MatrixXd dq_t, dg, dprotos_e, dprotos_o;
  if (with_grad) {
    dq_t = Eigen::MatrixXd::Zero(n_t, proj);
    dg = Eigen::MatrixXd::Zero(n_t, proj);
    dprotos_e = Eigen::MatrixXd::Zero(m, proj);
    dprotos_o = Eigen::MatrixXd::Zero(m, proj);
  }

  PrototypeResult out;
  const double class_inv = 1.0 / static_cast<double>(active.size());
  // each domain contributes half of L_pro
  const double domain_scale = 0.5 * grad_scale;
  for (int c : active) {
    const double w = class_inv / static_cast<double>(synth[c].size());
    for (NodeId i : synth[c]) {
      Eigen::VectorXd se = protos_e * q[target].row(i).transpose() / temperature;
      log_softmax_row(se);
      out.e -= w * se[c];
      Eigen::VectorXd so = protos_o * g.row(i).transpose() / temperature;
      log_softmax_row(so);
      out.o -= w * so[c];
      if (with_grad) {
        Eigen::VectorXd ds_e = se.array().exp();
        ds_e[c] -= 1.0;
        ds_e *= w * domain_scale / temperature;
        dq_t.row(i) += ds_e.transpose() * protos_e;
        dprotos_e += ds_e * q[target].row(i);

        Eigen::VectorXd ds_o = so.array().exp();
        ds_o[c] -= 1.0;
        ds_o *= w * domain_scale / temperature;
        dg.row(i) += ds_o.transpose() * protos_o;
        dprotos_o += ds_o * g.row(i);
      }
    }
  }
  out.pro = 0.5 * (out.e + out.o);

  if (!with_grad) return out;

  // prototypes -> real members
  for (int c = 0; c < m; ++c) {
    const double inv = 1.0 / static_cast<double>(real[c].size());
    for (NodeId i : real[c]) {
      dq_t.row(i) += inv * dprotos_e.row(c);
      dg.row(i) += inv * dprotos_o.row(c);
    }
  }

  // g -> q through the fixed-divisor aggregation
  const double agg = 1.0 / (1.0 + static_cast<double>(ops.target_mean.size()));
  std::vector<Eigen::MatrixXd> dq(n_types);
  dq[target] = dq_t + agg * dg;
  for (const auto& [k, mean] : ops.target_mean) {
    Eigen::MatrixXd contrib = agg * (mean.transpose() * dg);
    if (dq[k].size() == 0)
      dq[k] = std::move(contrib);
    else
      dq[k] += contrib;
  }

  for (NodeTypeId t = 0; t < n_types; ++t) {
    if (!used[t] || dq[t].size() == 0) continue;
    (*dz)[t] += head_backward(state, HeadKind::Projection, t, z[t], caches[t], dq[t]);
  }
  return out;
}

LossBreakdown evaluate_objective(const GraphOps& ops, const LabelSpec& labels_aug,
                                 NodeId first_synthetic, const ForwardResult& fwd,
                                 ModelState& state, const LossConfig& cfg, ObjectiveGrads* grads,
                                 Rng* neg_rng) {
  cfg.validate();
  const int n_types = ops.graph->schema.num_node_types();
  if (grads) {
    grads->dz.assign(n_types, Eigen::MatrixXd());
    for (NodeTypeId t = 0; t < n_types; ++t)
      grads->dz[t] = Eigen::MatrixXd::Zero(fwd.z[t].rows(), fwd.z[t].cols());
  }

  LossBreakdown b;
  b.cla = classification_loss(fwd.logits, labels_aug.labels, labels_aug.train_mask,
                              grads ? &grads->dlogits : nullptr);

  const NodeId n_t = ops.graph->num_nodes(ops.target_type);
  if (first_synthetic < n_t) {
    b.sem = semantic_loss(ops, first_synthetic, fwd.z, state, &b.sem_per_type,
                          grads ? &grads->dz : nullptr, cfg.lambda1, cfg.negative_sampling,
                          neg_rng);
    auto pro = prototype_loss(ops, labels_aug, first_synthetic, fwd.z, state, cfg.temperature,
                              grads ? &grads->dz : nullptr, cfg.lambda2);
    b.proto_e = pro.e;
    b.proto_o = pro.o;
    b.pro = pro.pro;
  }
  b.total = b.cla + cfg.lambda1 * b.sem + cfg.lambda2 * b.pro;
  return b;
}

}  // namespace sns
