#include "sns/encoder.hpp"

#include <cstring>
#include <fstream>

namespace sns {

void ModelConfig::validate() const {
  if (hidden_dim < 1 || embed_dim < 1 || proj_dim < 1)
    throw DataError("model dimensions must be positive");
}

namespace {

Eigen::MatrixXd init_matrix(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Rng& rng) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

inline Eigen::MatrixXd relu(const Eigen::MatrixXd& x) { return x.cwiseMax(0.0); }

// elementwise d/dx of the rectifier, applied to the upstream gradient
inline Eigen::MatrixXd relu_backward(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& up) {
  return (pre.array() > 0.0).select(up, Eigen::MatrixXd::Zero(up.rows(), up.cols()));
}

}  // namespace

ModelState ModelState::init(const NetworkSchema& schema, NodeTypeId target_type, int num_classes,
                            const ModelConfig& cfg) {
  cfg.validate();
  if (target_type < 0 || target_type >= schema.num_node_types())
    throw DataError("target type out of range");
  if (num_classes < 2) throw DataError("need at least two classes");

  ModelState s;
  s.cfg_ = cfg;
  s.target_ = target_type;
  s.classes_ = num_classes;
  Rng rng(mix_seed(cfg.seed, 0x6d6f64656cULL));

  const int n_types = schema.num_node_types();
  auto push = [&](std::string name, Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in) {
    Tensor t;
    t.name = std::move(name);
    t.value = init_matrix(rows, cols, fan_in, rng);
    t.grad = Eigen::MatrixXd::Zero(rows, cols);
    t.m = Eigen::MatrixXd::Zero(rows, cols);
    t.v = Eigen::MatrixXd::Zero(rows, cols);
    s.tensors_.push_back(std::move(t));
    return static_cast<int>(s.tensors_.size() - 1);
  };

  for (NodeTypeId t = 0; t < n_types; ++t) {
    const auto& info = schema.node_type(t);
    s.attributed_.push_back(info.attr_dim > 0);
    if (info.attr_dim > 0)
      s.w_in_.push_back(push("in." + info.name, info.attr_dim, cfg.hidden_dim, info.attr_dim));
    else
      s.w_in_.push_back(push("embed." + info.name, info.count, cfg.hidden_dim, cfg.hidden_dim));
  }
  for (NodeTypeId t = 0; t < n_types; ++t) {
    const auto& name = schema.node_type(t).name;
    s.w_self_.push_back({push("self1." + name, cfg.hidden_dim, cfg.hidden_dim, cfg.hidden_dim),
                         push("self2." + name, cfg.hidden_dim, cfg.embed_dim, cfg.hidden_dim)});
  }
  for (RelationId r = 0; r < schema.num_relations(); ++r) {
    const auto& name = schema.relation(r).name;
    s.w_rel_.push_back({push("rel1." + name, cfg.hidden_dim, cfg.hidden_dim, cfg.hidden_dim),
                        push("rel2." + name, cfg.hidden_dim, cfg.embed_dim, cfg.hidden_dim)});
  }
  s.w_cls_ = push("cls", cfg.embed_dim, num_classes, cfg.embed_dim);
  for (NodeTypeId t = 0; t < n_types; ++t) {
    const auto& name = schema.node_type(t).name;
    s.mlp_s_.push_back({push("sem1." + name, cfg.embed_dim, cfg.proj_dim, cfg.embed_dim),
                        push("sem2." + name, cfg.proj_dim, cfg.proj_dim, cfg.proj_dim)});
  }
  for (NodeTypeId t = 0; t < n_types; ++t) {
    const auto& name = schema.node_type(t).name;
    s.mlp_p_.push_back({push("proj1." + name, cfg.embed_dim, cfg.proj_dim, cfg.embed_dim),
                        push("proj2." + name, cfg.proj_dim, cfg.proj_dim, cfg.proj_dim)});
  }
  s.version_ = 1;
  return s;
}

void ModelState::zero_grad() {
  for (auto& t : tensors_) t.grad.setZero();
}

GraphOps build_ops(const HinGraph& graph, NodeTypeId target_type) {
  graph.validate();
  GraphOps ops;
  ops.graph = &graph;
  ops.target_type = target_type;
  const auto& schema = graph.schema;

  ops.incoming.resize(schema.num_node_types());
  for (RelationId r = 0; r < schema.num_relations(); ++r) {
    const auto& rel = schema.relation(r);
    ops.incoming[rel.dst].push_back(r);

    // receiver-normalized transpose: rows are dst nodes
    const auto& adj = graph.adjacency[r];
    std::vector<Eigen::Triplet<double, std::int64_t>> trips;
    trips.reserve(static_cast<std::size_t>(adj.num_edges()));
    auto t = adj.transposed();
    for (NodeId d = 0; d < t.rows(); ++d) {
      const auto row = t.row(d);
      if (row.empty()) continue;
      const double w = 1.0 / static_cast<double>(row.size());
      for (NodeId src : row) trips.emplace_back(d, src, w);
    }
    SparseMat recv(schema.node_type(rel.dst).count, schema.node_type(rel.src).count);
    recv.setFromTriplets(trips.begin(), trips.end());
    ops.recv.push_back(std::move(recv));
  }

  // binary union adjacency target x neighbor-type per neighbor type
  const NodeId n_t = graph.num_nodes(target_type);
  for (NodeTypeId k : neighbor_types(schema, target_type)) {
    std::vector<Eigen::Triplet<double, std::int64_t>> trips;
    for (RelationId r : first_order_relations(schema, target_type)) {
      const auto& rel = schema.relation(r);
      const NodeTypeId other = (rel.src == target_type) ? rel.dst : rel.src;
      if (other != k) continue;
      auto oriented = target_to_neighbor(graph, r, target_type);
      for (NodeId i = 0; i < oriented.rows(); ++i)
        for (NodeId j : oriented.row(i)) trips.emplace_back(i, j, 1.0);
    }
    SparseMat adj(n_t, graph.num_nodes(k));
    adj.setFromTriplets(trips.begin(), trips.end(),
                        [](const double&, const double&) { return 1.0; });

    SparseMat mean = adj;
    for (NodeId i = 0; i < mean.rows(); ++i) {
      const auto deg = mean.outerIndexPtr()[i + 1] - mean.outerIndexPtr()[i];
      if (deg == 0) continue;
      const double w = 1.0 / static_cast<double>(deg);
      for (SparseMat::InnerIterator it(mean, i); it; ++it) it.valueRef() = w;
    }
    ops.target_adj.emplace(k, std::move(adj));
    ops.target_mean.emplace(k, std::move(mean));
  }
  return ops;
}

ForwardResult forward(const GraphOps& ops, const ModelState& state) {
  const auto& graph = *ops.graph;
  const int n_types = graph.schema.num_node_types();
  if (n_types != state.num_types()) throw DataError("model was built for a different schema");

  ForwardResult f;
  f.version = state.version();
  f.h0.resize(n_types);
  f.pre1.resize(n_types);
  f.h1.resize(n_types);
  f.pre2.resize(n_types);
  f.z.resize(n_types);

  for (NodeTypeId t = 0; t < n_types; ++t) {
    if (state.type_is_attributed(t)) {
      const auto& x = graph.attributes[t];
      const auto& w = state.input(t).value;
      if (x.cols() != w.rows()) throw DataError("attribute width does not match the model");
      f.h0[t] = x * w;
    } else {
      const auto& table = state.input(t).value;
      if (table.rows() != graph.num_nodes(t))
        throw DataError("embedding table does not match node count for type '" +
                        graph.schema.node_type(t).name + "'");
      f.h0[t] = table;
    }
  }

  for (int layer = 0; layer < 2; ++layer) {
    const auto& h_prev = (layer == 0) ? f.h0 : f.h1;
    auto& pre = (layer == 0) ? f.pre1 : f.pre2;
    for (NodeTypeId t = 0; t < n_types; ++t) {
      pre[t] = h_prev[t] * state.self_weight(t, layer).value;
      const auto& in = ops.incoming[t];
      if (!in.empty()) {
        const double inv = 1.0 / static_cast<double>(in.size());
        for (RelationId r : in) {
          const NodeTypeId src = graph.schema.relation(r).src;
          pre[t].noalias() +=
              inv * (ops.recv[r] * (h_prev[src] * state.relation_weight(r, layer).value));
        }
      }
      ((layer == 0) ? f.h1 : f.z)[t] = relu(pre[t]);
    }
  }
  f.logits = f.z[ops.target_type] * state.classifier().value;
  return f;
}

std::vector<Eigen::MatrixXd> backward(const GraphOps& ops, ModelState& state,
                                      const ForwardResult& fwd,
                                      const std::vector<Eigen::MatrixXd>& dz,
                                      const Eigen::MatrixXd& dlogits) {
  if (fwd.version != state.version())
    throw NumericalError("forward tape is stale; parameters changed since it was recorded");
  const auto& graph = *ops.graph;
  const int n_types = graph.schema.num_node_types();

  // gradient flowing into z per type
  std::vector<Eigen::MatrixXd> dcur(n_types);
  for (NodeTypeId t = 0; t < n_types; ++t)
    dcur[t] = (static_cast<int>(dz.size()) > t && dz[t].size() > 0)
                  ? dz[t]
                  : Eigen::MatrixXd::Zero(fwd.z[t].rows(), fwd.z[t].cols());

  if (dlogits.size() > 0) {
    const NodeTypeId t = ops.target_type;
    state.classifier().grad.noalias() += fwd.z[t].transpose() * dlogits;
    dcur[t].noalias() += dlogits * state.classifier().value.transpose();
  }

  std::vector<Eigen::MatrixXd> dprev(n_types);
  for (int layer = 1; layer >= 0; --layer) {
    const auto& h_prev = (layer == 0) ? fwd.h0 : fwd.h1;
    const auto& pre = (layer == 0) ? fwd.pre1 : fwd.pre2;
    for (NodeTypeId t = 0; t < n_types; ++t)
      dprev[t] = Eigen::MatrixXd::Zero(h_prev[t].rows(), h_prev[t].cols());

    for (NodeTypeId t = 0; t < n_types; ++t) {
      const Eigen::MatrixXd da = relu_backward(pre[t], dcur[t]);
      state.self_weight(t, layer).grad.noalias() += h_prev[t].transpose() * da;
      dprev[t].noalias() += da * state.self_weight(t, layer).value.transpose();

      const auto& in = ops.incoming[t];
      if (in.empty()) continue;
      const double inv = 1.0 / static_cast<double>(in.size());
      for (RelationId r : in) {
        const NodeTypeId src = graph.schema.relation(r).src;
        const Eigen::MatrixXd back = ops.recv[r].transpose() * da;  // src-major
        state.relation_weight(r, layer).grad.noalias() +=
            inv * (h_prev[src].transpose() * back);
        dprev[src].noalias() += inv * (back * state.relation_weight(r, layer).value.transpose());
      }
    }
    dcur.swap(dprev);
  }

  std::vector<Eigen::MatrixXd> dattr(n_types);
  for (NodeTypeId t = 0; t < n_types; ++t) {
    if (state.type_is_attributed(t)) {
      state.input(t).grad.noalias() += graph.attributes[t].transpose() * dcur[t];
      dattr[t] = dcur[t] * state.input(t).value.transpose();
    } else {
      state.input(t).grad.noalias() += dcur[t];
    }
  }
  return dattr;
}

HeadCache head_forward(const ModelState& state, HeadKind kind, NodeTypeId type,
                       const Eigen::MatrixXd& z) {
  HeadCache c;
  c.hidden_pre = z * state.head(kind, type, 0).value;
  c.out = relu(c.hidden_pre) * state.head(kind, type, 1).value;
  return c;
}

Eigen::MatrixXd head_backward(ModelState& state, HeadKind kind, NodeTypeId type,
                              const Eigen::MatrixXd& z, const HeadCache& cache,
                              const Eigen::MatrixXd& dout) {
  const Eigen::MatrixXd hidden = relu(cache.hidden_pre);
  state.head(kind, type, 1).grad.noalias() += hidden.transpose() * dout;
  const Eigen::MatrixXd dhidden =
      relu_backward(cache.hidden_pre, dout * state.head(kind, type, 1).value.transpose());
  state.head(kind, type, 0).grad.noalias() += z.transpose() * dhidden;
  return dhidden * state.head(kind, type, 0).value.transpose();
}

void adam_step(ModelState& state, double lr, double beta1, double beta2, double eps) {
  if (lr <= 0.0) throw DataError("learning rate must be positive");
  const int t = state.adam_step_count() + 1;
  state.set_adam_step_count(t);
  const double bc1 = 1.0 - std::pow(beta1, t);
  const double bc2 = 1.0 - std::pow(beta2, t);
  for (auto& p : state.tensors()) {
    if (!p.grad.allFinite()) throw NumericalError("non-finite gradient in tensor '" + p.name + "'");
    p.m = beta1 * p.m + (1.0 - beta1) * p.grad;
    p.v = beta2 * p.v + (1.0 - beta2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -=
        lr * (p.m.array() / bc1) / ((p.v.array() / bc2).sqrt() + eps);
  }
  state.bump_version();
}

namespace {

void write_bytes(std::ofstream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

template <typename T>
void write_pod(std::ofstream& out, T v) {
  write_bytes(out, &v, sizeof(T));
}

void write_string(std::ofstream& out, const std::string& s) {
  write_pod<std::uint64_t>(out, s.size());
  write_bytes(out, s.data(), s.size());
}

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
  write_pod<std::int64_t>(out, m.rows());
  write_pod<std::int64_t>(out, m.cols());
  write_bytes(out, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
}

void read_bytes(std::ifstream& in, void* data, std::size_t n) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (!in) throw DataError("checkpoint truncated");
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v;
  read_bytes(in, &v, sizeof(T));
  return v;
}

std::string read_string(std::ifstream& in) {
  auto n = read_pod<std::uint64_t>(in);
  if (n > (1u << 20)) throw DataError("checkpoint string too long");
  std::string s(n, '\0');
  read_bytes(in, s.data(), n);
  return s;
}

Eigen::MatrixXd read_matrix(std::ifstream& in) {
  auto rows = read_pod<std::int64_t>(in);
  auto cols = read_pod<std::int64_t>(in);
  if (rows < 0 || cols < 0 || rows * cols > (1ll << 32))
    throw DataError("checkpoint matrix has implausible shape");
  Eigen::MatrixXd m(rows, cols);
  read_bytes(in, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
  return m;
}

constexpr char kMagic[8] = {'S', 'N', 'S', 'C', 'K', 'P', 'T', '1'};

}  // namespace

void save_checkpoint(const std::filesystem::path& file, const ModelState& state,
                     const SyntheticBatch& batch) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint '" + file.string() + "'");
  write_bytes(out, kMagic, sizeof(kMagic));
  const auto& cfg = state.config();
  write_pod<std::int32_t>(out, cfg.hidden_dim);
  write_pod<std::int32_t>(out, cfg.embed_dim);
  write_pod<std::int32_t>(out, cfg.proj_dim);
  write_pod<std::uint64_t>(out, cfg.seed);
  write_pod<std::int32_t>(out, state.target_type());
  write_pod<std::int32_t>(out, state.num_classes());
  write_pod<std::int32_t>(out, state.adam_step_count());

  write_pod<std::uint64_t>(out, state.tensors().size());
  for (const auto& t : state.tensors()) {
    write_string(out, t.name);
    write_matrix(out, t.value);
    write_matrix(out, t.m);
    write_matrix(out, t.v);
  }

  write_pod<std::int32_t>(out, batch.target_type);
  write_pod<std::int64_t>(out, batch.first_id);
  write_pod<std::uint64_t>(out, batch.relation_groups.size());
  for (const auto& g : batch.relation_groups) {
    write_pod<std::uint64_t>(out, g.size());
    for (RelationId r : g) write_pod<std::int32_t>(out, r);
  }
  write_pod<std::uint64_t>(out, batch.nodes.size());
  for (const auto& n : batch.nodes) {
    write_pod<std::int64_t>(out, n.id);
    write_pod<std::int32_t>(out, n.class_id);
    write_pod<std::int64_t>(out, n.parent_a);
    write_pod<std::int64_t>(out, n.parent_b);
    write_pod<double>(out, n.blend);
    write_pod<std::uint64_t>(out, n.neighbors.size());
    for (const auto& list : n.neighbors) {
      write_pod<std::uint64_t>(out, list.size());
      for (NodeId v : list) write_pod<std::int64_t>(out, v);
    }
    write_matrix(out, n.attributes);
  }
  if (!out) throw DataError("checkpoint write failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& file, const NetworkSchema& schema,
                           NodeTypeId target_type, int num_classes) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint '" + file.string() + "'");
  char magic[8];
  read_bytes(in, magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw DataError("not a checkpoint file: '" + file.string() + "'");

  ModelConfig cfg;
  cfg.hidden_dim = read_pod<std::int32_t>(in);
  cfg.embed_dim = read_pod<std::int32_t>(in);
  cfg.proj_dim = read_pod<std::int32_t>(in);
  cfg.seed = read_pod<std::uint64_t>(in);
  const auto saved_target = read_pod<std::int32_t>(in);
  const auto saved_classes = read_pod<std::int32_t>(in);
  const auto adam_t = read_pod<std::int32_t>(in);
  if (saved_target != target_type) throw DataError("checkpoint was trained on a different target type");
  if (saved_classes != num_classes) throw DataError("checkpoint class count does not match");

  Checkpoint ck;
  ck.state = ModelState::init(schema, target_type, num_classes, cfg);
  ck.state.set_adam_step_count(adam_t);

  const auto n_tensors = read_pod<std::uint64_t>(in);
  if (n_tensors != ck.state.tensors().size())
    throw DataError("checkpoint tensor count does not match the schema");
  for (auto& t : ck.state.tensors()) {
    const auto name = read_string(in);
    if (name != t.name) throw DataError("checkpoint tensor '" + name + "' unexpected; wanted '" + t.name + "'");
    auto value = read_matrix(in);
    auto m = read_matrix(in);
    auto v = read_matrix(in);
    if (value.rows() != t.value.rows() || value.cols() != t.value.cols())
      throw DataError("checkpoint tensor '" + name + "' has the wrong shape");
    if (m.rows() != value.rows() || m.cols() != value.cols() || v.rows() != value.rows() ||
        v.cols() != value.cols())
      throw DataError("checkpoint moment shapes do not match tensor '" + name + "'");
    t.value = std::move(value);
    t.m = std::move(m);
    t.v = std::move(v);
  }
  ck.state.bump_version();

  SyntheticBatch& b = ck.batch;
  b.target_type = read_pod<std::int32_t>(in);
  b.first_id = read_pod<std::int64_t>(in);
  const auto n_groups = read_pod<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < n_groups; ++i) {
    const auto sz = read_pod<std::uint64_t>(in);
    std::vector<RelationId> g;
    for (std::uint64_t j = 0; j < sz; ++j) {
      auto r = read_pod<std::int32_t>(in);
      if (r < 0 || r >= schema.num_relations()) throw DataError("checkpoint relation id out of range");
      g.push_back(r);
    }
    b.relation_groups.push_back(std::move(g));
  }
  const auto n_nodes = read_pod<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < n_nodes; ++i) {
    SyntheticNode n;
    n.id = read_pod<std::int64_t>(in);
    n.class_id = read_pod<std::int32_t>(in);
    n.parent_a = read_pod<std::int64_t>(in);
    n.parent_b = read_pod<std::int64_t>(in);
    n.blend = read_pod<double>(in);
    const auto n_lists = read_pod<std::uint64_t>(in);
    if (n_lists != b.relation_groups.size())
      throw DataError("checkpoint synthetic node has the wrong group count");
    for (std::uint64_t j = 0; j < n_lists; ++j) {
      const auto sz = read_pod<std::uint64_t>(in);
      std::vector<NodeId> list;
      for (std::uint64_t l = 0; l < sz; ++l) list.push_back(read_pod<std::int64_t>(in));
      n.neighbors.push_back(std::move(list));
    }
    n.attributes = read_matrix(in);
    b.nodes.push_back(std::move(n));
  }
  if (!b.nodes.empty()) {
    if (b.target_type != target_type) throw DataError("checkpoint batch targets a different type");
    if (b.first_id != schema.node_type(target_type).count)
      throw DataError("checkpoint batch does not fit this dataset's node count");
  }
  return ck;
}

}  // namespace sns
