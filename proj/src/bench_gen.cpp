#include "sns/bench_gen.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace sns {

namespace {

NodeId minority_degree(NodeId degree, double factor) {
  return std::max<NodeId>(1, static_cast<NodeId>(std::lround(degree * factor)));
}

// block b of a type tiled into m near-equal slices
std::pair<NodeId, NodeId> block_range(NodeId count, int m, int b) {
  return {count * b / m, count * (b + 1) / m};
}

Eigen::MatrixXd gaussian_matrix(NodeId rows, int cols, double scale, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = scale * gauss(rng);
  return x;
}

}  // namespace

void PlantedHinConfig::validate() const {
  if (num_classes < 2) throw DataError("planted config needs at least two classes");
  if (nodes_per_class < 1) throw DataError("nodes_per_class must be >= 1");
  if (attr_dim < 1) throw DataError("the target type must be attributed");
  if (noise < 0.0 || separation < 0.0) throw DataError("noise and separation must be >= 0");
  if (!(label_rate > 0.0 && label_rate <= 1.0)) throw DataError("label_rate must be in (0,1]");
  if (!(imbalance_ratio > 0.0 && imbalance_ratio <= 1.0))
    throw DataError("imbalance_ratio must be in (0,1]");
  if (!(minority_degree_factor > 0.0 && minority_degree_factor <= 1.0))
    throw DataError("minority_degree_factor must be in (0,1]");
  if (!(minority_noise_factor > 0.0))
    throw DataError("minority_noise_factor must be positive");
  if (neighbor_types.empty()) throw DataError("at least one neighbor type is required");
  if (minority_classes.empty() ||
      static_cast<int>(minority_classes.size()) >= num_classes)
    throw DataError("minority classes must name a proper non-empty subset of classes");
  for (int c : minority_classes)
    if (c < 0 || c >= num_classes) throw DataError("minority class out of range");

  for (const auto& spec : neighbor_types) {
    if (spec.count < static_cast<NodeId>(num_classes))
      throw DataError("neighbor type '" + spec.name + "' is smaller than the class count");
    if (spec.affinity < 0.0 || spec.affinity > 1.0)
      throw DataError("affinity must be in [0,1]");
    if (spec.noise < 0.0 || spec.separation < 0.0)
      throw DataError("noise and separation must be >= 0");
    if (spec.degree < 1) throw DataError("degree must be >= 1");
    NodeId min_block = spec.count;
    for (int b = 0; b < num_classes; ++b) {
      auto [lo, hi] = block_range(spec.count, num_classes, b);
      min_block = std::min(min_block, hi - lo);
    }
    // distinct edges must fit the pool they are drawn from
    const NodeId pool = spec.affinity >= 1.0 ? min_block : spec.count;
    if (spec.degree > pool)
      throw DataError("edge budget of neighbor type '" + spec.name +
                      "' exceeds the available pool");
  }
}

PlantedHin generate(const PlantedHinConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const int m = cfg.num_classes;
  const NodeId n_t = cfg.nodes_per_class * m;

  PlantedHin out;
  auto& g = out.graph;
  g.schema.add_node_type(cfg.target_name, n_t, cfg.attr_dim);
  for (const auto& spec : cfg.neighbor_types)
    g.schema.add_node_type(spec.name, spec.count, spec.attr_dim);
  for (std::size_t k = 0; k < cfg.neighbor_types.size(); ++k) {
    const auto t = static_cast<NodeTypeId>(k + 1);
    g.schema.add_relation(cfg.target_name + "_" + cfg.neighbor_types[k].name, 0, t);
    g.schema.add_relation(cfg.neighbor_types[k].name + "_" + cfg.target_name, t, 0);
  }

  // ground truth: contiguous class/block ids
  out.block_of.resize(g.schema.num_node_types());
  out.block_of[0].resize(n_t);
  std::vector<int> target_class(n_t);
  for (NodeId i = 0; i < n_t; ++i) {
    target_class[i] = static_cast<int>(i / cfg.nodes_per_class);
    out.block_of[0][i] = target_class[i];
  }
  for (std::size_t k = 0; k < cfg.neighbor_types.size(); ++k) {
    const auto& spec = cfg.neighbor_types[k];
    auto& blocks = out.block_of[k + 1];
    blocks.resize(spec.count);
    for (int b = 0; b < m; ++b) {
      auto [lo, hi] = block_range(spec.count, m, b);
      std::fill(blocks.begin() + lo, blocks.begin() + hi, b);
    }
  }

  const std::set<int> minority(cfg.minority_classes.begin(), cfg.minority_classes.end());

  // attributes: class/block means plus isotropic noise
  g.attributes.resize(g.schema.num_node_types());
  {
    const Eigen::MatrixXd means = gaussian_matrix(m, cfg.attr_dim, cfg.separation, rng);
    Eigen::MatrixXd x = gaussian_matrix(n_t, cfg.attr_dim, cfg.noise, rng);
    for (NodeId i = 0; i < n_t; ++i) {
      if (minority.count(target_class[i])) x.row(i) *= cfg.minority_noise_factor;
      x.row(i) += means.row(target_class[i]);
    }
    g.attributes[0] = std::move(x);
  }
  for (std::size_t k = 0; k < cfg.neighbor_types.size(); ++k) {
    const auto& spec = cfg.neighbor_types[k];
    if (spec.attr_dim == 0) continue;
    const Eigen::MatrixXd means = gaussian_matrix(m, spec.attr_dim, spec.separation, rng);
    Eigen::MatrixXd x = gaussian_matrix(spec.count, spec.attr_dim, spec.noise, rng);
    for (NodeId j = 0; j < spec.count; ++j) x.row(j) += means.row(out.block_of[k + 1][j]);
    g.attributes[k + 1] = std::move(x);
  }

  // edges: own block with probability affinity, else uniform over the others
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 0; k < cfg.neighbor_types.size(); ++k) {
    const auto& spec = cfg.neighbor_types[k];
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId i = 0; i < n_t; ++i) {
      const int c = target_class[i];
      const NodeId want = minority.count(c)
                              ? minority_degree(spec.degree, cfg.minority_degree_factor)
                              : spec.degree;
      std::set<NodeId> chosen;
      for (NodeId attempt = 0;
           attempt < want * 30 && chosen.size() < static_cast<std::size_t>(want); ++attempt) {
        int b = c;
        if (m > 1 && unit(rng) >= spec.affinity) {
          std::uniform_int_distribution<int> other(0, m - 2);
          b = other(rng);
          if (b >= c) ++b;
        }
        auto [lo, hi] = block_range(spec.count, m, b);
        std::uniform_int_distribution<NodeId> pick(lo, hi - 1);
        chosen.insert(pick(rng));
      }
      for (NodeId j : chosen) edges.emplace_back(i, j);
    }
    std::vector<std::pair<NodeId, NodeId>> mirrored;
    mirrored.reserve(edges.size());
    for (auto [s, d] : edges) mirrored.emplace_back(d, s);
    g.adjacency.push_back(SparseAdj::from_edges(n_t, spec.count, edges));
    g.adjacency.push_back(SparseAdj::from_edges(spec.count, n_t, mirrored));
  }
  g.validate();

  LabelSpec full;
  full.target_type = 0;
  full.num_classes = m;
  full.labels = target_class;
  full.minority_classes = cfg.minority_classes;
  std::sort(full.minority_classes.begin(), full.minority_classes.end());
  out.labels = build_imbalanced_split(g, full, cfg.label_rate, cfg.imbalance_ratio,
                                      full.minority_classes, mix_seed(cfg.seed, 1));
  return out;
}

PlantedHinConfig tiny_preset() {
  PlantedHinConfig cfg;
  cfg.target_name = "item";
  cfg.num_classes = 2;
  cfg.nodes_per_class = 8;
  cfg.attr_dim = 6;
  cfg.separation = 2.0;
  cfg.noise = 0.25;
  cfg.neighbor_types = {
      {.name = "alpha", .count = 20, .attr_dim = 4, .degree = 3, .affinity = 0.9,
       .separation = 1.0, .noise = 0.25},
      {.name = "beta", .count = 16, .attr_dim = 0, .degree = 2, .affinity = 0.9},
  };
  cfg.minority_classes = {1};
  cfg.minority_degree_factor = 0.5;
  cfg.label_rate = 0.25;
  cfg.imbalance_ratio = 0.5;
  return cfg;
}

PlantedHinConfig desk_preset() {
  PlantedHinConfig cfg;
  cfg.target_name = "item";
  cfg.num_classes = 3;
  cfg.nodes_per_class = 500;
  cfg.attr_dim = 24;
  cfg.separation = 0.25;  // weak attribute signal: topology has to carry it
  cfg.noise = 1.0;
  cfg.neighbor_types = {
      {.name = "alpha", .count = 450, .attr_dim = 16, .degree = 4, .affinity = 0.85,
       .separation = 0.5, .noise = 1.2},
      {.name = "beta", .count = 360, .attr_dim = 0, .degree = 3, .affinity = 0.85},
  };
  cfg.minority_classes = {2};
  // a sparse, diffuse minority: fewer edges and a wider attribute cloud than
  // the majorities, so a handful of labeled anchors undersamples the class
  cfg.minority_degree_factor = 0.75;
  cfg.minority_noise_factor = 2.0;
  cfg.label_rate = 0.06;
  cfg.imbalance_ratio = 0.1;
  cfg.seed = 77;
  return cfg;
}

}  // namespace sns
