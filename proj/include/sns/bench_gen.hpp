#pragma once

#include "sns/splits.hpp"

namespace sns {

// One neighbor node type of a planted HIN. The type's nodes are tiled into
// one near-equal block per class; a class-c target draws each edge from its
// own block with probability `affinity`, otherwise uniformly from the other
// blocks.
struct NeighborTypeSpec {
  std::string name;
  NodeId count = 0;
  int attr_dim = 0;        // 0 = attributeless
  NodeId degree = 1;       // distinct edges per majority target
  double affinity = 1.0;
  double separation = 1.0; // scale of block attribute means (attributed types)
  double noise = 0.5;      // attribute noise around the block mean
};

struct PlantedHinConfig {
  std::string target_name = "target";
  int num_classes = 2;
  NodeId nodes_per_class = 16;
  int attr_dim = 8;          // target attributes
  double separation = 1.0;   // scale of target class means
  double noise = 0.5;
  std::vector<NeighborTypeSpec> neighbor_types;
  std::vector<int> minority_classes = {1};
  // minority targets draw round(degree * factor) edges per type, min 1
  double minority_degree_factor = 0.5;
  // attribute noise of minority targets is scaled by this factor (>1 = a
  // wider, harder minority cloud)
  double minority_noise_factor = 1.0;
  double label_rate = 0.06;
  double imbalance_ratio = 0.1;
  std::uint64_t seed = 0;

  void validate() const;  // probabilities in range, feasible edge budgets
};

struct PlantedHin {
  HinGraph graph;
  LabelSpec labels;  // imbalanced split per the config's label controls
  // ground truth per node type: class of each target, block of each neighbor
  std::vector<std::vector<int>> block_of;
};

// Deterministic generator. Node type 0 is the target; neighbor types follow
// in config order, each wired to the target by a mirrored relation pair.
PlantedHin generate(const PlantedHinConfig& cfg);

// fixed fixtures: `tiny` for oracle tests, `desk` for acceptance runs
PlantedHinConfig tiny_preset();
PlantedHinConfig desk_preset();

}  // namespace sns
