#pragma once

#include <filesystem>
#include <optional>

#include "sns/hin_graph.hpp"

namespace sns {

// On-disk dataset layout under one directory:
//   schema.json          node types, relations, label metadata
//   <relation>.edges     one "src dst" pair per line, '#' comments
//   <type>.attrs         one whitespace-separated row per node
//   labels.tsv           "node_id class_id" per line, '#' comments
// Only labels are stored; splits are built at run time (seeded).
struct Dataset {
  HinGraph graph;
  LabelSpec labels;  // masks empty until a split is built
};

Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

// Sidecar manifest for an augmented dataset: id range and provenance of the
// synthetic nodes appended to the target type.
struct SyntheticManifest {
  NodeId first_synthetic_id = 0;
  struct Entry {
    NodeId id;
    int class_id;
    NodeId parent_a;
    NodeId parent_b;
  };
  std::vector<Entry> nodes;
};

void save_manifest(const SyntheticManifest& m, const std::filesystem::path& file);
SyntheticManifest load_manifest(const std::filesystem::path& file);

}  // namespace sns
