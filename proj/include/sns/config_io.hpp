#pragma once

#include <filesystem>
#include <string>

#include "sns/train_eval.hpp"

namespace sns {

inline constexpr char kVersion[] = "0.1.0";

// How labeled nodes are split into train/val/test before a run. An empty
// minority_classes list defers to the list stored with the dataset.
struct SplitSettings {
  double label_rate = 0.06;
  double imbalance_ratio = 0.1;
  std::vector<int> minority_classes;

  void validate() const;
};

// Grid for the sweep subcommand. An empty dimension inherits the scalar
// value from the main config; empty seeds inherit the main seed.
struct SweepGrid {
  std::vector<double> mu;
  std::vector<double> temperature;
  std::vector<double> lambda1;
  std::vector<double> lambda2;
  std::vector<std::uint64_t> seeds;
};

struct RunConfig {
  TrainConfig train;
  SplitSettings split;
  SweepGrid sweep;

  void validate() const;
  // Cartesian product, mu-major / lambda2-minor, empty dimensions resolved
  // against the scalar train settings.
  std::vector<SweepPoint> sweep_points() const;
  std::vector<std::uint64_t> sweep_seeds() const;
};

// JSON round trip. Every key is optional and defaults to the struct value;
// unknown keys at any level are rejected. mu values are numbers or "ALL".
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& file);

// Fully resolved echo (including inherited sweep dimensions and the library
// version); parses back to an identical config.
std::string dump_run_config(const RunConfig& cfg);

// Writes the echo to <dir>/config.resolved.json, the reproducibility record
// every subcommand leaves behind.
void write_resolved_config(const std::filesystem::path& dir, const RunConfig& cfg);

}  // namespace sns
