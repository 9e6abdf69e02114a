#pragma once

#include <filesystem>
#include <optional>

#include "sns/objective.hpp"
#include "sns/splits.hpp"

namespace sns {

struct TrainConfig {
  int epochs = 300;
  double lr = 0.01;
  int patience = 50;   // epochs without val improvement before stopping
  int eval_every = 1;
  std::uint64_t seed = 0;
  bool synthesis_enabled = true;
  // Ablation: ignore influence ranking and draw synthetic neighbors uniformly
  // from all nodes of each neighbor type.
  bool random_neighbors = false;
  PprConfig ppr;
  SynthesisConfig synthesis;
  ModelConfig model;
  LossConfig loss;

  void validate() const;
};

struct MetricsReport {
  double acc = 0.0;
  double macro_f1 = 0.0;
  double bacc = 0.0;
  std::vector<double> precision, recall, f1;  // per class
  Eigen::MatrixXd confusion;                  // rows actual, cols predicted
};

// ACC = trace/total; BACC = mean recall over classes present in the mask;
// macro-F1 averages per-class F1 over all classes, counting 0 where
// precision+recall are both zero.
MetricsReport compute_metrics(const std::vector<int>& predictions, const std::vector<int>& labels,
                              const std::vector<std::uint8_t>& mask, int num_classes);

// argmax per row; ties resolve to the lower class id
std::vector<int> predict(const Eigen::MatrixXd& logits);

struct EpochRecord {
  int epoch = 0;
  LossBreakdown losses;
  std::optional<double> val_macro_f1;
};

struct ExperimentResult {
  MetricsReport test;
  double best_val_f1 = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
  std::vector<EpochRecord> history;
  ModelState state;     // best-val weights
  SyntheticBatch batch; // topology + attributes matching those weights
};

// Influence tables for every (minority class, neighbor type) pair, computed
// on the original graph with one direct meta-path per relation group. With
// random_neighbors the ranking is skipped and every node of the type is a
// candidate.
std::map<std::pair<int, NodeTypeId>, InfluenceTable> influence_tables(const HinGraph& graph,
                                                                      const LabelSpec& labels,
                                                                      const PprConfig& ppr,
                                                                      double candidate_scale,
                                                                      bool random_neighbors);

// Full pipeline on an already-split dataset: influence, one-shot topology
// synthesis, training with per-epoch attribute refresh, best-val restore,
// test evaluation on real nodes.
ExperimentResult run_experiment(const HinGraph& graph, const LabelSpec& labels,
                                const TrainConfig& cfg);

struct SweepPoint {
  double mu = kCandidateScaleAll;
  double temperature = 1.0;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
};

struct SweepRow {
  std::string config_hash;
  SweepPoint point;
  std::uint64_t seed = 0;
  MetricsReport test;
  int best_epoch = 0;
  std::string error;  // non-empty if the run failed
};

// One run per (grid point, seed); failures are recorded, not fatal. Rows come
// back in deterministic grid-major order regardless of thread count.
std::vector<SweepRow> sweep(const HinGraph& graph, const LabelSpec& labels,
                            const TrainConfig& base, const std::vector<SweepPoint>& grid,
                            const std::vector<std::uint64_t>& seeds, int threads);

struct SweepSummary {
  std::string config_hash;
  SweepPoint point;
  int runs = 0;
  double acc_mean = 0, acc_std = 0;
  double f1_mean = 0, f1_std = 0;
  double bacc_mean = 0, bacc_std = 0;
};

// Mean and sample standard deviation per grid point; failed rows excluded.
std::vector<SweepSummary> summarize(const std::vector<SweepRow>& rows);

void write_sweep_rows(const std::filesystem::path& file, const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_sweep_rows(const std::filesystem::path& file);

// stable digest of the hyper-parameters that distinguish sweep rows
std::string config_digest(const TrainConfig& cfg, const SweepPoint& point);

}  // namespace sns
