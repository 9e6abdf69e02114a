#include "sns/train_eval.hpp"

#include <atomic>
#include <cinttypes>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

namespace sns {

void TrainConfig::validate() const {
  if (epochs < 1) throw DataError("epochs must be >= 1");
  if (!(lr > 0.0)) throw DataError("learning rate must be positive");
  if (patience < 1) throw DataError("patience must be >= 1");
  if (eval_every < 1) throw DataError("eval_every must be >= 1");
  model.validate();
  loss.validate();
  synthesis.validate();
}

std::vector<int> predict(const Eigen::MatrixXd& logits) {
  std::vector<int> out(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c)
      if (logits(i, c) > logits(i, best)) best = static_cast<int>(c);
    out[i] = best;
  }
  return out;
}

MetricsReport compute_metrics(const std::vector<int>& predictions, const std::vector<int>& labels,
                              const std::vector<std::uint8_t>& mask, int num_classes) {
  if (predictions.size() != labels.size() || mask.size() != labels.size())
    throw DataError("compute_metrics: length mismatch");
  MetricsReport r;
  r.confusion = Eigen::MatrixXd::Zero(num_classes, num_classes);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!mask[i]) continue;
    const int y = labels[i], p = predictions[i];
    if (y < 0 || y >= num_classes) throw DataError("compute_metrics: unlabeled node in mask");
    if (p < 0 || p >= num_classes) throw DataError("compute_metrics: prediction out of range");
    r.confusion(y, p) += 1.0;
    ++total;
  }
  if (total == 0) throw DataError("compute_metrics: empty mask");

  r.acc = r.confusion.trace() / static_cast<double>(total);
  r.precision.assign(num_classes, 0.0);
  r.recall.assign(num_classes, 0.0);
  r.f1.assign(num_classes, 0.0);
  int present = 0;
  double recall_sum = 0.0, f1_sum = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    const double tp = r.confusion(c, c);
    const double actual = r.confusion.row(c).sum();
    const double predicted = r.confusion.col(c).sum();
    r.precision[c] = predicted > 0 ? tp / predicted : 0.0;
    r.recall[c] = actual > 0 ? tp / actual : 0.0;
    const double pr = r.precision[c] + r.recall[c];
    r.f1[c] = pr > 0 ? 2.0 * r.precision[c] * r.recall[c] / pr : 0.0;
    f1_sum += r.f1[c];
    if (actual > 0) {
      ++present;
      recall_sum += r.recall[c];
    }
  }
  r.bacc = recall_sum / static_cast<double>(present);
  r.macro_f1 = f1_sum / static_cast<double>(num_classes);
  return r;
}

std::map<std::pair<int, NodeTypeId>, InfluenceTable> influence_tables(const HinGraph& graph,
                                                                      const LabelSpec& labels,
                                                                      const PprConfig& ppr_cfg,
                                                                      double candidate_scale,
                                                                      bool random_neighbors) {
  std::map<std::pair<int, NodeTypeId>, InfluenceTable> tables;
  const NodeTypeId target = labels.target_type;

  // relation groups keyed by neighbor type
  std::map<NodeTypeId, std::vector<MetaPath>> paths;
  for (const auto& group : mirror_groups(graph, target)) {
    const auto& rel = graph.schema.relation(group.front());
    const NodeTypeId other = (rel.src == target) ? rel.dst : rel.src;
    paths[other].push_back(MetaPath{{group.front()}});
  }

  auto d_max = minority_max_degrees(graph, labels);
  for (const auto& [k, type_paths] : paths) {
    if (random_neighbors) {
      for (int c : labels.minority_classes) {
        InfluenceTable t;
        t.neighbor_type = k;
        t.class_id = c;
        t.scores = Eigen::VectorXd::Zero(graph.num_nodes(k));
        t.candidates.resize(graph.num_nodes(k));
        std::iota(t.candidates.begin(), t.candidates.end(), 0);
        t.k_used = static_cast<int>(t.candidates.size());
        tables[{c, k}] = std::move(t);
      }
      continue;
    }
    for (int c : labels.minority_classes) {
      const auto members = labels.train_members(c);
      if (members.empty())
        throw DataError("minority class " + std::to_string(c) + " has no train members");
      auto scores = aggregate_influence_scores(graph, target, k, type_paths, members, ppr_cfg);
      auto t = select_candidates(scores, candidate_scale, std::max<NodeId>(d_max[k], 1));
      t.neighbor_type = k;
      t.class_id = c;
      tables[{c, k}] = std::move(t);
    }
  }
  return tables;
}

namespace {

MetricsReport masked_metrics(const GraphOps& ops, const ModelState& state,
                             const LabelSpec& labels_aug, const std::vector<std::uint8_t>& mask,
                             int num_classes) {
  auto fwd = forward(ops, state);
  return compute_metrics(predict(fwd.logits), labels_aug.labels, mask, num_classes);
}

}  // namespace

ExperimentResult run_experiment(const HinGraph& graph, const LabelSpec& labels,
                                const TrainConfig& cfg) {
  cfg.validate();
  labels.validate();
  const NodeTypeId target = labels.target_type;

  // stage 1: influence + synthesis on the original graph
  SyntheticBatch batch;
  batch.target_type = target;
  batch.first_id = graph.num_nodes(target);
  std::map<std::pair<int, NodeTypeId>, InfluenceTable> tables;
  Rng synth_rng(mix_seed(cfg.seed, 2));
  if (cfg.synthesis_enabled && !labels.minority_classes.empty()) {
    tables = influence_tables(graph, labels, cfg.ppr, cfg.synthesis.candidate_scale,
                              cfg.random_neighbors);
    batch = synthesize_batch(graph, labels, tables, cfg.synthesis, nullptr, synth_rng);
  }
  Augmented aug = augment_graph(graph, labels, batch);
  GraphOps ops = build_ops(aug.graph, target);

  // stage 2: training
  ModelConfig model_cfg = cfg.model;
  model_cfg.seed = mix_seed(cfg.seed, 3);
  ModelState state = ModelState::init(aug.graph.schema, target, labels.num_classes, model_cfg);
  Rng neg_rng(mix_seed(cfg.seed, 4));

  ExperimentResult result;
  result.best_epoch = 0;
  double best_f1 = -1.0;
  std::vector<Eigen::MatrixXd> best_values;
  SyntheticBatch best_batch = batch;
  Eigen::MatrixXd attr_grad;  // d total / d target attributes, previous epoch

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (epoch > 1 && batch.size() > 0) {
      if (cfg.synthesis.resample_topology_each_epoch) {
        batch = synthesize_batch(graph, labels, tables, cfg.synthesis,
                                 attr_grad.size() > 0 ? &attr_grad : nullptr, synth_rng);
        aug = augment_graph(graph, labels, batch);
        ops = build_ops(aug.graph, target);
      } else {
        refresh_attributes(batch, aug.graph, cfg.synthesis.keep_percent,
                           attr_grad.size() > 0 ? &attr_grad : nullptr);
        write_synthetic_attributes(aug.graph, batch);
      }
    }

    state.zero_grad();
    auto fwd = forward(ops, state);
    ObjectiveGrads og;
    auto losses = evaluate_objective(ops, aug.labels, aug.first_synthetic, fwd, state, cfg.loss,
                                     &og, &neg_rng);
    auto dattr = backward(ops, state, fwd, og.dz, og.dlogits);
    adam_step(state, cfg.lr);
    if (dattr[target].size() > 0) attr_grad = std::move(dattr[target]);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.losses = losses;
    result.epochs_run = epoch;

    if (epoch % cfg.eval_every == 0 || epoch == cfg.epochs) {
      auto val = masked_metrics(ops, state, aug.labels, aug.labels.val_mask, labels.num_classes);
      rec.val_macro_f1 = val.macro_f1;
      if (val.macro_f1 > best_f1) {
        best_f1 = val.macro_f1;
        result.best_epoch = epoch;
        best_values.clear();
        for (const auto& t : state.tensors()) best_values.push_back(t.value);
        best_batch = batch;
      }
    }
    result.history.push_back(std::move(rec));
    if (epoch - result.best_epoch >= cfg.patience) break;
  }

  // stage 3: restore best checkpoint and evaluate on the test mask
  if (!best_values.empty()) {
    auto& tensors = state.tensors();
    for (std::size_t i = 0; i < tensors.size(); ++i) tensors[i].value = best_values[i];
    state.bump_version();
    if (cfg.synthesis.resample_topology_each_epoch && best_batch.size() > 0) {
      aug = augment_graph(graph, labels, best_batch);
      ops = build_ops(aug.graph, target);
    } else {
      write_synthetic_attributes(aug.graph, best_batch);
    }
  }
  result.best_val_f1 = best_f1;
  result.test = masked_metrics(ops, state, aug.labels, aug.labels.test_mask, labels.num_classes);
  result.state = std::move(state);
  result.batch = std::move(best_batch);
  return result;
}

std::string config_digest(const TrainConfig& cfg, const SweepPoint& point) {
  std::ostringstream os;
  os.precision(17);
  os << cfg.epochs << '|' << cfg.lr << '|' << cfg.patience << '|' << cfg.eval_every << '|'
     << cfg.synthesis_enabled << '|' << cfg.random_neighbors << '|' << cfg.ppr.alpha << '|'
     << cfg.ppr.max_iters << '|' << cfg.ppr.tol << '|' << point.mu << '|' << point.temperature
     << '|' << point.lambda1 << '|' << point.lambda2 << '|' << cfg.synthesis.keep_percent << '|'
     << static_cast<int>(cfg.synthesis.oversample) << '|' << cfg.synthesis.oversample_ratio << '|'
     << cfg.model.hidden_dim << '|' << cfg.model.embed_dim << '|' << cfg.model.proj_dim << '|'
     << cfg.loss.negative_sampling;
  const std::string s = os.str();
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

std::vector<SweepRow> sweep(const HinGraph& graph, const LabelSpec& labels,
                            const TrainConfig& base, const std::vector<SweepPoint>& grid,
                            const std::vector<std::uint64_t>& seeds, int threads) {
  if (grid.empty() || seeds.empty()) throw DataError("sweep needs a non-empty grid and seed list");
  std::vector<SweepRow> rows(grid.size() * seeds.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= rows.size()) return;
      const auto& point = grid[i / seeds.size()];
      const auto seed = seeds[i % seeds.size()];
      SweepRow row;
      row.point = point;
      row.seed = seed;
      TrainConfig cfg = base;
      cfg.seed = seed;
      cfg.synthesis.candidate_scale = point.mu;
      cfg.loss.temperature = point.temperature;
      cfg.loss.lambda1 = point.lambda1;
      cfg.loss.lambda2 = point.lambda2;
      row.config_hash = config_digest(cfg, point);
      try {
        auto result = run_experiment(graph, labels, cfg);
        row.test = result.test;
        row.best_epoch = result.best_epoch;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      rows[i] = std::move(row);
    }
  };

  const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(rows.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return rows;
}

std::vector<SweepSummary> summarize(const std::vector<SweepRow>& rows) {
  std::vector<SweepSummary> out;
  std::map<std::string, std::vector<const SweepRow*>> groups;
  std::vector<std::string> order;
  for (const auto& row : rows) {
    if (!row.error.empty()) continue;
    auto [it, fresh] = groups.try_emplace(row.config_hash);
    if (fresh) order.push_back(row.config_hash);
    it->second.push_back(&row);
  }
  auto stats = [](const std::vector<double>& xs) {
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    const double sd = xs.size() > 1 ? std::sqrt(var / (xs.size() - 1)) : 0.0;
    return std::pair{mean, sd};
  };
  for (const auto& hash : order) {
    const auto& members = groups[hash];
    SweepSummary s;
    s.config_hash = hash;
    s.point = members.front()->point;
    s.runs = static_cast<int>(members.size());
    std::vector<double> acc, f1, bacc;
    for (const auto* r : members) {
      acc.push_back(r->test.acc);
      f1.push_back(r->test.macro_f1);
      bacc.push_back(r->test.bacc);
    }
    std::tie(s.acc_mean, s.acc_std) = stats(acc);
    std::tie(s.f1_mean, s.f1_std) = stats(f1);
    std::tie(s.bacc_mean, s.bacc_std) = stats(bacc);
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

std::string mu_to_string(double mu) {
  if (!std::isfinite(mu)) return "ALL";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", mu);
  return buf;
}

double mu_from_string(const std::string& s) {
  if (s == "ALL") return kCandidateScaleAll;
  return std::stod(s);
}

}  // namespace

void write_sweep_rows(const std::filesystem::path& file, const std::vector<SweepRow>& rows) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write results file '" + file.string() + "'");
  out << "config\tseed\tmu\ttemperature\tlambda1\tlambda2\tacc\tmacro_f1\tbacc\tbest_epoch\terror\n";
  out.precision(17);
  for (const auto& r : rows) {
    out << r.config_hash << '\t' << r.seed << '\t' << mu_to_string(r.point.mu) << '\t'
        << r.point.temperature << '\t' << r.point.lambda1 << '\t' << r.point.lambda2 << '\t'
        << r.test.acc << '\t' << r.test.macro_f1 << '\t' << r.test.bacc << '\t' << r.best_epoch
        << '\t' << r.error << '\n';
  }
}

std::vector<SweepRow> read_sweep_rows(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot read results file '" + file.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("results file is empty");
  std::vector<SweepRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 11)
      throw DataError(file.string() + ":" + std::to_string(lineno) + ": expected 11 columns");
    SweepRow r;
    try {
      r.config_hash = cols[0];
      r.seed = std::stoull(cols[1]);
      r.point.mu = mu_from_string(cols[2]);
      r.point.temperature = std::stod(cols[3]);
      r.point.lambda1 = std::stod(cols[4]);
      r.point.lambda2 = std::stod(cols[5]);
      r.test.acc = std::stod(cols[6]);
      r.test.macro_f1 = std::stod(cols[7]);
      r.test.bacc = std::stod(cols[8]);
      r.best_epoch = std::stoi(cols[9]);
      r.error = cols[10];
    } catch (const std::exception&) {
      throw DataError(file.string() + ":" + std::to_string(lineno) + ": malformed row");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace sns
