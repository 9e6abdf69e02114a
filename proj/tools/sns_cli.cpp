#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "sns/bench_gen.hpp"
#include "sns/config_io.hpp"
#include "sns/dataset_io.hpp"
#include "sns/train_eval.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace sns;

namespace {

struct CommonOpts {
  std::string data;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

RunConfig resolve_config(const CommonOpts& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (o.seed) cfg.train.seed = *o.seed;
  return cfg;
}

struct SplitRun {
  Dataset ds;
  LabelSpec labels;  // masks filled
};

SplitRun load_and_split(const std::string& data, const RunConfig& cfg) {
  Dataset ds = load_dataset(data);
  const std::vector<int>& minority =
      cfg.split.minority_classes.empty() ? ds.labels.minority_classes : cfg.split.minority_classes;
  if (minority.empty())
    throw DataError(
        "no minority classes: set split.minority_classes in the config "
        "or minority_classes in the dataset schema");
  LabelSpec labels = build_imbalanced_split(ds.graph, ds.labels, cfg.split.label_rate,
                                            cfg.split.imbalance_ratio, minority,
                                            mix_seed(cfg.train.seed, 1));
  return {std::move(ds), std::move(labels)};
}

void write_json_file(const fs::path& file, const json& j) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write " + file.string());
  out << j.dump(2) << "\n";
}

json metrics_json(const MetricsReport& r) {
  json m;
  m["acc"] = r.acc;
  m["macro_f1"] = r.macro_f1;
  m["bacc"] = r.bacc;
  m["precision"] = r.precision;
  m["recall"] = r.recall;
  m["f1"] = r.f1;
  json conf = json::array();
  for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < r.confusion.cols(); ++k) row.push_back(r.confusion(i, k));
    conf.push_back(row);
  }
  m["confusion"] = conf;
  return m;
}

std::string num_text(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

std::string mu_text(double mu) { return std::isinf(mu) ? "ALL" : num_text(mu); }

SweepPoint scalar_point(const TrainConfig& t) {
  return {t.synthesis.candidate_scale, t.loss.temperature, t.loss.lambda1, t.loss.lambda2};
}

void print_dataset_summary(const Dataset& ds) {
  const NetworkSchema& s = ds.graph.schema;
  std::cerr << "dataset: " << s.num_node_types() << " node types, " << s.num_relations()
            << " relations\n";
  for (NodeTypeId t = 0; t < s.num_node_types(); ++t) {
    const auto& info = s.node_type(t);
    std::cerr << "  " << info.name << ": " << info.count << " nodes, attr_dim " << info.attr_dim
              << (t == ds.labels.target_type ? " (target)" : "") << "\n";
  }
  for (RelationId r = 0; r < s.num_relations(); ++r)
    std::cerr << "  " << s.relation(r).name << ": " << ds.graph.adjacency[r].num_edges()
              << " edges\n";
  std::int64_t labeled = 0;
  for (int c : ds.labels.labels)
    if (c != kUnlabeled) ++labeled;
  std::cerr << "  labels: " << labeled << " labeled, " << ds.labels.num_classes << " classes, "
            << ds.labels.minority_classes.size() << " minority\n";
}

// --- subcommands -----------------------------------------------------------

void run_gen(const std::string& preset, const std::string& out, std::optional<std::uint64_t> seed) {
  PlantedHinConfig pc = preset == "tiny" ? tiny_preset() : desk_preset();
  if (seed) pc.seed = *seed;
  PlantedHin hin = generate(pc);
  Dataset ds{std::move(hin.graph), std::move(hin.labels)};
  fs::create_directories(out);
  save_dataset(ds, out);
  json meta;
  meta["version"] = kVersion;
  meta["preset"] = preset;
  meta["seed"] = pc.seed;
  write_json_file(fs::path(out) / "generator.json", meta);
  print_dataset_summary(ds);
  std::cerr << "wrote dataset to " << out << "\n";
}

void run_ingest(const std::string& data, const std::string& out) {
  Dataset ds = load_dataset(data);
  fs::create_directories(out);
  save_dataset(ds, out);
  print_dataset_summary(ds);
  std::cerr << "wrote normalized dataset to " << out << "\n";
}

void run_influence(const CommonOpts& o) {
  RunConfig cfg = resolve_config(o);
  SplitRun run = load_and_split(o.data, cfg);
  auto tables = influence_tables(run.ds.graph, run.labels, cfg.train.ppr,
                                 cfg.train.synthesis.candidate_scale, cfg.train.random_neighbors);
  fs::create_directories(o.out);
  write_resolved_config(o.out, cfg);
  std::ofstream tsv(fs::path(o.out) / "influence.tsv");
  if (!tsv) throw DataError("cannot write " + (fs::path(o.out) / "influence.tsv").string());
  tsv << "class\tneighbor_type\tnode\tscore\tselected\n";
  for (const auto& [key, table] : tables) {
    const std::string& tname = run.ds.graph.schema.node_type(key.second).name;
    std::vector<std::uint8_t> selected(table.scores.size(), 0);
    for (NodeId v : table.candidates) selected[v] = 1;
    std::vector<NodeId> order(table.scores.size());
    std::iota(order.begin(), order.end(), NodeId{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](NodeId a, NodeId b) { return table.scores[a] > table.scores[b]; });
    for (NodeId v : order)
      tsv << key.first << '\t' << tname << '\t' << v << '\t' << num_text(table.scores[v]) << '\t'
          << int(selected[v]) << "\n";
    std::cerr << "class " << key.first << " / " << tname << ": " << table.candidates.size()
              << " candidates (k=" << table.k_used << (table.all_zero_scores ? ", all-zero scores" : "")
              << ")\n";
  }
}

void run_augment(const CommonOpts& o) {
  RunConfig cfg = resolve_config(o);
  SplitRun run = load_and_split(o.data, cfg);
  auto tables = influence_tables(run.ds.graph, run.labels, cfg.train.ppr,
                                 cfg.train.synthesis.candidate_scale, cfg.train.random_neighbors);
  Rng rng(mix_seed(cfg.train.seed, 2));
  SyntheticBatch batch = synthesize_batch(run.ds.graph, run.labels, tables, cfg.train.synthesis,
                                          nullptr, rng);
  Augmented aug = augment_graph(run.ds.graph, run.labels, batch);
  fs::create_directories(o.out);
  write_resolved_config(o.out, cfg);
  save_dataset(Dataset{std::move(aug.graph), std::move(aug.labels)}, o.out);
  SyntheticManifest man;
  man.first_synthetic_id = batch.first_id;
  for (const SyntheticNode& n : batch.nodes) man.nodes.push_back({n.id, n.class_id, n.parent_a, n.parent_b});
  save_manifest(man, fs::path(o.out) / "synthetic.json");
  std::cerr << "synthesized " << batch.nodes.size() << " nodes (ids from " << batch.first_id
            << "); wrote augmented dataset to " << o.out << "\n";
}

void run_train(const CommonOpts& o) {
  RunConfig cfg = resolve_config(o);
  SplitRun run = load_and_split(o.data, cfg);
  ExperimentResult res = run_experiment(run.ds.graph, run.labels, cfg.train);
  fs::create_directories(o.out);
  write_resolved_config(o.out, cfg);
  {
    std::ofstream log(fs::path(o.out) / "training_log.jsonl");
    if (!log) throw DataError("cannot write " + (fs::path(o.out) / "training_log.jsonl").string());
    for (const EpochRecord& er : res.history) {
      json rec;
      rec["epoch"] = er.epoch;
      rec["cla"] = er.losses.cla;
      rec["sem"] = er.losses.sem;
      rec["pro"] = er.losses.pro;
      rec["total"] = er.losses.total;
      rec["val_macro_f1"] = er.val_macro_f1 ? json(*er.val_macro_f1) : json(nullptr);
      log << rec.dump() << "\n";
    }
  }
  json m;
  m["version"] = kVersion;
  m["seed"] = cfg.train.seed;
  m["config_hash"] = config_digest(cfg.train, scalar_point(cfg.train));
  m["test"] = metrics_json(res.test);
  m["best_val_f1"] = res.best_val_f1;
  m["best_epoch"] = res.best_epoch;
  m["epochs_run"] = res.epochs_run;
  write_json_file(fs::path(o.out) / "metrics.json", m);
  save_checkpoint(fs::path(o.out) / "checkpoint.bin", res.state, res.batch);
  std::cerr << "test acc " << res.test.acc << ", macro-F1 " << res.test.macro_f1 << ", bacc "
            << res.test.bacc << " (best epoch " << res.best_epoch << "/" << res.epochs_run << ")\n";
}

void run_eval(const CommonOpts& o, const std::string& ckpt_file) {
  RunConfig cfg = resolve_config(o);
  SplitRun run = load_and_split(o.data, cfg);
  Checkpoint ck = load_checkpoint(ckpt_file, run.ds.graph.schema, run.labels.target_type,
                                  run.labels.num_classes);
  const HinGraph* graph = &run.ds.graph;
  const LabelSpec* labels = &run.labels;
  Augmented aug;
  if (!ck.batch.nodes.empty()) {
    aug = augment_graph(run.ds.graph, run.labels, ck.batch);
    graph = &aug.graph;
    labels = &aug.labels;
  }
  GraphOps ops = build_ops(*graph, labels->target_type);
  ForwardResult f = forward(ops, ck.state);
  MetricsReport rep = compute_metrics(predict(f.logits), labels->labels, labels->test_mask,
                                      labels->num_classes);
  fs::create_directories(o.out);
  write_resolved_config(o.out, cfg);
  json m;
  m["version"] = kVersion;
  m["seed"] = cfg.train.seed;
  m["checkpoint"] = ckpt_file;
  m["test"] = metrics_json(rep);
  write_json_file(fs::path(o.out) / "metrics.json", m);
  std::cerr << "test acc " << rep.acc << ", macro-F1 " << rep.macro_f1 << ", bacc " << rep.bacc
            << "\n";
}

void run_sweep(const CommonOpts& o, int threads) {
  RunConfig cfg = resolve_config(o);
  SplitRun run = load_and_split(o.data, cfg);
  auto rows = sweep(run.ds.graph, run.labels, cfg.train, cfg.sweep_points(), cfg.sweep_seeds(),
                    threads);
  fs::create_directories(o.out);
  write_resolved_config(o.out, cfg);
  write_sweep_rows(fs::path(o.out) / "sweep_rows.tsv", rows);
  std::size_t failed = 0;
  for (const SweepRow& r : rows)
    if (!r.error.empty()) ++failed;
  std::cerr << "swept " << cfg.sweep_points().size() << " points x " << cfg.sweep_seeds().size()
            << " seeds = " << rows.size() << " rows (" << failed << " failed)\n";
}

struct SeriesEntry {
  double value = 0;
  int runs = 0;
  double acc_mean = 0, acc_std = 0;
  double f1_mean = 0, f1_std = 0;
  double bacc_mean = 0, bacc_std = 0;
};

template <typename Getter>
std::vector<SeriesEntry> series_for(const std::vector<SweepRow>& rows, Getter value_of) {
  std::map<double, std::vector<const SweepRow*>> groups;
  for (const SweepRow& r : rows)
    if (r.error.empty()) groups[value_of(r.point)].push_back(&r);
  if (groups.size() < 2) return {};
  auto stats = [](const std::vector<double>& xs, double& mean, double& sd) {
    mean = 0;
    for (double x : xs) mean += x;
    mean /= double(xs.size());
    sd = 0;
    if (xs.size() > 1) {
      for (double x : xs) sd += (x - mean) * (x - mean);
      sd = std::sqrt(sd / double(xs.size() - 1));
    }
  };
  std::vector<SeriesEntry> out;
  for (const auto& [value, members] : groups) {
    SeriesEntry e;
    e.value = value;
    e.runs = static_cast<int>(members.size());
    std::vector<double> acc, f1, bacc;
    for (const SweepRow* r : members) {
      acc.push_back(r->test.acc);
      f1.push_back(r->test.macro_f1);
      bacc.push_back(r->test.bacc);
    }
    stats(acc, e.acc_mean, e.acc_std);
    stats(f1, e.f1_mean, e.f1_std);
    stats(bacc, e.bacc_mean, e.bacc_std);
    out.push_back(e);
  }
  return out;
}

json series_json(const std::vector<SeriesEntry>& series, bool mu_axis) {
  json arr = json::array();
  for (const SeriesEntry& e : series) {
    json row;
    row["value"] = mu_axis && std::isinf(e.value) ? json("ALL") : json(e.value);
    row["runs"] = e.runs;
    row["acc_mean"] = e.acc_mean;
    row["acc_std"] = e.acc_std;
    row["f1_mean"] = e.f1_mean;
    row["f1_std"] = e.f1_std;
    row["bacc_mean"] = e.bacc_mean;
    row["bacc_std"] = e.bacc_std;
    arr.push_back(row);
  }
  return arr;
}

void write_series_csv(const fs::path& file, const std::vector<SeriesEntry>& series, bool mu_axis) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write " + file.string());
  out << "value,runs,acc_mean,acc_std,f1_mean,f1_std,bacc_mean,bacc_std\n";
  for (const SeriesEntry& e : series)
    out << (mu_axis ? mu_text(e.value) : num_text(e.value)) << ',' << e.runs << ','
        << num_text(e.acc_mean) << ',' << num_text(e.acc_std) << ',' << num_text(e.f1_mean) << ','
        << num_text(e.f1_std) << ',' << num_text(e.bacc_mean) << ',' << num_text(e.bacc_std)
        << "\n";
}

void run_report(const std::string& rows_file, const std::string& format, const std::string& out) {
  auto rows = read_sweep_rows(rows_file);
  auto sums = summarize(rows);
  fs::create_directories(out);
  const std::map<std::string, std::vector<SeriesEntry>> series = {
      {"mu", series_for(rows, [](const SweepPoint& p) { return p.mu; })},
      {"temperature", series_for(rows, [](const SweepPoint& p) { return p.temperature; })},
      {"lambda1", series_for(rows, [](const SweepPoint& p) { return p.lambda1; })},
      {"lambda2", series_for(rows, [](const SweepPoint& p) { return p.lambda2; })},
  };
  if (format == "json") {
    json j;
    j["version"] = kVersion;
    json summary = json::array();
    for (const SweepSummary& s : sums) {
      json row;
      row["config_hash"] = s.config_hash;
      row["mu"] = std::isinf(s.point.mu) ? json("ALL") : json(s.point.mu);
      row["temperature"] = s.point.temperature;
      row["lambda1"] = s.point.lambda1;
      row["lambda2"] = s.point.lambda2;
      row["runs"] = s.runs;
      row["acc_mean"] = s.acc_mean;
      row["acc_std"] = s.acc_std;
      row["f1_mean"] = s.f1_mean;
      row["f1_std"] = s.f1_std;
      row["bacc_mean"] = s.bacc_mean;
      row["bacc_std"] = s.bacc_std;
      summary.push_back(row);
    }
    j["summary"] = summary;
    json ser;
    for (const auto& [name, entries] : series)
      if (!entries.empty()) ser[name] = series_json(entries, name == "mu");
    j["series"] = ser;
    write_json_file(fs::path(out) / "report.json", j);
  } else {
    std::ofstream csv(fs::path(out) / "summary.csv");
    if (!csv) throw DataError("cannot write " + (fs::path(out) / "summary.csv").string());
    csv << "config_hash,mu,temperature,lambda1,lambda2,runs,acc_mean,acc_std,f1_mean,f1_std,"
           "bacc_mean,bacc_std\n";
    for (const SweepSummary& s : sums)
      csv << s.config_hash << ',' << mu_text(s.point.mu) << ',' << num_text(s.point.temperature)
          << ',' << num_text(s.point.lambda1) << ',' << num_text(s.point.lambda2) << ',' << s.runs
          << ',' << num_text(s.acc_mean) << ',' << num_text(s.acc_std) << ',' << num_text(s.f1_mean)
          << ',' << num_text(s.f1_std) << ',' << num_text(s.bacc_mean) << ','
          << num_text(s.bacc_std) << "\n";
    for (const auto& [name, entries] : series)
      if (!entries.empty())
        write_series_csv(fs::path(out) / ("series_" + name + ".csv"), entries, name == "mu");
  }
  std::size_t failed = 0;
  for (const SweepRow& r : rows)
    if (!r.error.empty()) ++failed;
  std::cerr << "report over " << rows.size() << " rows (" << failed << " failed), " << sums.size()
            << " grid points\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"imbalanced heterogeneous-graph node classification toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string gen_preset, gen_out;
  std::optional<std::uint64_t> gen_seed;
  CLI::App* gen = app.add_subcommand("gen", "generate a planted benchmark dataset");
  gen->add_option("--preset", gen_preset, "benchmark size")
      ->required()
      ->check(CLI::IsMember({"tiny", "desk"}));
  gen->add_option("--out", gen_out, "output dataset directory")->required();
  gen->add_option("--seed", gen_seed, "override the preset seed");
  gen->callback([&] { run_gen(gen_preset, gen_out, gen_seed); });

  std::string ingest_data, ingest_out;
  CLI::App* ingest = app.add_subcommand("ingest", "validate a dataset and write it back normalized");
  ingest->add_option("--data", ingest_data, "dataset directory")->required();
  ingest->add_option("--out", ingest_out, "output dataset directory")->required();
  ingest->callback([&] { run_ingest(ingest_data, ingest_out); });

  auto add_common = [](CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--data", o.data, "dataset directory")->required();
    cmd->add_option("--config", o.config, "run config JSON (defaults apply when omitted)");
    cmd->add_option("--out", o.out, "output directory")->required();
    cmd->add_option("--seed", o.seed, "override the config seed");
  };

  CommonOpts influence_opts;
  CLI::App* influence = app.add_subcommand("influence", "rank candidate neighbors per minority class");
  add_common(influence, influence_opts);
  influence->callback([&] { run_influence(influence_opts); });

  CommonOpts augment_opts;
  CLI::App* augment = app.add_subcommand("augment", "write the synthetically re-balanced dataset");
  add_common(augment, augment_opts);
  augment->callback([&] { run_augment(augment_opts); });

  CommonOpts train_opts;
  CLI::App* train = app.add_subcommand("train", "train and evaluate one configuration");
  add_common(train, train_opts);
  train->callback([&] { run_train(train_opts); });

  CommonOpts eval_opts;
  std::string eval_ckpt;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a saved checkpoint on the test split");
  add_common(eval, eval_opts);
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint file from train")->required();
  eval->callback([&] { run_eval(eval_opts, eval_ckpt); });

  CommonOpts sweep_opts;
  int sweep_threads = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "grid search over mu/temperature/lambdas");
  add_common(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--threads", sweep_threads, "worker threads")->capture_default_str();
  sweep_cmd->callback([&] { run_sweep(sweep_opts, sweep_threads); });

  std::string report_rows, report_format = "csv", report_out;
  CLI::App* report = app.add_subcommand("report", "aggregate sweep rows into summaries and series");
  report->add_option("--rows", report_rows, "sweep_rows.tsv from sweep")->required();
  report->add_option("--format", report_format, "output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  report->add_option("--out", report_out, "output directory")->required();
  report->callback([&] { run_report(report_rows, report_format, report_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
