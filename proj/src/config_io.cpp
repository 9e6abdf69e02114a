#include "sns/config_io.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"

namespace sns {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw DataError("config: " + where + ": " + what);
}

const json& expect_object(const json& j, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  return j;
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool known = false;
    for (const char* a : allowed)
      if (key == a) known = true;
    if (!known) bad(where.empty() ? key : where + "." + key, "unknown key");
  }
}

std::string join(const std::string& where, const char* key) {
  return where.empty() ? key : where + "." + key;
}

template <typename T>
void read_field(const json& j, const std::string& where, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    bad(join(where, key), "wrong value type");
  }
}

double mu_from_json(const json& v, const std::string& where) {
  if (v.is_string()) {
    if (v.get<std::string>() == "ALL") return kCandidateScaleAll;
    bad(where, "string value must be \"ALL\"");
  }
  if (!v.is_number()) bad(where, "expected a number or \"ALL\"");
  return v.get<double>();
}

json mu_to_json(double mu) {
  if (std::isinf(mu)) return json("ALL");
  return json(mu);
}

void read_mu(const json& j, const std::string& where, const char* key, double& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  out = mu_from_json(*it, join(where, key));
}

void read_mu_list(const json& j, const std::string& where, const char* key, std::vector<double>& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_array()) bad(join(where, key), "expected an array");
  out.clear();
  for (std::size_t i = 0; i < it->size(); ++i)
    out.push_back(mu_from_json((*it)[i], join(where, key) + "[" + std::to_string(i) + "]"));
}

void parse_split(const json& j, SplitSettings& out) {
  expect_object(j, "split");
  check_keys(j, "split", {"label_rate", "imbalance_ratio", "minority_classes"});
  read_field(j, "split", "label_rate", out.label_rate);
  read_field(j, "split", "imbalance_ratio", out.imbalance_ratio);
  read_field(j, "split", "minority_classes", out.minority_classes);
}

void parse_ppr(const json& j, PprConfig& out) {
  expect_object(j, "ppr");
  check_keys(j, "ppr", {"alpha", "max_iters", "tol"});
  read_field(j, "ppr", "alpha", out.alpha);
  read_field(j, "ppr", "max_iters", out.max_iters);
  read_field(j, "ppr", "tol", out.tol);
}

void parse_synthesis(const json& j, SynthesisConfig& out) {
  expect_object(j, "synthesis");
  check_keys(j, "synthesis",
             {"mu", "keep_percent", "oversample", "oversample_ratio", "resample_topology_each_epoch"});
  read_mu(j, "synthesis", "mu", out.candidate_scale);
  read_field(j, "synthesis", "keep_percent", out.keep_percent);
  if (auto it = j.find("oversample"); it != j.end()) {
    std::string mode;
    read_field(j, "synthesis", "oversample", mode);
    if (mode == "match_majority")
      out.oversample = OversampleMode::MatchMajority;
    else if (mode == "ratio")
      out.oversample = OversampleMode::Ratio;
    else
      bad("synthesis.oversample", "expected \"match_majority\" or \"ratio\"");
  }
  read_field(j, "synthesis", "oversample_ratio", out.oversample_ratio);
  read_field(j, "synthesis", "resample_topology_each_epoch", out.resample_topology_each_epoch);
}

void parse_model(const json& j, ModelConfig& out) {
  expect_object(j, "model");
  check_keys(j, "model", {"hidden_dim", "embed_dim", "proj_dim"});
  read_field(j, "model", "hidden_dim", out.hidden_dim);
  read_field(j, "model", "embed_dim", out.embed_dim);
  read_field(j, "model", "proj_dim", out.proj_dim);
}

void parse_loss(const json& j, LossConfig& out) {
  expect_object(j, "loss");
  check_keys(j, "loss", {"lambda1", "lambda2", "temperature", "negative_sampling"});
  read_field(j, "loss", "lambda1", out.lambda1);
  read_field(j, "loss", "lambda2", out.lambda2);
  read_field(j, "loss", "temperature", out.temperature);
  read_field(j, "loss", "negative_sampling", out.negative_sampling);
}

void parse_sweep(const json& j, SweepGrid& out) {
  expect_object(j, "sweep");
  check_keys(j, "sweep", {"mu", "temperature", "lambda1", "lambda2", "seeds"});
  read_mu_list(j, "sweep", "mu", out.mu);
  read_field(j, "sweep", "temperature", out.temperature);
  read_field(j, "sweep", "lambda1", out.lambda1);
  read_field(j, "sweep", "lambda2", out.lambda2);
  read_field(j, "sweep", "seeds", out.seeds);
}

}  // namespace

void SplitSettings::validate() const {
  if (!(label_rate > 0.0 && label_rate <= 1.0)) throw DataError("split.label_rate must be in (0, 1]");
  if (!(imbalance_ratio > 0.0 && imbalance_ratio <= 1.0))
    throw DataError("split.imbalance_ratio must be in (0, 1]");
  for (int c : minority_classes)
    if (c < 0) throw DataError("split.minority_classes entries must be non-negative");
}

void RunConfig::validate() const {
  train.validate();
  split.validate();
  if (!(train.ppr.alpha > 0.0 && train.ppr.alpha <= 1.0)) throw DataError("ppr.alpha must be in (0, 1]");
  if (train.ppr.max_iters < 1) throw DataError("ppr.max_iters must be >= 1");
  if (!(train.ppr.tol > 0.0)) throw DataError("ppr.tol must be positive");
  for (double m : sweep.mu)
    if (!(m > 0.0)) throw DataError("sweep.mu entries must be positive");
  for (double t : sweep.temperature)
    if (!(t > 0.0)) throw DataError("sweep.temperature entries must be positive");
  for (double l : sweep.lambda1)
    if (l < 0.0) throw DataError("sweep.lambda1 entries must be non-negative");
  for (double l : sweep.lambda2)
    if (l < 0.0) throw DataError("sweep.lambda2 entries must be non-negative");
}

std::vector<SweepPoint> RunConfig::sweep_points() const {
  auto or_scalar = [](const std::vector<double>& dim, double scalar) {
    return dim.empty() ? std::vector<double>{scalar} : dim;
  };
  const auto mus = or_scalar(sweep.mu, train.synthesis.candidate_scale);
  const auto temps = or_scalar(sweep.temperature, train.loss.temperature);
  const auto l1s = or_scalar(sweep.lambda1, train.loss.lambda1);
  const auto l2s = or_scalar(sweep.lambda2, train.loss.lambda2);
  std::vector<SweepPoint> points;
  points.reserve(mus.size() * temps.size() * l1s.size() * l2s.size());
  for (double m : mus)
    for (double t : temps)
      for (double l1 : l1s)
        for (double l2 : l2s) points.push_back({m, t, l1, l2});
  return points;
}

std::vector<std::uint64_t> RunConfig::sweep_seeds() const {
  if (sweep.seeds.empty()) return {train.seed};
  return sweep.seeds;
}

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("config: invalid JSON: ") + e.what());
  }
  expect_object(j, "top level");
  check_keys(j, "",
             {"version", "seed", "epochs", "lr", "patience", "eval_every", "synthesis_enabled",
              "random_neighbors", "split", "ppr", "synthesis", "model", "loss", "sweep"});
  RunConfig cfg;
  if (auto it = j.find("version"); it != j.end() && !it->is_string()) bad("version", "wrong value type");
  read_field(j, "", "seed", cfg.train.seed);
  read_field(j, "", "epochs", cfg.train.epochs);
  read_field(j, "", "lr", cfg.train.lr);
  read_field(j, "", "patience", cfg.train.patience);
  read_field(j, "", "eval_every", cfg.train.eval_every);
  read_field(j, "", "synthesis_enabled", cfg.train.synthesis_enabled);
  read_field(j, "", "random_neighbors", cfg.train.random_neighbors);
  if (auto it = j.find("split"); it != j.end()) parse_split(*it, cfg.split);
  if (auto it = j.find("ppr"); it != j.end()) parse_ppr(*it, cfg.train.ppr);
  if (auto it = j.find("synthesis"); it != j.end()) parse_synthesis(*it, cfg.train.synthesis);
  if (auto it = j.find("model"); it != j.end()) parse_model(*it, cfg.train.model);
  if (auto it = j.find("loss"); it != j.end()) parse_loss(*it, cfg.train.loss);
  if (auto it = j.find("sweep"); it != j.end()) parse_sweep(*it, cfg.sweep);
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open config file " + file.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_run_config(text);
}

std::string dump_run_config(const RunConfig& cfg) {
  json j;
  j["version"] = kVersion;
  j["seed"] = cfg.train.seed;
  j["epochs"] = cfg.train.epochs;
  j["lr"] = cfg.train.lr;
  j["patience"] = cfg.train.patience;
  j["eval_every"] = cfg.train.eval_every;
  j["synthesis_enabled"] = cfg.train.synthesis_enabled;
  j["random_neighbors"] = cfg.train.random_neighbors;
  j["split"] = {{"label_rate", cfg.split.label_rate},
                {"imbalance_ratio", cfg.split.imbalance_ratio},
                {"minority_classes", cfg.split.minority_classes}};
  j["ppr"] = {{"alpha", cfg.train.ppr.alpha},
              {"max_iters", cfg.train.ppr.max_iters},
              {"tol", cfg.train.ppr.tol}};
  j["synthesis"] = {
      {"mu", mu_to_json(cfg.train.synthesis.candidate_scale)},
      {"keep_percent", cfg.train.synthesis.keep_percent},
      {"oversample", cfg.train.synthesis.oversample == OversampleMode::Ratio ? "ratio" : "match_majority"},
      {"oversample_ratio", cfg.train.synthesis.oversample_ratio},
      {"resample_topology_each_epoch", cfg.train.synthesis.resample_topology_each_epoch}};
  j["model"] = {{"hidden_dim", cfg.train.model.hidden_dim},
                {"embed_dim", cfg.train.model.embed_dim},
                {"proj_dim", cfg.train.model.proj_dim}};
  j["loss"] = {{"lambda1", cfg.train.loss.lambda1},
               {"lambda2", cfg.train.loss.lambda2},
               {"temperature", cfg.train.loss.temperature},
               {"negative_sampling", cfg.train.loss.negative_sampling}};
  auto dim = [](const std::vector<double>& d, double scalar) {
    return d.empty() ? std::vector<double>{scalar} : d;
  };
  json sw;
  sw["mu"] = json::array();
  for (double m : dim(cfg.sweep.mu, cfg.train.synthesis.candidate_scale)) sw["mu"].push_back(mu_to_json(m));
  sw["temperature"] = dim(cfg.sweep.temperature, cfg.train.loss.temperature);
  sw["lambda1"] = dim(cfg.sweep.lambda1, cfg.train.loss.lambda1);
  sw["lambda2"] = dim(cfg.sweep.lambda2, cfg.train.loss.lambda2);
  sw["seeds"] = cfg.sweep_seeds();
  j["sweep"] = sw;
  return j.dump(2) + "\n";
}

void write_resolved_config(const std::filesystem::path& dir, const RunConfig& cfg) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "config.resolved.json");
  if (!out) throw DataError("cannot write " + (dir / "config.resolved.json").string());
  out << dump_run_config(cfg);
}

}  // namespace sns
