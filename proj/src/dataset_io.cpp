#include "sns/dataset_io.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace sns {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::filesystem::path& file, std::size_t line, const std::string& msg) {
  throw DataError(file.string() + ":" + std::to_string(line) + ": " + msg);
}

bool blank_or_comment(const std::string& s) {
  for (char ch : s) {
    if (ch == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(ch))) return false;
  }
  return true;
}

void check_name(const std::string& name) {
  if (name.empty()) throw DataError("empty name in schema.json");
  for (char ch : name)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' && ch != '-')
      throw DataError("name '" + name + "' may only contain [A-Za-z0-9_-]");
}

std::vector<std::pair<NodeId, NodeId>> read_edge_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open " + file.string());
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::string linebuf;
  std::size_t lineno = 0;
  while (std::getline(in, linebuf)) {
    ++lineno;
    if (blank_or_comment(linebuf)) continue;
    std::istringstream ls(linebuf);
    NodeId s, d;
    if (!(ls >> s >> d)) fail(file, lineno, "expected two integers");
    std::string extra;
    if (ls >> extra) fail(file, lineno, "trailing content '" + extra + "'");
    edges.emplace_back(s, d);
  }
  return edges;
}

Eigen::MatrixXd read_attr_file(const std::filesystem::path& file, NodeId count, int dim) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open " + file.string());
  Eigen::MatrixXd x(count, dim);
  std::string linebuf;
  std::size_t lineno = 0;
  NodeId row = 0;
  while (std::getline(in, linebuf)) {
    ++lineno;
    if (blank_or_comment(linebuf)) continue;
    if (row >= count) fail(file, lineno, "more rows than declared node count " + std::to_string(count));
    std::istringstream ls(linebuf);
    for (int j = 0; j < dim; ++j)
      if (!(ls >> x(row, j))) fail(file, lineno, "expected " + std::to_string(dim) + " values");
    std::string extra;
    if (ls >> extra) fail(file, lineno, "row has more than " + std::to_string(dim) + " values");
    ++row;
  }
  if (row != count)
    throw DataError(file.string() + ": " + std::to_string(row) + " rows, expected " + std::to_string(count));
  return x;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto schema_file = dir / "schema.json";
  std::ifstream in(schema_file);
  if (!in) throw DataError("cannot open " + schema_file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(schema_file.string() + ": " + e.what());
  }

  Dataset ds;
  try {
    for (const auto& nt : j.at("node_types")) {
      const auto name = nt.at("name").get<std::string>();
      check_name(name);
      ds.graph.schema.add_node_type(name, nt.at("count").get<NodeId>(),
                                    nt.value("attr_dim", 0));
    }
    for (const auto& rel : j.at("relations")) {
      const auto name = rel.at("name").get<std::string>();
      check_name(name);
      NodeTypeId src = ds.graph.schema.find_node_type(rel.at("src").get<std::string>());
      NodeTypeId dst = ds.graph.schema.find_node_type(rel.at("dst").get<std::string>());
      if (src < 0 || dst < 0) throw DataError("relation '" + name + "' references unknown node type");
      ds.graph.schema.add_relation(name, src, dst);
    }
    const auto& lab = j.at("labels");
    ds.labels.target_type = ds.graph.schema.find_node_type(lab.at("target_type").get<std::string>());
    if (ds.labels.target_type < 0) throw DataError("labels.target_type is not a registered node type");
    ds.labels.num_classes = lab.at("num_classes").get<int>();
    if (ds.labels.num_classes < 2) throw DataError("labels.num_classes must be at least 2");
    ds.labels.minority_classes = lab.value("minority_classes", std::vector<int>{});
    std::sort(ds.labels.minority_classes.begin(), ds.labels.minority_classes.end());
  } catch (const json::exception& e) {
    throw DataError(schema_file.string() + ": " + e.what());
  }
  ds.graph.schema.validate();

  for (int r = 0; r < ds.graph.schema.num_relations(); ++r) {
    const auto& rel = ds.graph.schema.relation(r);
    const auto file = dir / (rel.name + ".edges");
    auto edges = read_edge_file(file);
    try {
      ds.graph.adjacency.push_back(SparseAdj::from_edges(ds.graph.schema.node_type(rel.src).count,
                                                         ds.graph.schema.node_type(rel.dst).count, edges));
    } catch (const DataError& e) {
      throw DataError(file.string() + ": " + e.what());
    }
  }
  for (int t = 0; t < ds.graph.schema.num_node_types(); ++t) {
    const auto& info = ds.graph.schema.node_type(t);
    if (info.attr_dim == 0) {
      ds.graph.attributes.emplace_back();
      continue;
    }
    ds.graph.attributes.push_back(read_attr_file(dir / (info.name + ".attrs"), info.count, info.attr_dim));
  }
  ds.graph.validate();

  const NodeId n_target = ds.graph.num_nodes(ds.labels.target_type);
  ds.labels.labels.assign(n_target, kUnlabeled);
  ds.labels.train_mask.assign(n_target, 0);
  ds.labels.val_mask.assign(n_target, 0);
  ds.labels.test_mask.assign(n_target, 0);
  const auto label_file = dir / "labels.tsv";
  std::ifstream lf(label_file);
  if (!lf) throw DataError("cannot open " + label_file.string());
  std::string linebuf;
  std::size_t lineno = 0;
  while (std::getline(lf, linebuf)) {
    ++lineno;
    if (blank_or_comment(linebuf)) continue;
    std::istringstream ls(linebuf);
    NodeId v;
    int c;
    if (!(ls >> v >> c)) fail(label_file, lineno, "expected 'node_id class_id'");
    if (v < 0 || v >= n_target) fail(label_file, lineno, "node id " + std::to_string(v) + " out of range");
    if (c < 0 || c >= ds.labels.num_classes) fail(label_file, lineno, "class " + std::to_string(c) + " out of range");
    if (ds.labels.labels[v] != kUnlabeled) fail(label_file, lineno, "node " + std::to_string(v) + " labeled twice");
    ds.labels.labels[v] = c;
  }
  ds.labels.validate();
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json j;
  j["node_types"] = json::array();
  for (const auto& nt : ds.graph.schema.node_types())
    j["node_types"].push_back({{"name", nt.name}, {"count", nt.count}, {"attr_dim", nt.attr_dim}});
  j["relations"] = json::array();
  for (const auto& rel : ds.graph.schema.relations())
    j["relations"].push_back({{"name", rel.name},
                              {"src", ds.graph.schema.node_type(rel.src).name},
                              {"dst", ds.graph.schema.node_type(rel.dst).name}});
  j["labels"] = {{"target_type", ds.graph.schema.node_type(ds.labels.target_type).name},
                 {"num_classes", ds.labels.num_classes},
                 {"minority_classes", ds.labels.minority_classes}};
  std::ofstream(dir / "schema.json") << j.dump(2) << "\n";

  for (int r = 0; r < ds.graph.schema.num_relations(); ++r) {
    std::ofstream out(dir / (ds.graph.schema.relation(r).name + ".edges"));
    const auto& adj = ds.graph.adjacency[r];
    for (NodeId s = 0; s < adj.rows(); ++s)
      for (NodeId d : adj.row(s)) out << s << " " << d << "\n";
  }
  for (int t = 0; t < ds.graph.schema.num_node_types(); ++t) {
    const auto& info = ds.graph.schema.node_type(t);
    if (info.attr_dim == 0) continue;
    std::ofstream out(dir / (info.name + ".attrs"));
    char buf[64];
    const auto& x = ds.graph.attributes[t];
    for (NodeId i = 0; i < x.rows(); ++i) {
      for (int jcol = 0; jcol < x.cols(); ++jcol) {
        std::snprintf(buf, sizeof buf, "%.17g", x(i, jcol));  // round-trips doubles exactly
        out << (jcol ? " " : "") << buf;
      }
      out << "\n";
    }
  }
  std::ofstream out(dir / "labels.tsv");
  for (NodeId v = 0; v < ds.labels.num_target_nodes(); ++v)
    if (ds.labels.labels[v] != kUnlabeled) out << v << "\t" << ds.labels.labels[v] << "\n";
}

void save_manifest(const SyntheticManifest& m, const std::filesystem::path& file) {
  json j;
  j["first_synthetic_id"] = m.first_synthetic_id;
  j["nodes"] = json::array();
  for (const auto& e : m.nodes)
    j["nodes"].push_back(
        {{"id", e.id}, {"class", e.class_id}, {"parent_a", e.parent_a}, {"parent_b", e.parent_b}});
  std::ofstream(file) << j.dump(2) << "\n";
}

SyntheticManifest load_manifest(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(file.string() + ": " + e.what());
  }
  SyntheticManifest m;
  m.first_synthetic_id = j.at("first_synthetic_id").get<NodeId>();
  for (const auto& e : j.at("nodes"))
    m.nodes.push_back({e.at("id").get<NodeId>(), e.at("class").get<int>(), e.at("parent_a").get<NodeId>(),
                       e.at("parent_b").get<NodeId>()});
  return m;
}

}  // namespace sns
