#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "sns/dataset_io.hpp"
#include "sns/metapath.hpp"
#include "sns/splits.hpp"
#include "toy_fixtures.hpp"

using namespace sns;
namespace fs = std::filesystem;

TEST_CASE("schema add/find/validate") {
  NetworkSchema s;
  CHECK(s.add_node_type("paper", 10, 4) == 0);
  CHECK(s.add_node_type("author", 5) == 1);
  CHECK(s.add_relation("pa", 0, 1) == 0);
  CHECK(s.find_node_type("author") == 1);
  CHECK(s.find_node_type("nope") == -1);
  CHECK(s.find_relation("pa") == 0);
  CHECK(s.find_relation("ap") == -1);
  CHECK_THROWS_AS(s.add_node_type("paper", 3), DataError);
  CHECK_THROWS_AS(s.add_relation("pa", 1, 0), DataError);
  CHECK_THROWS_AS(s.add_relation("bad", 0, 7), DataError);
  s.validate();  // |A|+|R| = 3 > 2

  NetworkSchema tiny;
  tiny.add_node_type("a", 1);
  tiny.add_node_type("b", 1);
  CHECK_THROWS_AS(tiny.validate(), DataError);  // |A|+|R| = 2
}

TEST_CASE("metapath well-formedness") {
  auto g = toy_graph();
  MetaPath papa{{0, 1}};  // pa . ap
  CHECK(papa.well_formed(g.schema));
  CHECK(papa.src_type(g.schema) == 0);
  CHECK(papa.dst_type(g.schema) == 0);
  MetaPath broken{{0, 0}};  // pa . pa: author != paper
  CHECK_FALSE(broken.well_formed(g.schema));
  CHECK_FALSE(MetaPath{}.well_formed(g.schema));
}

TEST_CASE("sparse adjacency basics") {
  std::vector<std::pair<NodeId, NodeId>> edges = {{2, 1}, {0, 3}, {0, 1}, {0, 1}, {2, 0}};
  auto a = SparseAdj::from_edges(3, 4, edges);
  CHECK(a.rows() == 3);
  CHECK(a.cols() == 4);
  CHECK(a.num_edges() == 4);  // duplicate (0,1) collapsed
  CHECK(a.degree(0) == 2);
  CHECK(a.degree(1) == 0);
  CHECK(a.degree(2) == 2);
  auto r0 = a.row(0);
  CHECK(std::vector<NodeId>(r0.begin(), r0.end()) == std::vector<NodeId>{1, 3});
  CHECK(a.has_edge(2, 0));
  CHECK_FALSE(a.has_edge(1, 0));

  std::vector<std::pair<NodeId, NodeId>> bad = {{3, 0}};
  CHECK_THROWS_AS(SparseAdj::from_edges(3, 4, bad), DataError);
  std::vector<std::pair<NodeId, NodeId>> neg = {{0, -1}};
  CHECK_THROWS_AS(SparseAdj::from_edges(3, 4, neg), DataError);
}

TEST_CASE("transpose round trip is exact") {
  std::vector<std::pair<NodeId, NodeId>> edges;
  Rng rng(7);
  for (int i = 0; i < 60; ++i)
    edges.emplace_back(static_cast<NodeId>(rng() % 9), static_cast<NodeId>(rng() % 13));
  auto a = SparseAdj::from_edges(9, 13, edges);
  auto t = a.transposed();
  CHECK(t.rows() == 13);
  CHECK(t.cols() == 9);
  CHECK(t.transposed() == a);
  for (NodeId r = 0; r < 9; ++r)
    for (NodeId c : a.row(r)) CHECK(t.has_edge(c, r));
  // degree-sum symmetry
  std::int64_t da = 0, dt = 0;
  for (NodeId r = 0; r < a.rows(); ++r) da += a.degree(r);
  for (NodeId r = 0; r < t.rows(); ++r) dt += t.degree(r);
  CHECK(da == dt);
}

TEST_CASE("eigen view round trip") {
  std::vector<std::pair<NodeId, NodeId>> edges = {{0, 2}, {1, 0}, {1, 2}};
  auto a = SparseAdj::from_edges(2, 3, edges);
  auto m = a.to_eigen();
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m.nonZeros() == 3);
  CHECK(m.coeff(1, 0) == 1.0);
  CHECK(SparseAdj::from_eigen_binarized(m) == a);
}

TEST_CASE("graph validation") {
  auto g = toy_graph();
  g.validate();
  auto broken = g;
  broken.attributes[0] = Eigen::MatrixXd::Zero(5, 4);  // one row short
  CHECK_THROWS_AS(broken.validate(), DataError);
  auto wrongdim = g;
  wrongdim.adjacency[0] = SparseAdj(6, 5);
  CHECK_THROWS_AS(wrongdim.validate(), DataError);
}

TEST_CASE("first-order relations and neighbor types") {
  auto g = toy_graph();
  CHECK(first_order_relations(g.schema, 0) == std::vector<RelationId>{0, 1, 2, 3});
  CHECK(first_order_relations(g.schema, 1) == std::vector<RelationId>{0, 1});
  CHECK(neighbor_types(g.schema, 0) == std::vector<NodeTypeId>{1, 2});
  CHECK(neighbor_types(g.schema, 1) == std::vector<NodeTypeId>{0});
  CHECK(canonical_relation(g.schema, 0, 2) == 2);
  CHECK(canonical_relation(g.schema, 2, 0) == 2);
  CHECK(canonical_relation(g.schema, 1, 2) == -1);
}

TEST_CASE("mirror groups pair the two directions") {
  auto g = toy_graph();
  auto groups = mirror_groups(g, 0);
  REQUIRE(groups.size() == 2);
  CHECK(groups[0] == std::vector<RelationId>{0, 1});
  CHECK(groups[1] == std::vector<RelationId>{2, 3});

  // break the mirror: drop one edge from ap
  auto lopsided = g;
  std::vector<std::pair<NodeId, NodeId>> ap;
  for (NodeId s = 0; s < 4; ++s)
    for (NodeId d : g.adjacency[1].row(s))
      if (!(s == 0 && d == 1)) ap.emplace_back(s, d);
  lopsided.adjacency[1] = SparseAdj::from_edges(4, 6, ap);
  auto lop = mirror_groups(lopsided, 0);
  REQUIRE(lop.size() == 3);
  CHECK(lop[0] == std::vector<RelationId>{0});
  CHECK(lop[1] == std::vector<RelationId>{1});
  CHECK(lop[2] == std::vector<RelationId>{2, 3});
}

TEST_CASE("target_to_neighbor orients every relation the same way") {
  auto g = toy_graph();
  auto fwd = target_to_neighbor(g, 0, 0);  // pa stored paper->author
  auto rev = target_to_neighbor(g, 1, 0);  // ap stored author->paper
  CHECK(fwd.rows() == 6);
  CHECK(fwd.cols() == 4);
  CHECK(fwd == rev);  // mirrored pair collapses to the same matrix
}

TEST_CASE("metapath composition oracle") {
  auto g = toy_graph();
  auto papa = compose_metapath_adjacency(g, MetaPath{{0, 1}});
  // papers sharing an author
  std::vector<std::vector<NodeId>> want = {{0, 1, 2}, {0, 1}, {0, 2}, {3, 5}, {4, 5}, {3, 4, 5}};
  REQUIRE(papa.rows() == 6);
  for (NodeId r = 0; r < 6; ++r) {
    auto row = papa.row(r);
    CHECK(std::vector<NodeId>(row.begin(), row.end()) == want[r]);
  }

  auto apv = compose_metapath_adjacency(g, MetaPath{{1, 2}});  // author -> venue
  REQUIRE(apv.rows() == 4);
  std::vector<std::vector<NodeId>> want_av = {{0}, {0}, {1}, {1}};
  for (NodeId r = 0; r < 4; ++r) {
    auto row = apv.row(r);
    CHECK(std::vector<NodeId>(row.begin(), row.end()) == want_av[r]);
  }

  // single relation: bit-identical copy
  CHECK(compose_metapath_adjacency(g, MetaPath{{0}}) == g.adjacency[0]);
  CHECK_THROWS_AS(compose_metapath_adjacency(g, MetaPath{{0, 0}}), DataError);
  CHECK_THROWS_AS(compose_metapath_adjacency(g, MetaPath{}), DataError);
}

TEST_CASE("imbalance ratio") {
  LabelSpec ls;
  ls.target_type = 0;
  ls.num_classes = 4;
  for (int c = 0; c < 4; ++c) {
    const int size = (c < 2) ? 60 : 600;
    for (int i = 0; i < size; ++i) ls.labels.push_back(c);
  }
  std::vector<std::uint8_t> all(ls.labels.size(), 1);
  CHECK(imbalance_ratio(ls, all) == doctest::Approx(0.1).epsilon(1e-12));

  LabelSpec three;
  three.target_type = 0;
  three.num_classes = 3;
  for (int i = 0; i < 2; ++i) three.labels.push_back(0);
  for (int i = 0; i < 8; ++i) three.labels.push_back(1);
  for (int i = 0; i < 10; ++i) three.labels.push_back(2);
  std::vector<std::uint8_t> scope(20, 1);
  CHECK(imbalance_ratio(three, scope) == doctest::Approx(0.2).epsilon(1e-12));

  scope.assign(20, 0);
  for (int i = 0; i < 2; ++i) scope[i] = 1;  // only class 0 in scope
  CHECK_THROWS_AS(imbalance_ratio(three, scope), DataError);
}

namespace {

HinGraph flat_graph(NodeId n) {
  HinGraph g;
  g.schema.add_node_type("t", n, 2);
  g.schema.add_node_type("o", 1, 0);
  g.schema.add_relation("to", 0, 1);
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId v = 0; v < n; ++v) edges.emplace_back(v, 0);
  g.adjacency.push_back(SparseAdj::from_edges(n, 1, edges));
  g.attributes = {Eigen::MatrixXd::Zero(n, 2), Eigen::MatrixXd()};
  return g;
}

LabelSpec two_class_labels(NodeId n) {
  LabelSpec ls;
  ls.target_type = 0;
  ls.num_classes = 2;
  for (NodeId v = 0; v < n; ++v) ls.labels.push_back(v < n / 2 ? 0 : 1);
  return ls;
}

}  // namespace

TEST_CASE("imbalanced split counts") {
  auto g = flat_graph(1000);
  auto full = two_class_labels(1000);
  auto split = build_imbalanced_split(g, full, 0.06, 0.1, {1}, 42);

  NodeId train0 = 0, train1 = 0, val = 0, test = 0;
  for (NodeId v = 0; v < 1000; ++v) {
    if (split.train_mask[v]) (split.labels[v] == 0 ? train0 : train1)++;
    val += split.val_mask[v];
    test += split.test_mask[v];
  }
  CHECK(train0 == 30);  // ceil(0.06 * 1000 / 2)
  CHECK(train1 == 3);   // floor(0.1 * 30)
  CHECK(val == 117 + 124);
  CHECK(test == 353 + 373);

  // masks disjoint, train imbalance as requested
  for (NodeId v = 0; v < 1000; ++v)
    CHECK(split.train_mask[v] + split.val_mask[v] + split.test_mask[v] <= 1);
  CHECK(imbalance_ratio(split, split.train_mask) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("split determinism and seed sensitivity") {
  auto g = flat_graph(400);
  auto full = two_class_labels(400);
  bool any_difference = false;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto a = build_imbalanced_split(g, full, 0.1, 0.25, {1}, seed);
    auto b = build_imbalanced_split(g, full, 0.1, 0.25, {1}, seed);
    CHECK(a.train_mask == b.train_mask);
    CHECK(a.val_mask == b.val_mask);
    CHECK(a.test_mask == b.test_mask);
    auto c = build_imbalanced_split(g, full, 0.1, 0.25, {1}, seed + 1000);
    if (a.train_mask != c.train_mask) any_difference = true;
  }
  CHECK(any_difference);
}

TEST_CASE("split rejects impossible requests") {
  auto g = flat_graph(10);
  auto full = two_class_labels(10);
  CHECK_THROWS_AS(build_imbalanced_split(g, full, 0.06, 0.1, {1}, 0), DataError);  // minority 0
  CHECK_THROWS_AS(build_imbalanced_split(g, full, 0.0, 0.1, {1}, 0), DataError);
  CHECK_THROWS_AS(build_imbalanced_split(g, full, 0.06, 1.5, {1}, 0), DataError);

  // unlabeled nodes are ignored entirely
  auto g2 = flat_graph(100);
  auto partial = two_class_labels(100);
  for (NodeId v = 90; v < 100; ++v) partial.labels[v] = kUnlabeled;
  auto split = build_imbalanced_split(g2, partial, 0.2, 0.5, {1}, 3);
  for (NodeId v = 90; v < 100; ++v) {
    CHECK(split.train_mask[v] == 0);
    CHECK(split.val_mask[v] == 0);
    CHECK(split.test_mask[v] == 0);
  }
}

TEST_CASE("dataset round trip is exact") {
  auto dir = fs::temp_directory_path() / "sns_test_roundtrip";
  fs::remove_all(dir);
  Dataset ds;
  ds.graph = toy_graph();
  // non-trivial doubles to exercise the text round trip
  ds.graph.attributes[0](0, 0) = 1.0 / 3.0;
  ds.graph.attributes[0](1, 2) = -2.7182818284590452;
  ds.graph.attributes[1](3, 1) = 1e-17;
  ds.labels = toy_labels();
  ds.labels.train_mask.clear();
  ds.labels.val_mask.clear();
  ds.labels.test_mask.clear();

  save_dataset(ds, dir);
  auto back = load_dataset(dir);
  CHECK(back.graph.schema.num_node_types() == 3);
  CHECK(back.graph.schema.num_relations() == 4);
  for (int r = 0; r < 4; ++r) CHECK(back.graph.adjacency[r] == ds.graph.adjacency[r]);
  CHECK(same_matrix(back.graph.attributes[0], ds.graph.attributes[0]));
  CHECK(same_matrix(back.graph.attributes[1], ds.graph.attributes[1]));
  CHECK(back.labels.labels == ds.labels.labels);
  CHECK(back.labels.num_classes == 2);
  CHECK(back.labels.minority_classes == std::vector<int>{1});
  CHECK(back.labels.target_type == 0);
  fs::remove_all(dir);
}

TEST_CASE("loader rejects malformed input") {
  auto dir = fs::temp_directory_path() / "sns_test_badload";
  fs::remove_all(dir);
  Dataset ds;
  ds.graph = toy_graph();
  ds.labels = toy_labels();
  save_dataset(ds, dir);

  SUBCASE("edge endpoint out of range") {
    std::ofstream(dir / "pa.edges", std::ios::app) << "9 0\n";
    CHECK_THROWS_AS(load_dataset(dir), DataError);
  }
  SUBCASE("duplicate label") {
    std::ofstream(dir / "labels.tsv", std::ios::app) << "0\t1\n";
    CHECK_THROWS_AS(load_dataset(dir), DataError);
  }
  SUBCASE("class id out of range") {
    std::ofstream(dir / "labels.tsv", std::ios::app) << "4\t7\n";
    CHECK_THROWS_AS(load_dataset(dir), DataError);
  }
  SUBCASE("attribute row count mismatch") {
    std::ofstream(dir / "author.attrs", std::ios::app) << "1 2 3\n";
    CHECK_THROWS_AS(load_dataset(dir), DataError);
  }
  SUBCASE("missing edges file") {
    fs::remove(dir / "pv.edges");
    CHECK_THROWS_AS(load_dataset(dir), DataError);
  }
  fs::remove_all(dir);
}

TEST_CASE("synthetic manifest round trip") {
  auto file = fs::temp_directory_path() / "sns_test_manifest.json";
  SyntheticManifest m;
  m.first_synthetic_id = 6;
  m.nodes = {{6, 1, 3, 3}, {7, 1, 3, 3}};
  save_manifest(m, file);
  auto back = load_manifest(file);
  CHECK(back.first_synthetic_id == 6);
  REQUIRE(back.nodes.size() == 2);
  CHECK(back.nodes[1].id == 7);
  CHECK(back.nodes[1].class_id == 1);
  CHECK(back.nodes[0].parent_a == 3);
  fs::remove(file);
}
