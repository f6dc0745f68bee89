#include <doctest.h>

#include <set>

#include "causeprobe/causal_graph.hpp"
#include "causeprobe/error.hpp"

using namespace causeprobe;

namespace {

CausalGraph triangle_symmetric() {
  CausalGraph g({"A", "B", "C"});
  g.add_symmetric(0, 1);
  g.add_symmetric(0, 2);
  g.add_symmetric(1, 2);
  return g;
}

}  // namespace

TEST_CASE("pair states are orientation-relative") {
  CausalGraph g({"A", "B", "C"});
  g.add_directed(2, 0);
  CHECK(g.state(2, 0) == EdgeState::Forward);
  CHECK(g.state(0, 2) == EdgeState::Backward);
  CHECK(g.parents(0) == std::vector<std::size_t>{2});
  CHECK(g.children(2) == std::vector<std::size_t>{0});
  CHECK(g.directed_count() == 1);
  g.add_symmetric("A", "B");
  CHECK(g.state(1, 0) == EdgeState::Symmetric);
  CHECK(g.symmetric_count() == 1);
  CHECK(g.parents(1).empty());
  CHECK_THROWS_AS(g.set_state(1, 1, EdgeState::Forward), InputError);
  CHECK_THROWS_AS(g.state(0, 3), InputError);
}

TEST_CASE("labels must be unique and nonempty") {
  CHECK_THROWS_AS(CausalGraph({"A", "A"}), InputError);
  CHECK_THROWS_AS(CausalGraph({"A", ""}), InputError);
  CHECK(CausalGraph(std::vector<std::string>{}).size() == 0);
}

TEST_CASE("topological order and descendants") {
  CausalGraph g({"A", "B", "C", "D"});
  g.add_directed(2, 1);
  g.add_directed(1, 0);
  g.add_directed(3, 0);
  auto order = g.topological_order();
  REQUIRE(order);
  CHECK(*order == std::vector<std::size_t>{2, 1, 3, 0});
  auto de = g.descendants(2);
  CHECK(de == std::vector<bool>{true, true, false, false});
  g.add_directed(0, 2);
  CHECK_FALSE(g.topological_order());
  CHECK_FALSE(g.is_dag());
}

TEST_CASE("orientation extensions") {
  SUBCASE("DAG input is returned unchanged") {
    CausalGraph g({"A", "B", "C"});
    g.add_directed(0, 1);
    g.add_directed(1, 2);
    auto ext = orientation_extensions(g);
    REQUIRE(ext.size() == 1);
    CHECK(ext[0] == g);
  }
  SUBCASE("one symmetric edge gives both orientations") {
    CausalGraph g({"A", "B"});
    g.add_symmetric(0, 1);
    auto ext = orientation_extensions(g);
    REQUIRE(ext.size() == 2);
    CHECK(ext[0].state(0, 1) == EdgeState::Forward);
    CHECK(ext[1].state(0, 1) == EdgeState::Backward);
  }
  SUBCASE("symmetric triangle: 6 of 8 orientations are acyclic") {
    const auto g = triangle_symmetric();
    CHECK(all_orientations(g).size() == 8);
    auto ext = orientation_extensions(g);
    CHECK(ext.size() == 6);
    std::set<std::uint64_t> codes;
    for (const auto& e : ext) {
      CHECK(e.is_dag());
      CHECK(e.edge_count() == 3);
      codes.insert(adjacency_code(e));
    }
    CHECK(codes.size() == 6);
  }
  SUBCASE("directed pairs are preserved") {
    CausalGraph g({"A", "B", "C", "D"});
    g.add_directed(3, 0);
    g.add_symmetric(0, 1);
    g.add_symmetric(1, 2);
    for (const auto& e : orientation_extensions(g)) {
      CHECK(e.state(3, 0) == EdgeState::Forward);
      CHECK(e.state(0, 2) == EdgeState::Absent);
      CHECK(e.state(1, 3) == EdgeState::Absent);
    }
  }
  SUBCASE("capacity") {
    std::vector<std::string> labels;
    for (int k = 0; k < 8; ++k) labels.push_back("v" + std::to_string(k));
    CausalGraph g(labels);
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = i + 1; j < 8; ++j) g.add_symmetric(i, j);
    CHECK_THROWS_AS(orientation_extensions(g), CapacityError);
  }
}

TEST_CASE("adjacency codes") {
  auto w = graph_from_adjacency_code(192, {"X", "Y", "Z"});
  CHECK(w.state(2, 0) == EdgeState::Forward);
  CHECK(w.state(2, 1) == EdgeState::Forward);
  CHECK(w.state(0, 1) == EdgeState::Absent);
  CHECK(adjacency_code(w) == 192);

  const auto t = triangle_symmetric();
  CHECK(graph_from_adjacency_code(adjacency_code(t), t.nodes()) == t);
  CHECK_THROWS_AS(graph_from_adjacency_code(1, {"X", "Y"}), InputError);
  CHECK_THROWS_AS(graph_from_adjacency_code(1u << 9, {"X", "Y", "Z"}), InputError);
}

TEST_CASE("permutation and relabeling keep structure") {
  CausalGraph g({"A", "B", "C"});
  g.add_directed(0, 1);
  g.add_symmetric(1, 2);
  auto p = g.permuted({2, 0, 1});
  CHECK(p.nodes() == std::vector<std::string>{"C", "A", "B"});
  CHECK(p.state(1, 2) == EdgeState::Forward);
  CHECK(p.state(0, 2) == EdgeState::Symmetric);
  auto r = g.relabeled({"x", "y", "z"});
  CHECK(r.state(0, 1) == EdgeState::Forward);
  CHECK_THROWS_AS(g.relabeled({"x", "y"}), InputError);
}

TEST_CASE("DOT export") {
  CausalGraph g({"altitude", "temperature", "a \"quoted\" name"});
  g.add_directed(0, 1);
  g.add_symmetric(1, 2);
  const auto dot = g.to_dot("altitude_t4");
  CHECK(dot.find("digraph") != std::string::npos);
  CHECK(dot.find("\"altitude\" -> \"temperature\"") != std::string::npos);
  CHECK(dot.find("dir=both") != std::string::npos);
  CHECK(dot.find("\\\"quoted\\\"") != std::string::npos);
}
