#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "sodesn/error.hpp"
#include "sodesn/topology.hpp"

using namespace sodesn;

namespace {

// Independent adjacency oracle for a 4-neighborhood grid without wraparound.
bool grid_adjacent(int rows, int cols, int a, int b) {
  (void)rows;
  const int ra = a / cols, ca = a % cols, rb = b / cols, cb = b % cols;
  return std::abs(ra - rb) + std::abs(ca - cb) == 1;
}

}  // namespace

TEST_CASE("2x4 grid: 8 nodes, corners have 2 neighbors, edge nodes 3") {
  const Topology t = build_grid(2, 4);
  CHECK(t.node_count() == 8);
  CHECK(t.neighbors(0).size() == 2);
  CHECK(t.neighbors(3).size() == 2);
  CHECK(t.neighbors(4).size() == 2);
  CHECK(t.neighbors(7).size() == 2);
  CHECK(t.neighbors(1).size() == 3);
  CHECK(t.neighbors(6).size() == 3);
  CHECK(t.undirected_edges().size() == 10);
  CHECK(t.directed_edge_count() == 20);
}

TEST_CASE("10x10 grid: interior node has 4 neighbors") {
  const Topology t = build_grid(10, 10);
  CHECK(t.node_count() == 100);
  CHECK(t.neighbors(55) == std::vector<int>{45, 54, 56, 65});
  CHECK(t.neighbors(0) == std::vector<int>{1, 10});
}

TEST_CASE("1x1 grid has one node and no neighbors") {
  const Topology t = build_grid(1, 1);
  CHECK(t.node_count() == 1);
  CHECK(t.neighbors(0).empty());
  CHECK(t.directed_edge_count() == 0);
}

TEST_CASE("invalid grids and edges are rejected") {
  CHECK_THROWS_AS(build_grid(0, 3), ConfigError);
  CHECK_THROWS_AS(Topology(3, {{0, 3}}), ConfigError);
  CHECK_THROWS_AS(Topology(3, {{1, 1}}), ConfigError);
  CHECK_THROWS_AS(Topology(3, {{0, 1}, {1, 0}}), ConfigError);
}

TEST_CASE("grid adjacency is symmetric and matches the oracle for random sizes up to 50x50") {
  Rng rng(17);
  std::uniform_int_distribution<int> size(1, 50);
  for (int trial = 0; trial < 25; ++trial) {
    const int rows = size(rng), cols = size(rng);
    const Topology t = build_grid(rows, cols);
    std::uniform_int_distribution<int> node(0, t.node_count() - 1);
    for (int k = 0; k < 400; ++k) {
      const int a = node(rng), b = node(rng);
      CHECK(t.adjacent(a, b) == t.adjacent(b, a));
      CHECK(t.adjacent(a, b) == grid_adjacent(rows, cols, a, b));
    }
    if (rows >= 2 && cols >= 2) {
      for (int n = 0; n < t.node_count(); ++n) {
        const auto deg = t.neighbors(n).size();
        CHECK((deg >= 2 && deg <= 4));
      }
    }
  }
}

TEST_CASE("directed edges are ordered and indexable") {
  const Topology t = build_grid(3, 3);
  const auto& e = t.directed_edges();
  for (std::size_t i = 1; i < e.size(); ++i) {
    CHECK(std::make_pair(e[i - 1].src, e[i - 1].dst) < std::make_pair(e[i].src, e[i].dst));
  }
  for (std::size_t i = 0; i < e.size(); ++i) CHECK(t.edge_index(e[i].src, e[i].dst) == static_cast<int>(i));
  CHECK(t.edge_index(0, 8) == -1);
}

TEST_CASE("grid positions follow row-major ids") {
  const Topology t = build_grid(3, 5);
  const auto p = t.position(7);
  REQUIRE(p);
  CHECK(p->row == 1);
  CHECK(p->col == 2);
  CHECK_FALSE(Topology(2, {{0, 1}}).position(0));
}

TEST_CASE("edge list round trip keeps isolated nodes") {
  const Topology t(5, {{0, 1}, {1, 2}, {3, 1}});
  std::stringstream ss;
  write_edge_list(ss, t);
  const Topology back = parse_edge_list(ss);
  CHECK(back.node_count() == 5);
  CHECK(back.undirected_edges() == t.undirected_edges());
}

TEST_CASE("edge list parsing: comments, explicit count, malformed lines") {
  std::istringstream ok("# comment\n0 1\n\n 1 2\n");
  const Topology t = parse_edge_list(ok);
  CHECK(t.node_count() == 3);
  CHECK(t.adjacent(1, 2));
  std::istringstream counted("0 1\n");
  CHECK(parse_edge_list(counted, 4).node_count() == 4);
  std::istringstream bad("0 1 2\n");
  CHECK_THROWS_AS(parse_edge_list(bad), ConfigError);
  std::istringstream negative("0 -1\n");
  CHECK_THROWS_AS(parse_edge_list(negative), ConfigError);
  CHECK_THROWS_AS(load_edge_list("/nonexistent/edges.txt"), DataError);
}

TEST_CASE("link quality 1 delivers everything, 0 nothing") {
  const Topology t = build_grid(2, 4);
  Rng rng(1);
  CHECK(sample_link_outcomes(t, 1.0, rng).delivered_count() == t.directed_edge_count());
  CHECK(sample_link_outcomes(t, 0.0, rng).delivered_count() == 0);
  CHECK_THROWS_AS(sample_link_outcomes(t, 1.5, rng), ConfigError);
}

TEST_CASE("link quality 0.9 over 10000 steps: empirical delivery rate within binomial bound") {
  const Topology t(2, {{0, 1}});
  Rng rng(2024);
  const int steps = 10000;
  int delivered = 0;
  for (int i = 0; i < steps; ++i) delivered += sample_link_outcomes(t, 0.9, rng).delivered(0);
  const double rate = double(delivered) / steps;
  // Standard error sqrt(0.9 * 0.1 / 10000) = 0.003; 0.01 is more than three of them.
  CHECK(std::abs(rate - 0.9) < 0.01);
}

TEST_CASE("link directions fail independently") {
  const Topology t(2, {{0, 1}});
  Rng rng(5);
  int both = 0, first = 0, second = 0;
  const int steps = 20000;
  for (int i = 0; i < steps; ++i) {
    const auto o = sample_link_outcomes(t, 0.5, rng);
    first += o.delivered(0);
    second += o.delivered(1);
    both += o.delivered(0) && o.delivered(1);
  }
  CHECK(std::abs(double(both) / steps - 0.25) < 0.015);
  CHECK(std::abs(double(first) / steps - 0.5) < 0.015);
  CHECK(std::abs(double(second) / steps - 0.5) < 0.015);
}

TEST_CASE("link outcome streams are reproducible from the seed") {
  const Topology t = build_grid(3, 3);
  Rng a(99), b(99);
  for (int i = 0; i < 50; ++i) {
    const auto x = sample_link_outcomes(t, 0.37, a);
    const auto y = sample_link_outcomes(t, 0.37, b);
    for (std::size_t e = 0; e < x.size(); ++e) CHECK(x.delivered(e) == y.delivered(e));
  }
}
