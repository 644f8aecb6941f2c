#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sodesn/random.hpp"

namespace sodesn {

struct GridShape {
  int rows = 0;
  int cols = 0;
  bool operator==(const GridShape&) const = default;
};

struct GridPosition {
  int row = 0;
  int col = 0;
};

struct DirectedEdge {
  int src = 0;
  int dst = 0;
};

/// Undirected sensor-network graph. Node ids are 0..node_count-1, neighbor
/// lists are sorted, and every undirected edge appears as two directed edges
/// ordered by (src, dst).
class Topology {
 public:
  Topology() = default;
  /// Throws ConfigError on out-of-range ids, self loops, or duplicate edges.
  Topology(int node_count, const std::vector<std::pair<int, int>>& edges,
           std::optional<GridShape> grid = std::nullopt);

  int node_count() const noexcept { return node_count_; }
  const std::vector<int>& neighbors(int node) const { return adjacency_.at(static_cast<std::size_t>(node)); }
  bool adjacent(int a, int b) const;

  const std::vector<DirectedEdge>& directed_edges() const noexcept { return directed_; }
  std::size_t directed_edge_count() const noexcept { return directed_.size(); }
  /// Index of (src, dst) in directed_edges(), or -1 when not an edge.
  int edge_index(int src, int dst) const;

  std::vector<std::pair<int, int>> undirected_edges() const;

  const std::optional<GridShape>& grid() const noexcept { return grid_; }
  std::optional<GridPosition> position(int node) const;

  bool operator==(const Topology& other) const;

 private:
  int node_count_ = 0;
  std::vector<std::vector<int>> adjacency_;
  std::vector<DirectedEdge> directed_;
  std::vector<std::size_t> first_edge_;  // CSR offsets into directed_ by src
  std::optional<GridShape> grid_;
};

/// rows x cols grid with 4-neighborhood, no wraparound. Node (r, c) has id r * cols + c.
Topology build_grid(int rows, int cols);

/// Edge-list text: one `src dst` pair per line, undirected, each pair once.
/// Blank lines and lines starting with '#' are ignored, except a `# nodes N`
/// header. The node count is the argument, else the header, else max id + 1.
Topology parse_edge_list(std::istream& in, std::optional<int> node_count = std::nullopt);
Topology load_edge_list(const std::string& path, std::optional<int> node_count = std::nullopt);
void write_edge_list(std::ostream& out, const Topology& topology);

/// Per-step delivery outcome for every directed edge of a topology.
class LinkOutcomes {
 public:
  LinkOutcomes() = default;
  LinkOutcomes(std::size_t edge_count, bool delivered) : delivered_(edge_count, delivered ? 1 : 0) {}

  static LinkOutcomes all_delivered(const Topology& t) { return {t.directed_edge_count(), true}; }
  static LinkOutcomes none_delivered(const Topology& t) { return {t.directed_edge_count(), false}; }

  std::size_t size() const noexcept { return delivered_.size(); }
  bool delivered(std::size_t edge) const { return delivered_[edge] != 0; }
  void set(std::size_t edge, bool value) { delivered_[edge] = value ? 1 : 0; }
  std::size_t delivered_count() const;

 private:
  std::vector<unsigned char> delivered_;
};

/// Each directed edge is delivered independently with probability `quality`.
/// quality 0 and 1 consume no random numbers.
LinkOutcomes sample_link_outcomes(const Topology& topology, double quality, Rng& rng);
void sample_link_outcomes(const Topology& topology, double quality, Rng& rng, LinkOutcomes& out);

}  // namespace sodesn
