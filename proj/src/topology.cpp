#include "sodesn/topology.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "sodesn/error.hpp"

namespace sodesn {

Topology::Topology(int node_count, const std::vector<std::pair<int, int>>& edges,
                   std::optional<GridShape> grid)
    : node_count_(node_count), adjacency_(static_cast<std::size_t>(std::max(node_count, 0))), grid_(grid) {
  if (node_count <= 0) throw ConfigError("topology: node count must be positive");
  if (grid && grid->rows * grid->cols != node_count) throw ConfigError("topology: grid shape does not match node count");
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= node_count || b >= node_count) {
      throw ConfigError("topology: edge (" + std::to_string(a) + ", " + std::to_string(b) + ") out of range");
    }
    if (a == b) throw ConfigError("topology: self loop on node " + std::to_string(a));
    auto& na = adjacency_[static_cast<std::size_t>(a)];
    if (std::find(na.begin(), na.end(), b) != na.end()) {
      throw ConfigError("topology: duplicate edge (" + std::to_string(a) + ", " + std::to_string(b) + ")");
    }
    na.push_back(b);
    adjacency_[static_cast<std::size_t>(b)].push_back(a);
  }
  first_edge_.reserve(adjacency_.size() + 1);
  for (int src = 0; src < node_count; ++src) {
    auto& n = adjacency_[static_cast<std::size_t>(src)];
    std::sort(n.begin(), n.end());
    first_edge_.push_back(directed_.size());
    for (int dst : n) directed_.push_back({src, dst});
  }
  first_edge_.push_back(directed_.size());
}

bool Topology::adjacent(int a, int b) const {
  if (a < 0 || a >= node_count_) return false;
  const auto& n = adjacency_[static_cast<std::size_t>(a)];
  return std::binary_search(n.begin(), n.end(), b);
}

int Topology::edge_index(int src, int dst) const {
  if (src < 0 || src >= node_count_) return -1;
  const auto& n = adjacency_[static_cast<std::size_t>(src)];
  auto it = std::lower_bound(n.begin(), n.end(), dst);
  if (it == n.end() || *it != dst) return -1;
  return static_cast<int>(first_edge_[static_cast<std::size_t>(src)] + static_cast<std::size_t>(it - n.begin()));
}

std::vector<std::pair<int, int>> Topology::undirected_edges() const {
  std::vector<std::pair<int, int>> out;
  for (const auto& e : directed_) {
    if (e.src < e.dst) out.emplace_back(e.src, e.dst);
  }
  return out;
}

std::optional<GridPosition> Topology::position(int node) const {
  if (!grid_ || node < 0 || node >= node_count_) return std::nullopt;
  return GridPosition{node / grid_->cols, node % grid_->cols};
}

bool Topology::operator==(const Topology& other) const {
  return node_count_ == other.node_count_ && adjacency_ == other.adjacency_ && grid_ == other.grid_;
}

Topology build_grid(int rows, int cols) {
  if (rows < 1 || cols < 1) throw ConfigError("build_grid: rows and cols must be >= 1");
  std::vector<std::pair<int, int>> edges;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int id = r * cols + c;
      if (c + 1 < cols) edges.emplace_back(id, id + 1);
      if (r + 1 < rows) edges.emplace_back(id, id + cols);
    }
  }
  return Topology(rows * cols, edges, GridShape{rows, cols});
}

Topology parse_edge_list(std::istream& in, std::optional<int> node_count) {
  std::vector<std::pair<int, int>> edges;
  int max_id = -1;
  std::string line;
  int line_no = 0;
  std::optional<int> declared;
  while (std::getline(in, line)) {
    ++line_no;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      // `# nodes N` declares the node count so isolated trailing nodes survive a round trip.
      std::istringstream header(line.substr(first + 1));
      std::string key;
      int count = 0;
      if (header >> key >> count && key == "nodes") declared = count;
      continue;
    }
    std::istringstream fields(line);
    long a = 0;
    long b = 0;
    std::string rest;
    if (!(fields >> a >> b) || (fields >> rest)) {
      throw ConfigError("edge list line " + std::to_string(line_no) + ": expected `src dst`");
    }
    if (a < 0 || b < 0) throw ConfigError("edge list line " + std::to_string(line_no) + ": negative node id");
    edges.emplace_back(static_cast<int>(a), static_cast<int>(b));
    max_id = std::max({max_id, static_cast<int>(a), static_cast<int>(b)});
  }
  const int n = node_count ? *node_count : declared.value_or(max_id + 1);
  return Topology(n, edges);
}

Topology load_edge_list(const std::string& path, std::optional<int> node_count) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge list " + path);
  return parse_edge_list(in, node_count);
}

void write_edge_list(std::ostream& out, const Topology& topology) {
  out << "# nodes " << topology.node_count() << '\n';
  for (auto [a, b] : topology.undirected_edges()) out << a << ' ' << b << '\n';
}

std::size_t LinkOutcomes::delivered_count() const {
  return static_cast<std::size_t>(std::count(delivered_.begin(), delivered_.end(), 1));
}

LinkOutcomes sample_link_outcomes(const Topology& topology, double quality, Rng& rng) {
  LinkOutcomes out;
  sample_link_outcomes(topology, quality, rng, out);
  return out;
}

void sample_link_outcomes(const Topology& topology, double quality, Rng& rng, LinkOutcomes& out) {
  if (!(quality >= 0.0 && quality <= 1.0)) throw ConfigError("link quality must lie in [0, 1]");
  const std::size_t n = topology.directed_edge_count();
  if (out.size() != n) out = LinkOutcomes(n, false);
  if (quality >= 1.0 || quality <= 0.0) {
    for (std::size_t e = 0; e < n; ++e) out.set(e, quality >= 1.0);
    return;
  }
  std::bernoulli_distribution delivered(quality);
  for (std::size_t e = 0; e < n; ++e) out.set(e, delivered(rng));
}

}  // namespace sodesn
