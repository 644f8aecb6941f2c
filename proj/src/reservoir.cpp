#include "sodesn/reservoir.hpp"

#include <algorithm>
#include <string>

#include "sodesn/error.hpp"
#include "sodesn/linalg.hpp"

namespace sodesn {

const char* to_string(ReadoutTaps taps) { return taps == ReadoutTaps::proxy ? "proxy" : "neighbor_state"; }
const char* to_string(ReadoutActivation activation) {
  return activation == ReadoutActivation::linear ? "linear" : "tanh";
}

ReadoutTaps parse_readout_taps(const std::string& s) {
  if (s == "proxy") return ReadoutTaps::proxy;
  if (s == "neighbor_state") return ReadoutTaps::neighbor_state;
  throw ConfigError("unknown readout taps '" + s + "' (expected proxy | neighbor_state)");
}

ReadoutActivation parse_readout_activation(const std::string& s) {
  if (s == "linear") return ReadoutActivation::linear;
  if (s == "tanh") return ReadoutActivation::tanh;
  throw ConfigError("unknown readout activation '" + s + "' (expected linear | tanh)");
}

namespace {

void check_spec(const NodeSpec& spec) {
  if (spec.internal <= 0) throw ConfigError("node spec: internal units per node must be positive");
  if (spec.inputs < 0 || spec.outputs < 0) throw ConfigError("node spec: negative unit count");
}

void check_shape(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols, const char* what, int node) {
  if (m.rows() != rows || m.cols() != cols) {
    throw NumericError(std::string("node ") + std::to_string(node) + ": " + what + " is " + std::to_string(m.rows()) +
                       "x" + std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                       std::to_string(cols));
  }
}

}  // namespace

Sodesn::Sodesn(Topology topology, NodeSpec spec, std::vector<NodeWeights> nodes, InitOptions options,
               std::uint64_t seed)
    : topology_(std::move(topology)), spec_(spec), options_(options), seed_(seed), nodes_(std::move(nodes)) {
  check_spec(spec_);
  if (static_cast<int>(nodes_.size()) != topology_.node_count()) {
    throw ConfigError("sodesn: one weight set per node required");
  }
  for (int j = 0; j < node_count(); ++j) {
    const auto& w = nodes_[static_cast<std::size_t>(j)];
    check_shape(w.internal, spec_.internal, spec_.internal, "internal matrix", j);
    check_shape(w.input, spec_.internal, spec_.inputs, "input matrix", j);
    check_shape(w.cross, spec_.internal, proxy_count(j), "cross matrix", j);
    check_shape(w.readout, spec_.outputs, feature_count(j), "readout matrix", j);
  }
}

ProxySource Sodesn::proxy_source(int node, Eigen::Index proxy) const {
  const auto& n = topology_.neighbors(node);
  const auto block = proxy / spec_.internal;
  if (proxy < 0 || block >= static_cast<Eigen::Index>(n.size())) throw NumericError("proxy index out of range");
  return {n[static_cast<std::size_t>(block)], static_cast<int>(proxy % spec_.internal)};
}

Eigen::Index Sodesn::proxy_block_offset(int dst, int src) const {
  const auto& n = topology_.neighbors(dst);
  auto it = std::lower_bound(n.begin(), n.end(), src);
  if (it == n.end() || *it != src) return -1;
  return Eigen::Index(it - n.begin()) * spec_.internal;
}

void Sodesn::set_readout(int j, Eigen::MatrixXd readout) {
  auto& w = nodes_.at(static_cast<std::size_t>(j));
  check_shape(readout, spec_.outputs, feature_count(j), "readout matrix", j);
  w.readout = std::move(readout);
}

void Sodesn::set_readout_row(int j, Eigen::Index row, const Eigen::Ref<const Eigen::RowVectorXd>& weights) {
  auto& w = nodes_.at(static_cast<std::size_t>(j));
  if (row < 0 || row >= w.readout.rows() || weights.size() != w.readout.cols()) {
    throw NumericError("set_readout_row: shape mismatch on node " + std::to_string(j));
  }
  w.readout.row(row) = weights;
}

void Sodesn::scale_reservoir(double factor) {
  for (auto& w : nodes_) {
    w.internal *= factor;
    w.cross *= factor;
  }
}

bool Sodesn::operator==(const Sodesn& other) const {
  return topology_ == other.topology_ && spec_ == other.spec_ && nodes_ == other.nodes_ &&
         options_.rho_target == other.options_.rho_target && options_.taps == other.options_.taps &&
         options_.activation == other.options_.activation && options_.density_local == other.options_.density_local &&
         options_.density_cross == other.options_.density_cross && seed_ == other.seed_;
}

Sodesn init_sodesn(const Topology& topology, const NodeSpec& spec, const InitOptions& options, std::uint64_t seed) {
  check_spec(spec);
  if (!(options.rho_target > 0.0 && options.rho_target < 1.0)) throw ConfigError("rho_target must lie in (0, 1)");
  if (!(options.density_local > 0.0 && options.density_local <= 1.0) ||
      !(options.density_cross > 0.0 && options.density_cross <= 1.0)) {
    throw ConfigError("connection densities must lie in (0, 1]");
  }

  Rng rng = make_rng(seed, {stream::init});
  std::uniform_real_distribution<double> weight(-1.0, 1.0);
  std::bernoulli_distribution local_edge(options.density_local);
  std::bernoulli_distribution cross_edge(options.density_cross);

  const Eigen::Index n = spec.internal;
  std::vector<NodeWeights> nodes(static_cast<std::size_t>(topology.node_count()));
  for (int j = 0; j < topology.node_count(); ++j) {
    auto& w = nodes[static_cast<std::size_t>(j)];
    const Eigen::Index proxies = Eigen::Index(topology.neighbors(j).size()) * n;

    w.internal = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < n; ++c) {
        if (local_edge(rng)) w.internal(r, c) = weight(rng);
      }
    }
    const double lambda = spectral_radius(w.internal);
    w.internal /= std::max(lambda, 1.0);

    w.input.resize(n, spec.inputs);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < spec.inputs; ++c) w.input(r, c) = weight(rng);
    }

    w.cross = Eigen::MatrixXd::Zero(n, proxies);
    for (Eigen::Index c = 0; c < proxies; ++c) {
      for (Eigen::Index r = 0; r < n; ++r) {
        if (cross_edge(rng)) w.cross(r, c) = weight(rng);
      }
    }
    w.readout = Eigen::MatrixXd::Zero(spec.outputs, proxies + n + spec.inputs);
  }

  Sodesn net(topology, spec, std::move(nodes), options, seed);
  const double rho = spectral_radius(assemble_internal_matrix(net));
  if (rho > 0.0) net.scale_reservoir(options.rho_target / rho);
  return net;
}

Eigen::SparseMatrix<double> assemble_internal_matrix(const Sodesn& net) {
  const Eigen::Index n = net.spec().internal;
  std::vector<Eigen::Triplet<double>> entries;
  for (int j = 0; j < net.node_count(); ++j) {
    const auto& w = net.node(j);
    const Eigen::Index row0 = Eigen::Index(j) * n;
    for (Eigen::Index c = 0; c < n; ++c) {
      for (Eigen::Index r = 0; r < n; ++r) {
        if (w.internal(r, c) != 0.0) entries.emplace_back(row0 + r, row0 + c, w.internal(r, c));
      }
    }
    const auto& neighbors = net.topology().neighbors(j);
    for (std::size_t k = 0; k < neighbors.size(); ++k) {
      const Eigen::Index col0 = Eigen::Index(neighbors[k]) * n;
      for (Eigen::Index u = 0; u < n; ++u) {
        const Eigen::Index p = Eigen::Index(k) * n + u;
        for (Eigen::Index r = 0; r < n; ++r) {
          if (w.cross(r, p) != 0.0) entries.emplace_back(row0 + r, col0 + u, w.cross(r, p));
        }
      }
    }
  }
  Eigen::SparseMatrix<double> global(net.total_internal(), net.total_internal());
  global.setFromTriplets(entries.begin(), entries.end());
  return global;
}

NetworkState zero_state(const Sodesn& net) {
  NetworkState s;
  s.u = Eigen::VectorXd::Zero(net.total_inputs());
  s.x = Eigen::VectorXd::Zero(net.total_internal());
  s.y = Eigen::VectorXd::Zero(net.total_outputs());
  s.proxy.reserve(static_cast<std::size_t>(net.node_count()));
  for (int j = 0; j < net.node_count(); ++j) s.proxy.push_back(Eigen::VectorXd::Zero(net.proxy_count(j)));
  return s;
}

namespace {

void check_state(const Sodesn& net, const NetworkState& s) {
  if (s.x.size() != net.total_internal() || s.u.size() != net.total_inputs() || s.y.size() != net.total_outputs() ||
      static_cast<int>(s.proxy.size()) != net.node_count()) {
    throw NumericError("network state dimensions do not match the network");
  }
  for (int j = 0; j < net.node_count(); ++j) {
    if (s.proxy[static_cast<std::size_t>(j)].size() != net.proxy_count(j)) {
      throw NumericError("proxy vector of node " + std::to_string(j) + " has the wrong length");
    }
  }
}

}  // namespace

void readout_features(const Sodesn& net, const NetworkState& state, int node, Eigen::Ref<Eigen::VectorXd> out) {
  const Eigen::Index n = net.spec().internal;
  const Eigen::Index k = net.spec().inputs;
  const Eigen::Index m = net.proxy_count(node);
  if (out.size() != m + n + k) throw NumericError("readout_features: output has the wrong length");
  if (net.taps() == ReadoutTaps::proxy) {
    out.head(m) = state.proxy[static_cast<std::size_t>(node)];
  } else {
    const auto& neighbors = net.topology().neighbors(node);
    for (std::size_t b = 0; b < neighbors.size(); ++b) {
      out.segment(Eigen::Index(b) * n, n) = state.x.segment(Eigen::Index(neighbors[b]) * n, n);
    }
  }
  out.segment(m, n) = state.x.segment(Eigen::Index(node) * n, n);
  out.tail(k) = state.u.segment(Eigen::Index(node) * k, k);
}

Eigen::VectorXd readout_features(const Sodesn& net, const NetworkState& state, int node) {
  Eigen::VectorXd f(net.feature_count(node));
  readout_features(net, state, node, f);
  return f;
}

void step_into(const Sodesn& net, const NetworkState& prev, const Eigen::Ref<const Eigen::VectorXd>& inputs,
               const LinkOutcomes& links, NetworkState& next) {
  check_state(net, prev);
  if (inputs.size() != net.total_inputs()) throw NumericError("step: input vector has the wrong length");
  if (links.size() != net.topology().directed_edge_count()) throw NumericError("step: link outcomes do not match");
  if (&prev == &next) throw NumericError("step_into: prev and next must be distinct");
  if (next.x.size() != prev.x.size() || next.proxy.size() != prev.proxy.size()) next = zero_state(net);

  const Eigen::Index n = net.spec().internal;
  const Eigen::Index k = net.spec().inputs;
  const Eigen::Index l = net.spec().outputs;
  const auto& topo = net.topology();
  next.u = inputs;

  // Phase 1: activations from the previous snapshot.
  for (int j = 0; j < net.node_count(); ++j) {
    const auto& w = net.node(j);
    auto xj = next.x.segment(Eigen::Index(j) * n, n);
    xj.noalias() = w.internal * prev.x.segment(Eigen::Index(j) * n, n);
    if (k > 0) xj.noalias() += w.input * inputs.segment(Eigen::Index(j) * k, k);
    if (w.cross.cols() > 0) xj.noalias() += w.cross * prev.proxy[static_cast<std::size_t>(j)];
    xj = xj.array().tanh();
  }

  // Phase 2: exchange. A proxy holds the sender's fresh activation or 0.
  for (int j = 0; j < net.node_count(); ++j) {
    auto& proxy = next.proxy[static_cast<std::size_t>(j)];
    const auto& neighbors = topo.neighbors(j);
    for (std::size_t b = 0; b < neighbors.size(); ++b) {
      const int src = neighbors[b];
      const int e = topo.edge_index(src, j);
      auto block = proxy.segment(Eigen::Index(b) * n, n);
      if (links.delivered(static_cast<std::size_t>(e))) {
        block = next.x.segment(Eigen::Index(src) * n, n);
      } else {
        block.setZero();
      }
    }
  }

  if (l > 0) {
    Eigen::VectorXd features;
    for (int j = 0; j < net.node_count(); ++j) {
      features.resize(net.feature_count(j));
      readout_features(net, next, j, features);
      auto yj = next.y.segment(Eigen::Index(j) * l, l);
      yj.noalias() = net.node(j).readout * features;
      if (net.activation() == ReadoutActivation::tanh) yj = yj.array().tanh();
    }
  }
}

NetworkState step(const Sodesn& net, const NetworkState& state, const Eigen::Ref<const Eigen::VectorXd>& inputs,
                  const LinkOutcomes& links) {
  NetworkState next = zero_state(net);
  step_into(net, state, inputs, links, next);
  return next;
}

}  // namespace sodesn
