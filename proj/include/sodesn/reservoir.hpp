#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstdint>
#include <vector>

#include "sodesn/random.hpp"
#include "sodesn/topology.hpp"

namespace sodesn {

/// Units hosted by every node (uniform across nodes).
struct NodeSpec {
  int inputs = 1;
  int internal = 15;
  int outputs = 1;
  bool operator==(const NodeSpec&) const = default;
};

/// Where a node's readout takes its neighbor columns from.
enum class ReadoutTaps {
  /// Proxy units after this step's exchange; a failed link reads 0.
  proxy,
  /// Neighbor internal activations read directly, unaffected by link loss.
  neighbor_state,
};

/// Output-unit activation. `tanh` pairs with an atanh-transformed teacher.
enum class ReadoutActivation { linear, tanh };

const char* to_string(ReadoutTaps taps);
const char* to_string(ReadoutActivation activation);
ReadoutTaps parse_readout_taps(const std::string& s);
ReadoutActivation parse_readout_activation(const std::string& s);

struct InitOptions {
  double density_local = 0.2;
  double density_cross = 0.1;
  double rho_target = 0.66;
  ReadoutTaps taps = ReadoutTaps::neighbor_state;
  ReadoutActivation activation = ReadoutActivation::linear;
};

/// Weights stored on one node.
struct NodeWeights {
  Eigen::MatrixXd internal;  ///< N_j x N_j
  Eigen::MatrixXd input;     ///< N_j x K_j
  Eigen::MatrixXd cross;     ///< N_j x M_j, proxy units -> local internal units
  Eigen::MatrixXd readout;   ///< L_j x (M_j + N_j + K_j), columns [proxy; internal; input]
  bool operator==(const NodeWeights&) const = default;
};

/// A local placeholder for one remote internal unit.
struct ProxySource {
  int node = 0;
  int unit = 0;
};

/// Distributed reservoir over a sensor topology. Global unit ordering is
/// node-major: node j owns inputs [j*K_m, (j+1)*K_m), internal units
/// [j*N_m, (j+1)*N_m) and outputs [j*L_m, (j+1)*L_m). Proxy units of node j
/// are grouped by neighbor in ascending neighbor order.
class Sodesn {
 public:
  Sodesn() = default;
  /// Validates every per-node matrix shape; throws ConfigError/NumericError.
  Sodesn(Topology topology, NodeSpec spec, std::vector<NodeWeights> nodes, InitOptions options,
         std::uint64_t seed = 0);

  const Topology& topology() const noexcept { return topology_; }
  const NodeSpec& spec() const noexcept { return spec_; }
  const InitOptions& options() const noexcept { return options_; }
  std::uint64_t seed() const noexcept { return seed_; }
  double rho_target() const noexcept { return options_.rho_target; }
  ReadoutTaps taps() const noexcept { return options_.taps; }
  ReadoutActivation activation() const noexcept { return options_.activation; }

  int node_count() const noexcept { return topology_.node_count(); }
  Eigen::Index total_inputs() const noexcept { return Eigen::Index(node_count()) * spec_.inputs; }
  Eigen::Index total_internal() const noexcept { return Eigen::Index(node_count()) * spec_.internal; }
  Eigen::Index total_outputs() const noexcept { return Eigen::Index(node_count()) * spec_.outputs; }

  Eigen::Index proxy_count(int node) const { return Eigen::Index(topology_.neighbors(node).size()) * spec_.internal; }
  Eigen::Index feature_count(int node) const { return proxy_count(node) + spec_.internal + spec_.inputs; }
  ProxySource proxy_source(int node, Eigen::Index proxy) const;
  /// Offset of the proxy block on `dst` that mirrors `src`; -1 when not neighbors.
  Eigen::Index proxy_block_offset(int dst, int src) const;

  const NodeWeights& node(int j) const { return nodes_.at(static_cast<std::size_t>(j)); }
  const std::vector<NodeWeights>& nodes() const noexcept { return nodes_; }

  void set_readout(int j, Eigen::MatrixXd readout);
  void set_readout_row(int j, Eigen::Index row, const Eigen::Ref<const Eigen::RowVectorXd>& weights);
  /// Multiplies all internal and cross-node weights by `factor`.
  void scale_reservoir(double factor);

  bool operator==(const Sodesn& other) const;

 private:
  Topology topology_;
  NodeSpec spec_;
  InitOptions options_;
  std::uint64_t seed_ = 0;
  std::vector<NodeWeights> nodes_;
};

/// Builds an untrained network: per node a sparse local matrix scaled by
/// 1/max(lambda_j, 1), dense input weights, sparse proxy->internal weights
/// and an all-zero readout; then rescales internal and cross weights so the
/// assembled global matrix has spectral radius rho_target.
Sodesn init_sodesn(const Topology& topology, const NodeSpec& spec, const InitOptions& options, std::uint64_t seed);

/// Global N x N internal matrix: local blocks on the diagonal, cross-node
/// weights at (unit on j, unit on neighbor i).
Eigen::SparseMatrix<double> assemble_internal_matrix(const Sodesn& net);

/// Activations of all units after a step.
struct NetworkState {
  Eigen::VectorXd u;                   ///< K, inputs fed at this step
  Eigen::VectorXd x;                   ///< N, internal activations
  std::vector<Eigen::VectorXd> proxy;  ///< per node, M_j
  Eigen::VectorXd y;                   ///< L, outputs
};

NetworkState zero_state(const Sodesn& net);

/// One synchronous update. Phase 1 computes every node's activation from the
/// previous internal and proxy values; phase 2 copies delivered activations
/// into the receiving proxies (failed links write 0); then the readouts run.
NetworkState step(const Sodesn& net, const NetworkState& state, const Eigen::Ref<const Eigen::VectorXd>& inputs,
                  const LinkOutcomes& links);

/// step() writing into a preallocated `next` (must not alias `prev`).
void step_into(const Sodesn& net, const NetworkState& prev, const Eigen::Ref<const Eigen::VectorXd>& inputs,
               const LinkOutcomes& links, NetworkState& next);

/// Readout input of node j in the order [proxy-or-neighbor; internal; input].
void readout_features(const Sodesn& net, const NetworkState& state, int node, Eigen::Ref<Eigen::VectorXd> out);
Eigen::VectorXd readout_features(const Sodesn& net, const NetworkState& state, int node);

}  // namespace sodesn
