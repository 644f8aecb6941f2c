#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "sodesn/linalg.hpp"
#include "sodesn/reservoir.hpp"

namespace sodesn {

/// Uniform white noise on [-amplitude, amplitude] in normalized input units.
struct NoiseSpec {
  double amplitude = 1.0;
  std::uint64_t seed = 0;
};

/// Replace one sensor's input column by fresh noise at every step.
struct Substitution {
  int sensor = 0;
  NoiseSpec noise;
};

struct HarvestOptions {
  std::optional<Substitution> substitute;
  Eigen::Index washout = 0;
  double link_quality = 1.0;
  std::uint64_t link_seed = 0;
  /// Collect only this node's readout features.
  std::optional<int> only_node;
};

/// Sampled readout features and teacher rows after the washout.
struct SampleMatrices {
  Eigen::MatrixXd states;   ///< S x (sum of harvested feature counts), node blocks in node order
  Eigen::MatrixXd teacher;  ///< S x L, already transformed for the readout activation
  Eigen::Index washout = 0;
  std::vector<Eigen::Index> node_offset;  ///< column offset of each node's block, -1 if not harvested
};

/// Washout used when none is configured: min(1000, 10% of the series).
inline Eigen::Index default_washout(Eigen::Index length) { return std::min<Eigen::Index>(1000, length / 10); }

/// Runs the network over normalized `inputs` (T x K) from the zero state and
/// collects, for every step n >= washout, each node's [proxy; internal;
/// input] features and the teacher row n (T x L).
SampleMatrices harvest_states(const Sodesn& net, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                              const Eigen::Ref<const Eigen::MatrixXd>& teacher, const HarvestOptions& options);

/// Node j's feature columns and its own teacher columns.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> project_node_samples(const SampleMatrices& samples, const Sodesn& net,
                                                                 int node);

/// Offline training of every node's readout from one harvesting pass.
Sodesn train_readouts(const Sodesn& net, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                      const Eigen::Ref<const Eigen::MatrixXd>& teacher, const HarvestOptions& options,
                      const SolveOptions& solve = {});

struct FaultTrainingOptions {
  NoiseSpec noise;
  Eigen::Index washout = 0;
  double link_quality = 1.0;
  std::uint64_t seed = 0;  ///< link-outcome streams, one per sensor
  SolveOptions solve;
  int jobs = 1;
};

/// Trains one readout row per sensor: output k of node j predicts local
/// sensor k. For each sensor a separate harvesting pass feeds noise in place
/// of that sensor and uses its true reading as teacher; only that row of the
/// readout is replaced. `passes`, when given, receives the number of passes run.
Sodesn train_fault_detectors(const Sodesn& net, const Eigen::Ref<const Eigen::MatrixXd>& training,
                             const FaultTrainingOptions& options, int* passes = nullptr);

/// Teacher transform matching the readout activation (atanh with clipping for tanh).
Eigen::MatrixXd transform_teacher(const Eigen::Ref<const Eigen::MatrixXd>& teacher, ReadoutActivation activation);

}  // namespace sodesn
