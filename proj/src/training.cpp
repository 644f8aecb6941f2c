#include "sodesn/training.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sodesn/error.hpp"
#include "sodesn/parallel.hpp"

namespace sodesn {

Eigen::MatrixXd transform_teacher(const Eigen::Ref<const Eigen::MatrixXd>& teacher, ReadoutActivation activation) {
  if (activation == ReadoutActivation::linear) return teacher;
  return teacher.unaryExpr([](double d) { return std::atanh(std::clamp(d, -0.999999, 0.999999)); });
}

SampleMatrices harvest_states(const Sodesn& net, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                              const Eigen::Ref<const Eigen::MatrixXd>& teacher, const HarvestOptions& options) {
  const Eigen::Index length = inputs.rows();
  if (inputs.cols() != net.total_inputs()) throw NumericError("harvest_states: input column count mismatch");
  if (teacher.rows() != length) throw NumericError("harvest_states: inputs and teacher differ in length");
  if (teacher.cols() != net.total_outputs()) throw NumericError("harvest_states: teacher column count mismatch");
  if (options.washout < 0 || length <= options.washout) {
    throw DataError("harvest_states: series of length " + std::to_string(length) + " not longer than washout " +
                    std::to_string(options.washout));
  }
  if (options.substitute) {
    if (options.substitute->sensor < 0 || options.substitute->sensor >= net.total_inputs()) {
      throw ConfigError("harvest_states: substituted sensor out of range");
    }
    if (!(options.substitute->noise.amplitude > 0.0)) throw ConfigError("noise amplitude must be positive");
  }
  if (options.only_node && (*options.only_node < 0 || *options.only_node >= net.node_count())) {
    throw ConfigError("harvest_states: unknown node");
  }

  SampleMatrices out;
  out.washout = options.washout;
  out.node_offset.assign(static_cast<std::size_t>(net.node_count()), -1);
  Eigen::Index columns = 0;
  for (int j = 0; j < net.node_count(); ++j) {
    if (options.only_node && *options.only_node != j) continue;
    out.node_offset[static_cast<std::size_t>(j)] = columns;
    columns += net.feature_count(j);
  }
  const Eigen::Index rows = length - options.washout;
  out.states.resize(rows, columns);
  out.teacher = transform_teacher(teacher.bottomRows(rows), net.activation());

  Rng link_rng(options.link_seed);
  Rng noise_rng(options.substitute ? options.substitute->noise.seed : 0);
  std::uniform_real_distribution<double> noise(
      options.substitute ? -options.substitute->noise.amplitude : -1.0,
      options.substitute ? options.substitute->noise.amplitude : 1.0);

  NetworkState prev = zero_state(net);
  NetworkState next = zero_state(net);
  LinkOutcomes links = LinkOutcomes::all_delivered(net.topology());
  Eigen::VectorXd u(net.total_inputs());
  Eigen::VectorXd features;
  for (Eigen::Index n = 0; n < length; ++n) {
    u = inputs.row(n).transpose();
    if (options.substitute) u(options.substitute->sensor) = noise(noise_rng);
    sample_link_outcomes(net.topology(), options.link_quality, link_rng, links);
    step_into(net, prev, u, links, next);
    std::swap(prev, next);
    if (n < options.washout) continue;
    const Eigen::Index row = n - options.washout;
    for (int j = 0; j < net.node_count(); ++j) {
      const Eigen::Index offset = out.node_offset[static_cast<std::size_t>(j)];
      if (offset < 0) continue;
      features.resize(net.feature_count(j));
      readout_features(net, prev, j, features);
      out.states.row(row).segment(offset, features.size()) = features.transpose();
    }
  }
  return out;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> project_node_samples(const SampleMatrices& samples, const Sodesn& net,
                                                                 int node) {
  if (node < 0 || node >= net.node_count() || static_cast<std::size_t>(node) >= samples.node_offset.size()) {
    throw ConfigError("project_node_samples: unknown node " + std::to_string(node));
  }
  const Eigen::Index offset = samples.node_offset[static_cast<std::size_t>(node)];
  if (offset < 0) throw ConfigError("project_node_samples: node " + std::to_string(node) + " was not harvested");
  const Eigen::Index l = net.spec().outputs;
  return {samples.states.middleCols(offset, net.feature_count(node)),
          samples.teacher.middleCols(Eigen::Index(node) * l, l)};
}

Sodesn train_readouts(const Sodesn& net, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                      const Eigen::Ref<const Eigen::MatrixXd>& teacher, const HarvestOptions& options,
                      const SolveOptions& solve) {
  if (net.spec().outputs == 0) throw ConfigError("train_readouts: network has no output units");
  const SampleMatrices samples = harvest_states(net, inputs, teacher, options);
  Sodesn trained = net;
  for (int j = 0; j < net.node_count(); ++j) {
    if (samples.node_offset[static_cast<std::size_t>(j)] < 0) continue;
    auto [m, t] = project_node_samples(samples, net, j);
    trained.set_readout(j, solve_readout(m, t, solve));
  }
  return trained;
}

Sodesn train_fault_detectors(const Sodesn& net, const Eigen::Ref<const Eigen::MatrixXd>& training,
                             const FaultTrainingOptions& options, int* passes) {
  const NodeSpec& spec = net.spec();
  if (spec.outputs < spec.inputs) {
    throw ConfigError("train_fault_detectors: every sensor needs an output unit on its node (outputs >= inputs)");
  }
  if (training.cols() != net.total_inputs()) throw NumericError("train_fault_detectors: training column count mismatch");
  const int sensors = static_cast<int>(net.total_inputs());

  // Teacher: output k of node j reproduces sensor k of node j; extra outputs stay untrained.
  Eigen::MatrixXd teacher = Eigen::MatrixXd::Zero(training.rows(), net.total_outputs());
  for (int s = 0; s < sensors; ++s) {
    const int node = s / spec.inputs;
    teacher.col(Eigen::Index(node) * spec.outputs + s % spec.inputs) = training.col(s);
  }

  std::vector<Eigen::RowVectorXd> rows(static_cast<std::size_t>(sensors));
  parallel_for(static_cast<std::size_t>(sensors), options.jobs, [&](std::size_t index) {
    const int s = static_cast<int>(index);
    const int node = s / spec.inputs;
    const int local = s % spec.inputs;
    HarvestOptions harvest;
    harvest.substitute = Substitution{s, NoiseSpec{options.noise.amplitude, derive_seed(options.noise.seed, {stream::noise, std::uint64_t(s)})}};
    harvest.washout = options.washout;
    harvest.link_quality = options.link_quality;
    harvest.link_seed = derive_seed(options.seed, {stream::links, std::uint64_t(s)});
    harvest.only_node = node;
    const SampleMatrices samples = harvest_states(net, training, teacher, harvest);
    auto [m, t] = project_node_samples(samples, net, node);
    rows[index] = solve_readout(m, t.col(local), options.solve);
  });

  Sodesn trained = net;
  for (int s = 0; s < sensors; ++s) {
    trained.set_readout_row(s / spec.inputs, s % spec.inputs, rows[static_cast<std::size_t>(s)]);
  }
  if (passes) *passes = sensors;
  return trained;
}

}  // namespace sodesn
