#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "sodesn/linalg.hpp"

namespace sodesn {

/// Centralized echo state network predicting one sensor from the others.
/// Readout columns are ordered [inputs; internal].
struct Esn {
  Eigen::MatrixXd reservoir;   ///< N x N
  Eigen::MatrixXd input;       ///< N x K
  Eigen::RowVectorXd readout;  ///< 1 x (K + N)
  double rho_target = 0.66;
  std::vector<int> input_sensors;
  int target_sensor = -1;

  Eigen::Index internal_count() const noexcept { return reservoir.rows(); }
  Eigen::Index input_count() const noexcept { return input.cols(); }
  bool operator==(const Esn&) const = default;
};

struct EsnOptions {
  int n_internal = 120;
  double rho_target = 0.66;
  double density = 0.1;
  /// Input weights are uniform on [-input_scaling, input_scaling].
  double input_scaling = 1.0;
  Eigen::Index washout = 0;
  /// Per-input probability that a reading reaches the center in a step.
  double link_quality = 1.0;
  std::uint64_t seed = 0;       ///< weight initialization
  std::uint64_t link_seed = 0;  ///< input-loss stream
  SolveOptions solve;
};

/// Random sparse reservoir rescaled to rho_target, dense input weights, zero readout.
Esn init_esn(int n_inputs, const EsnOptions& options);

/// Sample matrix [u; x] per step after the washout, with each input zeroed on
/// steps where its link fails.
Eigen::MatrixXd esn_harvest(const Esn& esn, const Eigen::Ref<const Eigen::MatrixXd>& inputs, Eigen::Index washout,
                            double link_quality, std::uint64_t link_seed);

/// Solves the readout of an existing reservoir by pseudoinverse.
void train_esn_readout(Esn& esn, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                       const Eigen::Ref<const Eigen::VectorXd>& teacher, const EsnOptions& options);

/// init_esn followed by train_esn_readout. `inputs` (T x K) must not contain the teacher column.
Esn train_esn(const Eigen::Ref<const Eigen::MatrixXd>& inputs, const Eigen::Ref<const Eigen::VectorXd>& teacher,
              const EsnOptions& options);

/// Step-by-step prediction from the zero state with per-input Bernoulli loss (lost inputs read 0).
Eigen::VectorXd esn_predict(const Esn& esn, const Eigen::Ref<const Eigen::MatrixXd>& inputs, double link_quality,
                            std::uint64_t link_seed);

/// Internal trajectory from an explicit initial state, without input loss.
Eigen::MatrixXd esn_trajectory(const Esn& esn, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                               const Eigen::Ref<const Eigen::VectorXd>& initial_state);

}  // namespace sodesn
