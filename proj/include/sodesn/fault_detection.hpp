#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sodesn/data.hpp"
#include "sodesn/metrics.hpp"
#include "sodesn/reservoir.hpp"

namespace sodesn {

enum class ThresholdMode { absolute_deviation, windowed_nrmse };
enum class Feedback { replace, passthrough };

const char* to_string(ThresholdMode mode);
const char* to_string(Feedback feedback);
ThresholdMode parse_threshold_mode(const std::string& s);
Feedback parse_feedback(const std::string& s);

/// Per-sensor flagging rule. Absolute thresholds are in engineering units,
/// windowed thresholds are dimensionless NRMSE values.
struct ThresholdPolicy {
  ThresholdMode mode = ThresholdMode::windowed_nrmse;
  Eigen::VectorXd thresholds;
  Eigen::Index window = 96;
  double safety_factor = 1.2;
};

struct CalibrationOptions {
  ThresholdMode mode = ThresholdMode::windowed_nrmse;
  double safety_factor = 1.2;
  Eigen::Index window = 96;
  double link_quality = 1.0;
  std::uint64_t link_seed = 0;
};

/// Thresholds from fault-free traces (engineering units, T x K):
/// safety_factor times the largest absolute deviation, or the largest
/// windowed NRMSE. Zero thresholds are accepted and reported in `warnings`.
ThresholdPolicy calibrate_thresholds_from_traces(const Eigen::Ref<const Eigen::MatrixXd>& predictions,
                                                 const Eigen::Ref<const Eigen::MatrixXd>& readings,
                                                 ThresholdMode mode, double safety_factor, Eigen::Index window,
                                                 std::vector<std::string>* warnings = nullptr);

/// Runs the trained network over fault-free validation data (which must
/// carry normalization parameters) and calibrates on its predictions.
ThresholdPolicy calibrate_thresholds(const Sodesn& net, const SeriesSet& validation, const CalibrationOptions& options,
                                     std::vector<std::string>* warnings = nullptr);

/// Online per-sensor detector state: network activations, latest
/// predictions, rolling statistics and sticky flags.
class Detector {
 public:
  Detector(const Sodesn& net, Normalization normalization, ThresholdPolicy policy, Feedback feedback,
           bool thresholds_enabled = true);

  const NetworkState& state() const noexcept { return state_; }
  const std::vector<bool>& flags() const noexcept { return flags_; }
  /// Latest predictions in engineering units.
  const Eigen::VectorXd& predictions() const noexcept { return predictions_; }
  /// Latest deviation statistic; NaN while a window is still filling.
  const Eigen::VectorXd& deviations() const noexcept { return deviations_; }
  /// The inputs actually fed to the network at the last step (normalized).
  const Eigen::VectorXd& fed_inputs() const noexcept { return state_.u; }
  const ThresholdPolicy& policy() const noexcept { return policy_; }
  Feedback feedback() const noexcept { return feedback_; }

  void flag(int sensor);
  void reset_flags();

  /// One monitoring step on raw readings (engineering units).
  void step(const Eigen::Ref<const Eigen::VectorXd>& readings, const LinkOutcomes& links);

 private:
  const Sodesn* net_;
  Normalization norm_;
  ThresholdPolicy policy_;
  Feedback feedback_;
  bool thresholds_enabled_;
  NetworkState state_;
  NetworkState scratch_;
  Eigen::VectorXd predictions_;       // engineering
  Eigen::VectorXd predictions_norm_;  // normalized
  Eigen::VectorXd deviations_;
  std::vector<bool> flags_;
  std::vector<RollingNrmse> rolling_;
};

struct MonitorOptions {
  Feedback feedback = Feedback::replace;
  double link_quality = 1.0;
  std::uint64_t link_seed = 0;
  bool use_thresholds = true;
  /// Oracle flags: each sensor is flagged from its fault start step.
  std::optional<FaultSchedule> oracle;
  /// Flags carried over from an earlier run.
  std::vector<int> initial_flags;
};

struct SensorSummary {
  std::string name;
  std::optional<double> nrmse;  ///< nullopt if the truth has zero variance
  double max_abs_error = 0.0;
  std::optional<Eigen::Index> first_flag_step;
  bool flagged = false;
};

struct FaultReport {
  std::vector<std::string> names;
  Eigen::MatrixXd truth;        ///< T x K, engineering units
  Eigen::MatrixXd readings;     ///< T x K, engineering units
  Eigen::MatrixXd predictions;  ///< T x K, engineering units
  Eigen::MatrixXd deviations;   ///< T x K, NaN while undefined
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> flagged;
  std::vector<SensorSummary> sensors;
  /// Mean NRMSE over sensors unflagged at the end of the run.
  std::optional<double> mean_nrmse_unflagged;
  /// Supplementary detection quality against a known fault schedule.
  std::optional<double> flag_precision;
  std::optional<double> flag_recall;
};

/// Full trace over `readings`. `truth` defaults to the readings.
FaultReport run_monitor(const Sodesn& net, const SeriesSet& readings, const ThresholdPolicy& policy,
                        const MonitorOptions& options, const Eigen::MatrixXd* truth = nullptr,
                        const FaultSchedule* known_faults = nullptr);

/// Mean NRMSE over the given sensors of a report.
double mean_nrmse(const FaultReport& report, const std::vector<int>& sensors);

/// CSV trace: step,sensor,truth,prediction,deviation,flagged.
void write_trace_csv(std::ostream& out, const FaultReport& report);
/// Structured summary (JSON).
std::string summary_json(const FaultReport& report, const ThresholdPolicy& policy, Feedback feedback);

}  // namespace sodesn
