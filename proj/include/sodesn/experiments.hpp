#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "sodesn/baseline_esn.hpp"
#include "sodesn/config.hpp"
#include "sodesn/data.hpp"
#include "sodesn/fault_detection.hpp"
#include "sodesn/metrics.hpp"
#include "sodesn/reservoir.hpp"
#include "sodesn/training.hpp"

namespace sodesn {

enum class Scenario { learning_curve, reservoir_sweep, baseline_compare, robustness };

const char* to_string(Scenario scenario);
/// Throws UsageError listing the valid names.
Scenario parse_scenario(const std::string& name);
const std::vector<std::string>& scenario_names();

/// Parameters of the built-in synthetic data set.
struct SyntheticSource {
  BaseSeriesParams base;
  Eigen::Index length = 14000;
  int max_shift = 2;
  double noise_fraction = 0.10;
  std::chrono::seconds interval{900};
};

struct DataSource {
  /// Empty: synthesize one data set per seed.
  std::string csv_path;
  bool forward_fill = false;
  std::vector<std::string> sensors;
  SyntheticSource synthetic;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::learning_curve;
  int rows = 2;
  int cols = 4;
  std::string edge_list;  ///< used instead of the grid when set
  NodeSpec node;
  InitOptions init;

  Eigen::Index train_size = 10000;
  Eigen::Index test_size = 2000;
  /// Steps run before the scored window so the reservoir forgets its zero state.
  Eigen::Index warmup = 100;
  Eigen::Index washout = -1;  ///< negative: default_washout(train_size)
  double noise_amplitude = 1.0;
  SolveOptions solve;
  double link_quality = 1.0;

  std::vector<Eigen::Index> train_sizes;  ///< learning_curve
  int folds = 1;                          ///< learning_curve and reservoir_sweep
  std::vector<int> units;                 ///< reservoir_sweep
  std::vector<double> link_qualities;     ///< baseline_compare
  EsnOptions esn;                         ///< baseline_compare (seeds and link settings are filled per job)
  std::vector<int> failures;              ///< robustness
  std::vector<Feedback> feedback_modes;   ///< robustness

  std::vector<std::uint64_t> seeds;
  DataSource data;
  int jobs = 1;
};

/// Builds a scenario configuration from the flat config. Seeds are
/// `seed, seed + 1, ...` for `experiment.repeats` repetitions.
ExperimentConfig make_experiment_config(const Config& config, Scenario scenario);

/// Throws ConfigError for empty sweeps, missing seeds, or infeasible sizes.
void validate(const ExperimentConfig& config);

/// One scored sensor of one configuration point, fold and seed.
struct ExperimentRecord {
  std::string point;    ///< x value: train size, units, link quality or failure count
  std::string variant;  ///< sodesn, esn, passthrough or replace
  int fold = 0;
  std::uint64_t seed = 0;
  int sensor = 0;
  ScoreSummary score;
};

struct JobTiming {
  std::string label;
  double seconds = 0.0;
};

struct ExperimentResult {
  Scenario scenario = Scenario::learning_curve;
  std::vector<ExperimentRecord> records;
  std::vector<JobTiming> timings;
};

/// Mean NRMSE over all records of one (point, variant).
struct PointAggregate {
  std::string point;
  std::string variant;
  double mean_nrmse = 0.0;
  std::size_t records = 0;
};

ExperimentResult run_learning_curve(const ExperimentConfig& config);
ExperimentResult run_reservoir_sweep(const ExperimentConfig& config);
ExperimentResult run_baseline_compare(const ExperimentConfig& config);
ExperimentResult run_robustness(const ExperimentConfig& config);
/// Dispatches on config.scenario.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Aggregates in first-appearance order of (point, variant).
std::vector<PointAggregate> aggregate(const ExperimentResult& result);
/// Mean NRMSE per (point, variant) restricted to one seed.
std::vector<PointAggregate> aggregate(const ExperimentResult& result, std::uint64_t seed);

/// Raw records: scenario,point,variant,fold,seed,sensor,nrmse,max_abs_error,n.
/// Contains no timing, so reruns are byte-identical.
void write_records_csv(std::ostream& out, const ExperimentResult& result);
/// Plot data with one x column and one y column per variant.
void write_plot_csv(std::ostream& out, const ExperimentResult& result);
/// Aggregates, per-job durations and total runtime.
nlohmann::json summary_json(const ExperimentResult& result);

/// Substituted scoring: for each sensor, runs rows [begin - warmup, end) of
/// the normalized inputs with that sensor replaced by noise and scores its
/// prediction over [begin, end) in engineering units.
std::vector<ScoreSummary> score_substituted(const Sodesn& net, const SeriesSet& normalized, Eigen::Index begin,
                                            Eigen::Index end, Eigen::Index warmup, double link_quality,
                                            double noise_amplitude, std::uint64_t seed);

/// Shortest round-trip decimal text of a double.
std::string format_double(double value);

}  // namespace sodesn
