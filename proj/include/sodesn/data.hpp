#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sodesn/random.hpp"

namespace sodesn {

/// Per-column affine map engineering -> [-1, 1]: normalized = (value - offset) / scale.
struct Normalization {
  Eigen::VectorXd offset;
  Eigen::VectorXd scale;

  bool empty() const noexcept { return offset.size() == 0; }
  Eigen::Index size() const noexcept { return offset.size(); }
  Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& engineering) const;
  Eigen::MatrixXd invert(const Eigen::Ref<const Eigen::MatrixXd>& normalized) const;
  double to_normalized(Eigen::Index column, double value) const { return (value - offset(column)) / scale(column); }
  double to_engineering(Eigen::Index column, double value) const { return value * scale(column) + offset(column); }
  bool operator==(const Normalization& other) const { return offset == other.offset && scale == other.scale; }
};

/// Min-max normalization of every column; throws DataError on a constant column.
Normalization fit_normalization(const Eigen::Ref<const Eigen::MatrixXd>& samples);

using Timestamp = std::chrono::sys_seconds;

/// Time-aligned sensor readings, one column per sensor, in engineering units.
struct SeriesSet {
  std::vector<std::string> names;
  Eigen::MatrixXd samples;  ///< T x K
  std::chrono::seconds interval{900};
  Timestamp start{};
  Normalization normalization;  ///< empty until normalize()

  Eigen::Index length() const noexcept { return samples.rows(); }
  Eigen::Index sensor_count() const noexcept { return samples.cols(); }
  Eigen::MatrixXd normalized() const;
  /// Rows [begin, end); keeps names, interval, normalization; shifts start.
  SeriesSet rows(Eigen::Index begin, Eigen::Index end) const;
  std::optional<int> column(std::string_view name) const;
};

SeriesSet normalize(const SeriesSet& series);
/// Parameters fitted on rows [fit_begin, fit_end) only and applied to the whole set.
SeriesSet normalize(const SeriesSet& series, Eigen::Index fit_begin, Eigen::Index fit_end);

std::optional<Timestamp> parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);

struct CsvOptions {
  /// When set, exactly these columns are selected, in this order.
  std::optional<std::vector<std::string>> expected_columns;
  bool forward_fill = false;
};

/// Header `timestamp,<sensor>...`; ISO-8601 timestamps at a uniform interval.
SeriesSet parse_csv(std::istream& in, const CsvOptions& options = {}, const std::string& source = "<stream>");
SeriesSet load_csv(const std::string& path, const CsvOptions& options = {});
void write_csv(std::ostream& out, const SeriesSet& series);
void save_csv(const std::string& path, const SeriesSet& series);

/// Parameters of the built-in diurnal air-temperature-like generator.
struct BaseSeriesParams {
  double mean = 18.0;
  double daily_amplitude = 7.0;
  double half_daily_amplitude = 1.5;
  double weather_std = 0.5;     ///< slow day-to-day drift
  double weather_days = 3.0;    ///< drift correlation time
  double fast_std = 0.3;        ///< short-term smooth fluctuation
  double fast_hours = 2.0;
};

Eigen::VectorXd synthesize_base(Eigen::Index length, std::chrono::seconds interval, const BaseSeriesParams& params,
                                Rng& rng);

/// `count` copies of `base`, each shifted by an independent integer in
/// [-max_shift_steps, max_shift_steps] and perturbed by uniform noise of
/// half-width noise_fraction * (column range). Length is base.size() - 2 * max_shift_steps.
SeriesSet synthesize_correlated(const Eigen::Ref<const Eigen::VectorXd>& base, int count, int max_shift_steps,
                                double noise_fraction, Rng& rng, std::chrono::seconds interval = std::chrono::minutes(15));

enum class FaultKind { stuck_at_zero };

struct FaultEntry {
  int sensor = 0;
  Eigen::Index start = 0;
  FaultKind kind = FaultKind::stuck_at_zero;
};

struct FaultSchedule {
  std::vector<FaultEntry> entries;
  bool contains(int sensor) const;
};

/// Validates the schedule against the series; scheduled sensors read 0 from their start step.
SeriesSet apply_faults(const SeriesSet& series, const FaultSchedule& schedule);

/// First `failures` sensors of a seeded permutation, all failing at `start`.
/// Schedules for increasing counts with the same rng seed are nested.
FaultSchedule random_fault_schedule(int sensor_count, int failures, Eigen::Index start, Rng& rng);

struct Split {
  Eigen::Index train_size = 0;
  int fold = 0;
  Eigen::Index train_begin = 0;
  Eigen::Index train_end = 0;
  Eigen::Index test_begin = 0;
  Eigen::Index test_end = 0;
};

/// Contiguous sliding windows: for each train size, `folds` training windows
/// with offsets spread evenly over the series, each followed immediately by
/// a disjoint test window of test_size rows.
std::vector<Split> split_incremental_cv(Eigen::Index length, const std::vector<Eigen::Index>& train_sizes,
                                        Eigen::Index test_size, int folds);

}  // namespace sodesn
