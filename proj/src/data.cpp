#include "sodesn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "sodesn/error.hpp"

namespace sodesn {

Eigen::MatrixXd Normalization::apply(const Eigen::Ref<const Eigen::MatrixXd>& engineering) const {
  if (engineering.cols() != offset.size()) throw NumericError("normalization: column count mismatch");
  return (engineering.rowwise() - offset.transpose()).array().rowwise() / scale.transpose().array();
}

Eigen::MatrixXd Normalization::invert(const Eigen::Ref<const Eigen::MatrixXd>& normalized) const {
  if (normalized.cols() != offset.size()) throw NumericError("normalization: column count mismatch");
  return (normalized.array().rowwise() * scale.transpose().array()).matrix().rowwise() + offset.transpose();
}

Normalization fit_normalization(const Eigen::Ref<const Eigen::MatrixXd>& samples) {
  if (samples.rows() == 0) throw DataError("normalize: empty series");
  Normalization n;
  const Eigen::VectorXd lo = samples.colwise().minCoeff().transpose();
  const Eigen::VectorXd hi = samples.colwise().maxCoeff().transpose();
  n.offset = (hi + lo) / 2.0;
  n.scale = (hi - lo) / 2.0;
  for (Eigen::Index c = 0; c < n.scale.size(); ++c) {
    if (!(n.scale(c) > 0.0)) throw DataError("normalize: column " + std::to_string(c) + " has zero range");
  }
  return n;
}

Eigen::MatrixXd SeriesSet::normalized() const {
  if (normalization.empty()) throw DataError("series has no normalization parameters");
  return normalization.apply(samples);
}

SeriesSet SeriesSet::rows(Eigen::Index begin, Eigen::Index end) const {
  if (begin < 0 || end > length() || begin > end) throw DataError("row range out of bounds");
  SeriesSet out;
  out.names = names;
  out.samples = samples.middleRows(begin, end - begin);
  out.interval = interval;
  out.start = start + interval * begin;
  out.normalization = normalization;
  return out;
}

std::optional<int> SeriesSet::column(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

SeriesSet normalize(const SeriesSet& series) { return normalize(series, 0, series.length()); }

SeriesSet normalize(const SeriesSet& series, Eigen::Index fit_begin, Eigen::Index fit_end) {
  if (fit_begin < 0 || fit_end > series.length() || fit_begin >= fit_end) throw DataError("normalize: bad fit range");
  SeriesSet out = series;
  out.normalization = fit_normalization(series.samples.middleRows(fit_begin, fit_end - fit_begin));
  return out;
}

namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  auto r = std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return r.ec == std::errc() && r.ptr == s.data() + pos + len;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  while (true) {
    auto comma = line.find(',', begin);
    out.push_back(trim(line.substr(begin, comma == std::string_view::npos ? std::string_view::npos : comma - begin)));
    if (comma == std::string_view::npos) break;
    begin = comma + 1;
  }
  return out;
}

std::string cell_ref(std::size_t row, const std::string& column) {
  return "row " + std::to_string(row) + ", column '" + column + "'";
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  text = trim(text);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (text.size() < 16 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
      text[13] != ':') {
    return std::nullopt;
  }
  if (!read_int(text, 0, 4, y) || !read_int(text, 5, 2, mo) || !read_int(text, 8, 2, d) ||
      !read_int(text, 11, 2, h) || !read_int(text, 14, 2, mi)) {
    return std::nullopt;
  }
  std::size_t pos = 16;
  if (pos < text.size() && text[pos] == ':') {
    if (!read_int(text, pos + 1, 2, s)) return std::nullopt;
    pos += 3;
  }
  seconds offset{0};
  std::string_view zone = text.substr(pos);
  if (zone == "Z" || zone.empty()) {
    // UTC
  } else if ((zone[0] == '+' || zone[0] == '-') && zone.size() == 6 && zone[3] == ':') {
    int oh = 0, om = 0;
    if (!read_int(zone, 1, 2, oh) || !read_int(zone, 4, 2, om)) return std::nullopt;
    offset = hours(oh) + minutes(om);
    if (zone[0] == '-') offset = -offset;
  } else {
    return std::nullopt;
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) return std::nullopt;
  return sys_days{ymd} + hours(h) + minutes(mi) + seconds(s) - offset;
}

std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto days = floor<std::chrono::days>(t);
  const year_month_day ymd{days};
  const hh_mm_ss<seconds> tod{t - days};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(tod.hours().count()), static_cast<long>(tod.minutes().count()),
                static_cast<long>(tod.seconds().count()));
  return buf;
}

SeriesSet parse_csv(std::istream& in, const CsvOptions& options, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": missing header row");
  const auto header = split_fields(line);
  if (header.size() < 2 || header[0] != "timestamp") {
    throw DataError(source + ": header must start with 'timestamp' followed by sensor columns");
  }
  std::vector<std::string> file_names(header.begin() + 1, header.end());
  for (std::size_t i = 0; i < file_names.size(); ++i) {
    if (file_names[i].empty()) throw DataError(source + ": empty sensor name in header");
    for (std::size_t j = 0; j < i; ++j) {
      if (file_names[i] == file_names[j]) throw DataError(source + ": duplicate column '" + file_names[i] + "'");
    }
  }

  // Map selected columns to file columns.
  std::vector<std::size_t> pick;
  std::vector<std::string> names;
  if (options.expected_columns) {
    for (const auto& want : *options.expected_columns) {
      auto it = std::find(file_names.begin(), file_names.end(), want);
      if (it == file_names.end()) throw DataError(source + ": missing column '" + want + "'");
      pick.push_back(static_cast<std::size_t>(it - file_names.begin()));
      names.push_back(want);
    }
  } else {
    pick.resize(file_names.size());
    std::iota(pick.begin(), pick.end(), 0);
    names = file_names;
  }

  std::vector<Timestamp> stamps;
  std::vector<double> values;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw DataError(source + ": row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                      " fields, expected " + std::to_string(header.size()));
    }
    auto ts = parse_timestamp(fields[0]);
    if (!ts) throw DataError(source + ": row " + std::to_string(row) + ": bad timestamp '" + std::string(fields[0]) + "'");
    if (!stamps.empty() && *ts <= stamps.back()) {
      throw DataError(source + ": row " + std::to_string(row) + ": timestamps are not strictly increasing");
    }
    stamps.push_back(*ts);
    for (std::size_t c = 0; c < pick.size(); ++c) {
      const auto cell = fields[pick[c] + 1];
      if (cell.empty()) {
        if (!options.forward_fill) throw DataError(source + ": missing value at " + cell_ref(row, names[c]));
        if (row == 1) throw DataError(source + ": cannot forward-fill " + cell_ref(row, names[c]));
        values.push_back(values[values.size() - pick.size()]);
        continue;
      }
      double v = 0.0;
      auto r = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (r.ec != std::errc() || r.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw DataError(source + ": unparsable value '" + std::string(cell) + "' at " + cell_ref(row, names[c]));
      }
      values.push_back(v);
    }
  }
  if (stamps.empty()) throw DataError(source + ": no data rows");

  SeriesSet series;
  series.names = std::move(names);
  series.start = stamps.front();
  if (stamps.size() >= 2) {
    series.interval = stamps[1] - stamps[0];
    for (std::size_t i = 2; i < stamps.size(); ++i) {
      if (stamps[i] - stamps[i - 1] != series.interval) {
        throw DataError(source + ": row " + std::to_string(i + 1) + ": sampling interval is not uniform");
      }
    }
  }
  const auto cols = static_cast<Eigen::Index>(pick.size());
  series.samples = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(stamps.size()), cols);
  return series;
}

SeriesSet load_csv(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file " + path);
  return parse_csv(in, options, path);
}

void write_csv(std::ostream& out, const SeriesSet& series) {
  out << "timestamp";
  for (const auto& n : series.names) out << ',' << n;
  out << '\n';
  char buf[64];
  for (Eigen::Index r = 0; r < series.length(); ++r) {
    out << format_timestamp(series.start + series.interval * r);
    for (Eigen::Index c = 0; c < series.sensor_count(); ++c) {
      auto res = std::to_chars(buf, buf + sizeof buf, series.samples(r, c));
      out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

void save_csv(const std::string& path, const SeriesSet& series) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  write_csv(out, series);
}

Eigen::VectorXd synthesize_base(Eigen::Index length, std::chrono::seconds interval, const BaseSeriesParams& p,
                                Rng& rng) {
  if (length <= 0) throw ConfigError("synthesize_base: length must be positive");
  constexpr double two_pi = 6.283185307179586;
  const double dt_days = double(interval.count()) / 86400.0;
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double a_slow = std::exp(-dt_days / p.weather_days);
  const double a_fast = std::exp(-dt_days * 24.0 / p.fast_hours);
  double slow = p.weather_std * gauss(rng);
  double fast = p.fast_std * gauss(rng);
  Eigen::VectorXd out(length);
  for (Eigen::Index i = 0; i < length; ++i) {
    const double day = double(i) * dt_days;
    out(i) = p.mean + slow + fast + p.daily_amplitude * std::sin(two_pi * (day - 0.375)) +
             p.half_daily_amplitude * std::sin(2.0 * two_pi * day + 0.6);
    slow = a_slow * slow + p.weather_std * std::sqrt(1.0 - a_slow * a_slow) * gauss(rng);
    fast = a_fast * fast + p.fast_std * std::sqrt(1.0 - a_fast * a_fast) * gauss(rng);
  }
  return out;
}

SeriesSet synthesize_correlated(const Eigen::Ref<const Eigen::VectorXd>& base, int count, int max_shift_steps,
                                double noise_fraction, Rng& rng, std::chrono::seconds interval) {
  if (count <= 0) throw ConfigError("synthesize_correlated: count must be positive");
  if (max_shift_steps < 0 || noise_fraction < 0) throw ConfigError("synthesize_correlated: negative shift or noise");
  if (base.size() <= 2 * Eigen::Index(max_shift_steps)) throw DataError("synthesize_correlated: base series too short");
  const Eigen::Index length = base.size() - 2 * Eigen::Index(max_shift_steps);
  std::uniform_int_distribution<int> shift(-max_shift_steps, max_shift_steps);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  SeriesSet out;
  out.samples.resize(length, count);
  out.interval = interval;
  out.start = std::chrono::sys_days{std::chrono::year{2008} / 1 / 1};
  for (int k = 0; k < count; ++k) {
    char name[16];
    std::snprintf(name, sizeof name, "s%03d", k);
    out.names.emplace_back(name);
    const int s = shift(rng);
    auto col = out.samples.col(k);
    col = base.segment(max_shift_steps + s, length);
    const double amplitude = noise_fraction * (col.maxCoeff() - col.minCoeff());
    if (amplitude > 0.0) {
      for (Eigen::Index i = 0; i < length; ++i) col(i) += amplitude * unit(rng);
    }
  }
  return out;
}

bool FaultSchedule::contains(int sensor) const {
  return std::any_of(entries.begin(), entries.end(), [&](const FaultEntry& e) { return e.sensor == sensor; });
}

SeriesSet apply_faults(const SeriesSet& series, const FaultSchedule& schedule) {
  SeriesSet out = series;
  for (const auto& e : schedule.entries) {
    if (e.sensor < 0 || e.sensor >= series.sensor_count()) {
      throw ConfigError("fault schedule: sensor " + std::to_string(e.sensor) + " out of range");
    }
    if (e.start < 0 || e.start >= series.length()) {
      throw ConfigError("fault schedule: start step " + std::to_string(e.start) + " outside the series");
    }
    out.samples.col(e.sensor).tail(series.length() - e.start).setZero();
  }
  return out;
}

FaultSchedule random_fault_schedule(int sensor_count, int failures, Eigen::Index start, Rng& rng) {
  if (failures < 0 || failures > sensor_count) throw ConfigError("fault schedule: failure count out of range");
  std::vector<int> order(static_cast<std::size_t>(sensor_count));
  std::iota(order.begin(), order.end(), 0);
  // Fisher-Yates with explicit draws so the permutation does not depend on std::shuffle internals.
  for (int i = sensor_count - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
  }
  FaultSchedule schedule;
  for (int i = 0; i < failures; ++i) schedule.entries.push_back({order[static_cast<std::size_t>(i)], start});
  std::sort(schedule.entries.begin(), schedule.entries.end(),
            [](const FaultEntry& a, const FaultEntry& b) { return a.sensor < b.sensor; });
  return schedule;
}

std::vector<Split> split_incremental_cv(Eigen::Index length, const std::vector<Eigen::Index>& train_sizes,
                                        Eigen::Index test_size, int folds) {
  if (folds < 1) throw ConfigError("cross validation: folds must be >= 1");
  if (test_size < 1) throw ConfigError("cross validation: test size must be >= 1");
  if (train_sizes.empty()) throw ConfigError("cross validation: no training sizes");
  std::vector<Split> out;
  for (auto size : train_sizes) {
    if (size < 1) throw ConfigError("cross validation: training size must be >= 1");
    const Eigen::Index needed = size + test_size;
    if (needed > length) {
      throw DataError("cross validation: train " + std::to_string(size) + " + test " + std::to_string(test_size) +
                      " exceeds series length " + std::to_string(length));
    }
    const Eigen::Index slack = length - needed;
    for (int f = 0; f < folds; ++f) {
      const Eigen::Index offset = folds == 1 ? 0 : slack * f / (folds - 1);
      out.push_back({size, f, offset, offset + size, offset + size, offset + needed});
    }
  }
  return out;
}

}  // namespace sodesn
