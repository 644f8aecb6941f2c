#include "sodesn/fault_detection.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <ostream>

#include "sodesn/error.hpp"

namespace sodesn {

const char* to_string(ThresholdMode mode) {
  return mode == ThresholdMode::absolute_deviation ? "absolute" : "windowed";
}
const char* to_string(Feedback feedback) { return feedback == Feedback::replace ? "replace" : "passthrough"; }

ThresholdMode parse_threshold_mode(const std::string& s) {
  if (s == "absolute" || s == "absolute-deviation") return ThresholdMode::absolute_deviation;
  if (s == "windowed" || s == "windowed-nrmse") return ThresholdMode::windowed_nrmse;
  throw ConfigError("unknown threshold mode '" + s + "' (expected absolute | windowed)");
}

Feedback parse_feedback(const std::string& s) {
  if (s == "replace") return Feedback::replace;
  if (s == "passthrough") return Feedback::passthrough;
  throw ConfigError("unknown feedback mode '" + s + "' (expected replace | passthrough)");
}

ThresholdPolicy calibrate_thresholds_from_traces(const Eigen::Ref<const Eigen::MatrixXd>& predictions,
                                                 const Eigen::Ref<const Eigen::MatrixXd>& readings,
                                                 ThresholdMode mode, double safety_factor, Eigen::Index window,
                                                 std::vector<std::string>* warnings) {
  if (predictions.rows() != readings.rows() || predictions.cols() != readings.cols()) {
    throw NumericError("calibrate_thresholds: prediction and reading traces differ in shape");
  }
  if (!(safety_factor >= 1.0)) throw ConfigError("calibrate_thresholds: safety factor must be >= 1");
  if (window < 2) throw ConfigError("calibrate_thresholds: window must be >= 2");
  if (readings.rows() == 0) throw DataError("calibrate_thresholds: empty validation data");
  if (mode == ThresholdMode::windowed_nrmse && readings.rows() < window) {
    throw DataError("calibrate_thresholds: validation data shorter than the window");
  }
  ThresholdPolicy policy;
  policy.mode = mode;
  policy.window = window;
  policy.safety_factor = safety_factor;
  policy.thresholds.resize(readings.cols());
  for (Eigen::Index s = 0; s < readings.cols(); ++s) {
    double worst = 0.0;
    if (mode == ThresholdMode::absolute_deviation) {
      worst = max_abs_error(predictions.col(s), readings.col(s));
    } else {
      for (const auto& v : windowed_nrmse(predictions.col(s), readings.col(s), window)) {
        if (v) worst = std::max(worst, *v);
      }
    }
    policy.thresholds(s) = safety_factor * worst;
    if (warnings && !(policy.thresholds(s) > 0.0)) {
      warnings->push_back("sensor " + std::to_string(s) + ": zero threshold (validation predictions are exact)");
    }
  }
  return policy;
}

ThresholdPolicy calibrate_thresholds(const Sodesn& net, const SeriesSet& validation, const CalibrationOptions& options,
                                     std::vector<std::string>* warnings) {
  ThresholdPolicy unused;
  unused.mode = options.mode;
  unused.window = options.window;
  unused.thresholds = Eigen::VectorXd::Constant(validation.sensor_count(), std::numeric_limits<double>::infinity());
  MonitorOptions monitor;
  monitor.feedback = Feedback::passthrough;
  monitor.link_quality = options.link_quality;
  monitor.link_seed = options.link_seed;
  monitor.use_thresholds = false;
  const FaultReport report = run_monitor(net, validation, unused, monitor);
  return calibrate_thresholds_from_traces(report.predictions, report.readings, options.mode, options.safety_factor,
                                          options.window, warnings);
}

Detector::Detector(const Sodesn& net, Normalization normalization, ThresholdPolicy policy, Feedback feedback,
                   bool thresholds_enabled)
    : net_(&net),
      norm_(std::move(normalization)),
      policy_(std::move(policy)),
      feedback_(feedback),
      thresholds_enabled_(thresholds_enabled),
      state_(zero_state(net)),
      scratch_(zero_state(net)) {
  const Eigen::Index k = net.total_inputs();
  if (net.spec().outputs < net.spec().inputs) throw ConfigError("detector: each sensor needs a local output unit");
  if (norm_.size() != k) throw ConfigError("detector: normalization does not cover the network's sensors");
  if (thresholds_enabled_ && policy_.thresholds.size() != k) throw ConfigError("detector: threshold count mismatch");
  if (policy_.window < 2) throw ConfigError("detector: window must be >= 2");
  predictions_norm_ = Eigen::VectorXd::Zero(k);
  predictions_ = norm_.invert(predictions_norm_.transpose()).transpose();
  deviations_ = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::quiet_NaN());
  flags_.assign(static_cast<std::size_t>(k), false);
  if (policy_.mode == ThresholdMode::windowed_nrmse) {
    rolling_.assign(static_cast<std::size_t>(k), RollingNrmse(policy_.window));
  }
}

void Detector::flag(int sensor) {
  if (sensor < 0 || sensor >= static_cast<int>(flags_.size())) throw ConfigError("detector: sensor out of range");
  flags_[static_cast<std::size_t>(sensor)] = true;
}

void Detector::reset_flags() { std::fill(flags_.begin(), flags_.end(), false); }

void Detector::step(const Eigen::Ref<const Eigen::VectorXd>& readings, const LinkOutcomes& links) {
  const Sodesn& net = *net_;
  const Eigen::Index k = net.total_inputs();
  if (readings.size() != k) throw NumericError("detector: reading vector has the wrong length");
  const int per_node_in = net.spec().inputs;
  const int per_node_out = net.spec().outputs;

  Eigen::VectorXd u(k);
  for (Eigen::Index s = 0; s < k; ++s) {
    const bool substitute = feedback_ == Feedback::replace && flags_[static_cast<std::size_t>(s)];
    u(s) = substitute ? predictions_norm_(s) : norm_.to_normalized(s, readings(s));
  }
  step_into(net, state_, u, links, scratch_);
  std::swap(state_, scratch_);

  for (Eigen::Index s = 0; s < k; ++s) {
    const Eigen::Index node = s / per_node_in;
    const Eigen::Index out = node * per_node_out + s % per_node_in;
    predictions_norm_(s) = state_.y(out);
    predictions_(s) = norm_.to_engineering(s, predictions_norm_(s));
    if (policy_.mode == ThresholdMode::absolute_deviation) {
      deviations_(s) = std::abs(readings(s) - predictions_(s));
    } else {
      auto& r = rolling_[static_cast<std::size_t>(s)];
      r.push(predictions_norm_(s), norm_.to_normalized(s, readings(s)));
      deviations_(s) = r.value().value_or(std::numeric_limits<double>::quiet_NaN());
    }
    if (thresholds_enabled_ && deviations_(s) > policy_.thresholds(s)) flags_[static_cast<std::size_t>(s)] = true;
  }
}

FaultReport run_monitor(const Sodesn& net, const SeriesSet& readings, const ThresholdPolicy& policy,
                        const MonitorOptions& options, const Eigen::MatrixXd* truth,
                        const FaultSchedule* known_faults) {
  if (readings.sensor_count() != net.total_inputs()) {
    throw ConfigError("monitor: series has " + std::to_string(readings.sensor_count()) + " sensors, network expects " +
                      std::to_string(net.total_inputs()));
  }
  if (truth && (truth->rows() != readings.length() || truth->cols() != readings.sensor_count())) {
    throw NumericError("monitor: truth shape differs from readings");
  }
  const Eigen::Index length = readings.length();
  const Eigen::Index k = readings.sensor_count();
  Detector detector(net, readings.normalization, policy, options.feedback, options.use_thresholds);
  for (int s : options.initial_flags) detector.flag(s);

  FaultReport report;
  report.names = readings.names;
  report.readings = readings.samples;
  report.truth = truth ? *truth : readings.samples;
  report.predictions.resize(length, k);
  report.deviations.resize(length, k);
  report.flagged.resize(length, k);

  Rng link_rng(options.link_seed);
  LinkOutcomes links = LinkOutcomes::all_delivered(net.topology());
  for (Eigen::Index n = 0; n < length; ++n) {
    if (options.oracle) {
      for (const auto& e : options.oracle->entries) {
        if (e.start <= n) detector.flag(e.sensor);
      }
    }
    sample_link_outcomes(net.topology(), options.link_quality, link_rng, links);
    detector.step(readings.samples.row(n).transpose(), links);
    report.predictions.row(n) = detector.predictions().transpose();
    report.deviations.row(n) = detector.deviations().transpose();
    for (Eigen::Index s = 0; s < k; ++s) report.flagged(n, s) = detector.flags()[static_cast<std::size_t>(s)];
  }

  double sum = 0.0;
  int count = 0;
  for (Eigen::Index s = 0; s < k; ++s) {
    SensorSummary summary;
    summary.name = s < static_cast<Eigen::Index>(report.names.size()) ? report.names[static_cast<std::size_t>(s)]
                                                                      : std::to_string(s);
    if (length >= 2) {
      try {
        summary.nrmse = nrmse(report.predictions.col(s), report.truth.col(s));
      } catch (const NumericError&) {
        summary.nrmse = std::nullopt;
      }
    }
    if (length >= 1) summary.max_abs_error = max_abs_error(report.predictions.col(s), report.truth.col(s));
    for (Eigen::Index n = 0; n < length; ++n) {
      if (report.flagged(n, s)) {
        summary.first_flag_step = n;
        break;
      }
    }
    summary.flagged = length > 0 && report.flagged(length - 1, s);
    if (!summary.flagged && summary.nrmse) {
      sum += *summary.nrmse;
      ++count;
    }
    report.sensors.push_back(std::move(summary));
  }
  if (count > 0) report.mean_nrmse_unflagged = sum / count;

  if (known_faults) {
    int true_pos = 0, flagged = 0;
    for (Eigen::Index s = 0; s < k; ++s) {
      const bool f = report.sensors[static_cast<std::size_t>(s)].flagged;
      flagged += f;
      true_pos += f && known_faults->contains(static_cast<int>(s));
    }
    if (flagged > 0) report.flag_precision = double(true_pos) / flagged;
    if (!known_faults->entries.empty()) report.flag_recall = double(true_pos) / double(known_faults->entries.size());
  }
  return report;
}

double mean_nrmse(const FaultReport& report, const std::vector<int>& sensors) {
  if (sensors.empty()) throw NumericError("mean_nrmse: no sensors selected");
  double sum = 0.0;
  for (int s : sensors) {
    const auto& v = report.sensors.at(static_cast<std::size_t>(s)).nrmse;
    if (!v) throw NumericError("mean_nrmse: sensor " + std::to_string(s) + " has undefined NRMSE");
    sum += *v;
  }
  return sum / double(sensors.size());
}

namespace {

void put_number(std::ostream& out, double v) {
  if (std::isnan(v)) {
    out << "nan";
    return;
  }
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  out << std::string_view(buf, static_cast<std::size_t>(r.ptr - buf));
}

}  // namespace

void write_trace_csv(std::ostream& out, const FaultReport& report) {
  out << "step,sensor,truth,prediction,deviation,flagged\n";
  for (Eigen::Index n = 0; n < report.predictions.rows(); ++n) {
    for (Eigen::Index s = 0; s < report.predictions.cols(); ++s) {
      out << n << ',' << report.names[static_cast<std::size_t>(s)] << ',';
      put_number(out, report.truth(n, s));
      out << ',';
      put_number(out, report.predictions(n, s));
      out << ',';
      put_number(out, report.deviations(n, s));
      out << ',' << (report.flagged(n, s) ? 1 : 0) << '\n';
    }
  }
}

std::string summary_json(const FaultReport& report, const ThresholdPolicy& policy, Feedback feedback) {
  using nlohmann::json;
  json sensors = json::array();
  for (std::size_t s = 0; s < report.sensors.size(); ++s) {
    const auto& sum = report.sensors[s];
    json entry = {{"sensor", sum.name},
                  {"nrmse", sum.nrmse ? json(*sum.nrmse) : json(nullptr)},
                  {"max_abs_error", sum.max_abs_error},
                  {"first_flag_step", sum.first_flag_step ? json(*sum.first_flag_step) : json(nullptr)},
                  {"flagged", sum.flagged}};
    if (policy.thresholds.size() > static_cast<Eigen::Index>(s) && std::isfinite(policy.thresholds(static_cast<Eigen::Index>(s)))) {
      entry["threshold"] = policy.thresholds(static_cast<Eigen::Index>(s));
    }
    sensors.push_back(std::move(entry));
  }
  int flagged = 0;
  for (const auto& s : report.sensors) flagged += s.flagged;
  json doc = {{"steps", report.predictions.rows()},
              {"feedback", to_string(feedback)},
              {"threshold_mode", to_string(policy.mode)},
              {"window", policy.window},
              {"flagged_count", flagged},
              {"mean_nrmse_unflagged",
               report.mean_nrmse_unflagged ? json(*report.mean_nrmse_unflagged) : json(nullptr)},
              {"sensors", sensors}};
  if (report.flag_precision) doc["flag_precision"] = *report.flag_precision;
  if (report.flag_recall) doc["flag_recall"] = *report.flag_recall;
  return doc.dump(2) + "\n";
}

}  // namespace sodesn
