#include "sodesn/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <limits>
#include <map>
#include <ostream>
#include <utility>

#include "sodesn/error.hpp"
#include "sodesn/parallel.hpp"

namespace sodesn {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Topology make_topology(const ExperimentConfig& c) {
  if (!c.edge_list.empty()) return load_edge_list(c.edge_list);
  return build_grid(c.rows, c.cols);
}

Eigen::Index output_index(const NodeSpec& spec, int sensor) {
  return Eigen::Index(sensor / spec.inputs) * spec.outputs + sensor % spec.inputs;
}

/// Engineering-unit series for one seed, at least `needed` rows long.
SeriesSet load_data(const ExperimentConfig& c, std::uint64_t seed, int sensors, Eigen::Index needed) {
  SeriesSet series;
  if (!c.data.csv_path.empty()) {
    CsvOptions options;
    options.forward_fill = c.data.forward_fill;
    if (!c.data.sensors.empty()) options.expected_columns = c.data.sensors;
    series = load_csv(c.data.csv_path, options);
    if (series.sensor_count() != sensors) {
      throw ConfigError("experiment: data has " + std::to_string(series.sensor_count()) + " sensors, topology needs " +
                        std::to_string(sensors));
    }
    if (series.length() < needed) {
      throw DataError("experiment: data has " + std::to_string(series.length()) + " rows, " + std::to_string(needed) +
                      " needed");
    }
    return series;
  }
  const SyntheticSource& s = c.data.synthetic;
  Rng rng = make_rng(seed, {stream::data});
  const Eigen::Index length = std::max(s.length, needed);
  const Eigen::VectorXd base = synthesize_base(length + 2 * Eigen::Index(s.max_shift), s.interval, s.base, rng);
  return synthesize_correlated(base, sensors, s.max_shift, s.noise_fraction, rng, s.interval);
}

Eigen::Index washout_for(const ExperimentConfig& c, Eigen::Index train_rows) {
  const Eigen::Index w = c.washout < 0 ? default_washout(train_rows) : c.washout;
  if (w >= train_rows) throw ConfigError("experiment: washout not shorter than the training window");
  return w;
}

/// Trains fault detectors on normalized rows [begin, end). Link streams derive from `link_base`.
Sodesn train_on(const Sodesn& net, const Eigen::MatrixXd& z, Eigen::Index begin, Eigen::Index end,
                const ExperimentConfig& c, double link_quality, std::uint64_t seed, std::uint64_t link_base) {
  FaultTrainingOptions options;
  options.noise = {c.noise_amplitude, derive_seed(seed, {stream::noise})};
  options.washout = washout_for(c, end - begin);
  options.link_quality = link_quality;
  options.seed = link_base;
  options.solve = c.solve;
  return train_fault_detectors(net, z.middleRows(begin, end - begin), options);
}

void add_records(std::vector<ExperimentRecord>& out, const std::string& point, const std::string& variant, int fold,
                 std::uint64_t seed, const std::vector<ScoreSummary>& scores) {
  for (std::size_t s = 0; s < scores.size(); ++s) {
    out.push_back({point, variant, fold, seed, static_cast<int>(s), scores[s]});
  }
}

/// Runs independent jobs on the work queue and concatenates their records in job order.
struct JobOutput {
  std::vector<ExperimentRecord> records;
  JobTiming timing;
};

template <typename Job>
ExperimentResult run_jobs(Scenario scenario, std::size_t count, int parallelism, Job&& job) {
  std::vector<JobOutput> outputs(count);
  parallel_for(count, parallelism, [&](std::size_t i) {
    const auto t0 = Clock::now();
    outputs[i].timing.label = job(i, outputs[i].records);
    outputs[i].timing.seconds = seconds_since(t0);
  });
  ExperimentResult result;
  result.scenario = scenario;
  for (auto& o : outputs) {
    result.records.insert(result.records.end(), std::make_move_iterator(o.records.begin()),
                          std::make_move_iterator(o.records.end()));
    result.timings.push_back(std::move(o.timing));
  }
  return result;
}

std::vector<SeriesSet> datasets_per_seed(const ExperimentConfig& c, int sensors, Eigen::Index needed) {
  std::vector<SeriesSet> out;
  for (std::uint64_t seed : c.seeds) out.push_back(load_data(c, seed, sensors, needed));
  return out;
}

std::string label(std::uint64_t seed, const std::string& rest) { return "seed=" + std::to_string(seed) + " " + rest; }

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, r.ptr);
}

const char* to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::learning_curve: return "learning_curve";
    case Scenario::reservoir_sweep: return "reservoir_sweep";
    case Scenario::baseline_compare: return "baseline_compare";
    case Scenario::robustness: return "robustness";
  }
  return "?";
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"learning_curve", "reservoir_sweep", "baseline_compare", "robustness"};
  return names;
}

Scenario parse_scenario(const std::string& name) {
  const auto& names = scenario_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<Scenario>(i);
  }
  std::string valid;
  for (const auto& n : names) valid += (valid.empty() ? "" : ", ") + n;
  throw UsageError("unknown scenario '" + name + "' (valid: " + valid + ")");
}

ExperimentConfig make_experiment_config(const Config& cfg, Scenario scenario) {
  ExperimentConfig c;
  c.scenario = scenario;
  c.rows = static_cast<int>(cfg.get_int("topology.rows"));
  c.cols = static_cast<int>(cfg.get_int("topology.cols"));
  const std::string kind = cfg.get_string("topology.kind");
  if (kind == "edge_list") {
    c.edge_list = cfg.get_string("topology.edge_list");
    if (c.edge_list.empty()) throw ConfigError("topology.kind is edge_list but topology.edge_list is empty");
  } else if (kind != "grid") {
    throw ConfigError("topology.kind must be grid or edge_list");
  }
  c.node.internal = static_cast<int>(cfg.get_int("node.internal"));
  c.init.density_local = cfg.get_double("init.density_local");
  c.init.density_cross = cfg.get_double("init.density_cross");
  c.init.rho_target = cfg.get_double("init.rho_target");
  c.init.taps = parse_readout_taps(cfg.get_string("init.taps"));
  c.init.activation = parse_readout_activation(cfg.get_string("init.activation"));

  c.train_size = cfg.get_int("experiment.train_size");
  c.test_size = cfg.get_int("experiment.test_size");
  c.warmup = cfg.get_int("experiment.warmup");
  c.washout = cfg.get_int("train.washout");
  c.noise_amplitude = cfg.get_double("train.noise_amplitude");
  c.solve.sv_cutoff = cfg.get_double("train.sv_cutoff");
  c.solve.ridge = cfg.get_double("train.ridge");
  c.link_quality = cfg.get_double("experiment.link_quality");

  c.esn.n_internal = static_cast<int>(cfg.get_int("esn.internal"));
  c.esn.density = cfg.get_double("esn.density");
  c.esn.rho_target = cfg.get_double("esn.rho_target");
  c.esn.input_scaling = cfg.get_double("esn.input_scaling");
  c.esn.solve = c.solve;

  const std::string source = cfg.get_string("data.source");
  if (source == "csv") {
    c.data.csv_path = cfg.get_string("data.csv");
    if (c.data.csv_path.empty()) throw ConfigError("data.source is csv but data.csv is empty");
  } else if (source != "synthetic") {
    throw ConfigError("data.source must be synthetic or csv");
  }
  c.data.forward_fill = cfg.get_bool("data.forward_fill");
  c.data.sensors = cfg.get_string_list("data.sensors");
  SyntheticSource& s = c.data.synthetic;
  s.length = cfg.get_int("synth.length");
  s.max_shift = static_cast<int>(cfg.get_int("synth.max_shift"));
  s.noise_fraction = cfg.get_double("synth.noise_fraction");
  s.interval = std::chrono::minutes(cfg.get_int("synth.interval_minutes"));
  s.base.mean = cfg.get_double("synth.mean");
  s.base.daily_amplitude = cfg.get_double("synth.daily_amplitude");
  s.base.half_daily_amplitude = cfg.get_double("synth.half_daily_amplitude");
  s.base.weather_std = cfg.get_double("synth.weather_std");
  s.base.weather_days = cfg.get_double("synth.weather_days");
  s.base.fast_std = cfg.get_double("synth.fast_std");
  s.base.fast_hours = cfg.get_double("synth.fast_hours");

  switch (scenario) {
    case Scenario::learning_curve:
      if (cfg.get_bool("learning_curve.full_scale")) {
        c.train_sizes = {300, 1000, 3000, 10000, 30000};
        c.test_size = 16665;
      } else {
        for (auto v : cfg.get_int_list("learning_curve.train_sizes")) c.train_sizes.push_back(v);
      }
      c.folds = static_cast<int>(cfg.get_int("learning_curve.folds"));
      break;
    case Scenario::reservoir_sweep:
      for (auto v : cfg.get_int_list("reservoir_sweep.units")) c.units.push_back(static_cast<int>(v));
      c.folds = static_cast<int>(cfg.get_int("reservoir_sweep.folds"));
      break;
    case Scenario::baseline_compare:
      c.link_qualities = cfg.get_double_list("baseline_compare.link_qualities");
      break;
    case Scenario::robustness:
      c.rows = static_cast<int>(cfg.get_int("robustness.rows"));
      c.cols = static_cast<int>(cfg.get_int("robustness.cols"));
      c.edge_list.clear();
      c.train_size = cfg.get_int("robustness.train_size");
      for (auto v : cfg.get_int_list("robustness.failures")) c.failures.push_back(static_cast<int>(v));
      for (const auto& f : cfg.get_string_list("robustness.feedback")) c.feedback_modes.push_back(parse_feedback(f));
      break;
  }

  const std::uint64_t seed = cfg.get_uint("seed");
  const auto repeats = cfg.get_int("experiment.repeats");
  if (repeats < 1) throw ConfigError("experiment.repeats must be at least 1");
  for (std::int64_t r = 0; r < repeats; ++r) c.seeds.push_back(seed + static_cast<std::uint64_t>(r));
  c.jobs = static_cast<int>(cfg.get_int("jobs"));
  return c;
}

void validate(const ExperimentConfig& c) {
  if (c.seeds.empty()) throw ConfigError("experiment: no seeds given");
  if (c.edge_list.empty() && (c.rows < 1 || c.cols < 1)) throw ConfigError("experiment: grid needs rows, cols >= 1");
  if (c.node.internal < 1) throw ConfigError("experiment: node.internal must be positive");
  if (c.test_size < 2) throw ConfigError("experiment: test_size must be at least 2");
  if (c.warmup < 0) throw ConfigError("experiment: warmup must be nonnegative");
  if (c.folds < 1) throw ConfigError("experiment: folds must be at least 1");
  if (c.jobs < 1) throw ConfigError("jobs must be at least 1");
  if (!(c.noise_amplitude > 0.0)) throw ConfigError("train.noise_amplitude must be positive");
  auto check_quality = [](double q) {
    if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("link quality must lie in [0, 1]");
  };
  check_quality(c.link_quality);
  switch (c.scenario) {
    case Scenario::learning_curve:
      if (c.train_sizes.empty()) throw ConfigError("learning_curve.train_sizes is empty");
      for (auto s : c.train_sizes) {
        if (s < 2) throw ConfigError("learning_curve: train sizes must be at least 2");
      }
      break;
    case Scenario::reservoir_sweep:
      if (c.units.empty()) throw ConfigError("reservoir_sweep.units is empty");
      for (int u : c.units) {
        if (u < 1) throw ConfigError("reservoir_sweep: unit counts must be positive");
      }
      break;
    case Scenario::baseline_compare:
      if (c.link_qualities.empty()) throw ConfigError("baseline_compare.link_qualities is empty");
      for (double q : c.link_qualities) check_quality(q);
      if (c.esn.n_internal < 1) throw ConfigError("esn.internal must be positive");
      break;
    case Scenario::robustness:
      if (c.failures.empty()) throw ConfigError("robustness.failures is empty");
      if (c.feedback_modes.empty()) throw ConfigError("robustness.feedback is empty");
      for (int f : c.failures) {
        if (f < 0 || f >= c.rows * c.cols) throw ConfigError("robustness: failure counts must leave a survivor");
      }
      break;
  }
  if (c.scenario != Scenario::learning_curve && c.train_size < 2) {
    throw ConfigError("experiment: train_size must be at least 2");
  }
}

std::vector<ScoreSummary> score_substituted(const Sodesn& net, const SeriesSet& normalized, Eigen::Index begin,
                                            Eigen::Index end, Eigen::Index warmup, double link_quality,
                                            double noise_amplitude, std::uint64_t seed) {
  if (normalized.normalization.empty()) throw DataError("score_substituted: series carries no normalization");
  if (begin < 0 || end > normalized.length() || end - begin < 2) throw DataError("score_substituted: bad window");
  const Eigen::MatrixXd z = normalized.normalized();
  const Eigen::Index first = std::max<Eigen::Index>(0, begin - warmup);
  const int sensors = static_cast<int>(net.total_inputs());
  std::vector<ScoreSummary> scores;
  NetworkState prev = zero_state(net);
  NetworkState next = zero_state(net);
  LinkOutcomes links = LinkOutcomes::all_delivered(net.topology());
  Eigen::VectorXd u(sensors);
  Eigen::VectorXd predicted(end - begin);
  std::uniform_real_distribution<double> noise(-noise_amplitude, noise_amplitude);
  for (int s = 0; s < sensors; ++s) {
    Rng link_rng = make_rng(seed, {stream::links, static_cast<std::uint64_t>(s)});
    Rng noise_rng = make_rng(seed, {stream::noise, static_cast<std::uint64_t>(s)});
    const Eigen::Index out = output_index(net.spec(), s);
    prev = zero_state(net);
    for (Eigen::Index n = first; n < end; ++n) {
      u = z.row(n).transpose();
      u(s) = noise(noise_rng);
      sample_link_outcomes(net.topology(), link_quality, link_rng, links);
      step_into(net, prev, u, links, next);
      std::swap(prev, next);
      if (n >= begin) predicted(n - begin) = normalized.normalization.to_engineering(s, prev.y(out));
    }
    scores.push_back(score(predicted, normalized.samples.col(s).segment(begin, end - begin)));
  }
  return scores;
}

ExperimentResult run_learning_curve(const ExperimentConfig& c) {
  validate(c);
  const Topology topo = make_topology(c);
  const int sensors = topo.node_count() * c.node.inputs;
  const Eigen::Index largest = *std::max_element(c.train_sizes.begin(), c.train_sizes.end());
  const auto data = datasets_per_seed(c, sensors, largest + c.test_size);
  const auto splits = split_incremental_cv(data.front().length(), c.train_sizes, c.test_size, c.folds);
  return run_jobs(c.scenario, c.seeds.size() * splits.size(), c.jobs, [&](std::size_t i, auto& records) {
    const std::size_t si = i / splits.size();
    const Split& sp = splits[i % splits.size()];
    const std::uint64_t seed = c.seeds[si];
    const SeriesSet series = normalize(data[si], sp.train_begin, sp.train_end);
    const std::uint64_t job_seed = derive_seed(seed, {std::uint64_t(sp.train_size), std::uint64_t(sp.fold)});
    const Sodesn net = init_sodesn(topo, c.node, c.init, derive_seed(job_seed, {stream::init}));
    const Sodesn trained = train_on(net, series.normalized(), sp.train_begin, sp.train_end, c, c.link_quality, job_seed,
                                    derive_seed(job_seed, {stream::links, 0}));
    add_records(records, std::to_string(sp.train_size), "sodesn", sp.fold, seed,
                score_substituted(trained, series, sp.test_begin, sp.test_end, c.warmup, c.link_quality,
                                  c.noise_amplitude, derive_seed(job_seed, {stream::links, 1})));
    return label(seed, "train_size=" + std::to_string(sp.train_size) + " fold=" + std::to_string(sp.fold));
  });
}

ExperimentResult run_reservoir_sweep(const ExperimentConfig& c) {
  validate(c);
  const Topology topo = make_topology(c);
  const int sensors = topo.node_count() * c.node.inputs;
  const auto data = datasets_per_seed(c, sensors, c.train_size + c.test_size);
  const auto splits = split_incremental_cv(data.front().length(), {c.train_size}, c.test_size, c.folds);
  const std::size_t per_seed = c.units.size() * splits.size();
  return run_jobs(c.scenario, c.seeds.size() * per_seed, c.jobs, [&](std::size_t i, auto& records) {
    const std::size_t si = i / per_seed;
    const int units = c.units[(i % per_seed) / splits.size()];
    const Split& sp = splits[i % splits.size()];
    const std::uint64_t seed = c.seeds[si];
    const SeriesSet series = normalize(data[si], sp.train_begin, sp.train_end);
    // The unit count is deliberately not mixed into the seed: all sweep points share every stream.
    const std::uint64_t job_seed = derive_seed(seed, {std::uint64_t(sp.fold)});
    NodeSpec node = c.node;
    node.internal = units;
    const Sodesn net = init_sodesn(topo, node, c.init, derive_seed(job_seed, {stream::init}));
    const Sodesn trained = train_on(net, series.normalized(), sp.train_begin, sp.train_end, c, c.link_quality, job_seed,
                                    derive_seed(job_seed, {stream::links, 0}));
    add_records(records, std::to_string(units), "sodesn", sp.fold, seed,
                score_substituted(trained, series, sp.test_begin, sp.test_end, c.warmup, c.link_quality,
                                  c.noise_amplitude, derive_seed(job_seed, {stream::links, 1})));
    return label(seed, "units=" + std::to_string(units) + " fold=" + std::to_string(sp.fold));
  });
}

ExperimentResult run_baseline_compare(const ExperimentConfig& c) {
  validate(c);
  const Topology topo = make_topology(c);
  const int sensors = topo.node_count() * c.node.inputs;
  if (sensors < 2) throw ConfigError("baseline_compare needs at least two sensors");
  const auto data = datasets_per_seed(c, sensors, c.train_size + c.test_size);
  const auto splits = split_incremental_cv(data.front().length(), {c.train_size}, c.test_size, c.folds);
  const std::size_t per_seed = c.link_qualities.size() * splits.size();
  return run_jobs(c.scenario, c.seeds.size() * per_seed, c.jobs, [&](std::size_t i, auto& records) {
    const std::size_t si = i / per_seed;
    const double q = c.link_qualities[(i % per_seed) / splits.size()];
    const Split& sp = splits[i % splits.size()];
    const std::uint64_t seed = c.seeds[si];
    const SeriesSet series = normalize(data[si], sp.train_begin, sp.train_end);
    const Eigen::MatrixXd z = series.normalized();
    // Shared across qualities and between both models: same weights seeds and link-outcome seeds.
    const std::uint64_t job_seed = derive_seed(seed, {std::uint64_t(sp.fold)});
    const std::uint64_t train_links = derive_seed(job_seed, {stream::links, 0});
    const std::uint64_t test_links = derive_seed(job_seed, {stream::links, 1});
    const std::string point = format_double(q);

    const Sodesn net = init_sodesn(topo, c.node, c.init, derive_seed(job_seed, {stream::init}));
    const Sodesn trained = train_on(net, z, sp.train_begin, sp.train_end, c, q, job_seed, train_links);
    add_records(records, point, "sodesn", sp.fold, seed,
                score_substituted(trained, series, sp.test_begin, sp.test_end, c.warmup, q, c.noise_amplitude,
                                  test_links));

    const Eigen::Index first = std::max<Eigen::Index>(0, sp.test_begin - c.warmup);
    std::vector<ScoreSummary> esn_scores;
    for (int s = 0; s < sensors; ++s) {
      std::vector<int> others;
      for (int k = 0; k < sensors; ++k) {
        if (k != s) others.push_back(k);
      }
      const Eigen::MatrixXd inputs = z(Eigen::all, others);
      EsnOptions eo = c.esn;
      eo.seed = derive_seed(job_seed, {stream::init, 1, std::uint64_t(s)});
      eo.washout = washout_for(c, sp.train_end - sp.train_begin);
      eo.link_quality = q;
      eo.link_seed = derive_seed(train_links, {stream::links, std::uint64_t(s)});
      Esn esn = train_esn(inputs.middleRows(sp.train_begin, sp.train_end - sp.train_begin),
                          z.col(s).segment(sp.train_begin, sp.train_end - sp.train_begin), eo);
      esn.input_sensors = others;
      esn.target_sensor = s;
      const Eigen::VectorXd predicted =
          esn_predict(esn, inputs.middleRows(first, sp.test_end - first), q,
                      derive_seed(test_links, {stream::links, std::uint64_t(s)}))
              .tail(sp.test_end - sp.test_begin);
      const Eigen::VectorXd engineering =
          (predicted.array() * series.normalization.scale(s) + series.normalization.offset(s)).matrix();
      esn_scores.push_back(score(engineering, series.samples.col(s).segment(sp.test_begin, sp.test_end - sp.test_begin)));
    }
    add_records(records, point, "esn", sp.fold, seed, esn_scores);
    return label(seed, "link_quality=" + point + " fold=" + std::to_string(sp.fold));
  });
}

ExperimentResult run_robustness(const ExperimentConfig& c) {
  validate(c);
  const Topology topo = build_grid(c.rows, c.cols);
  const int sensors = topo.node_count() * c.node.inputs;
  const Eigen::Index total = c.train_size + c.warmup + c.test_size;
  const auto data = datasets_per_seed(c, sensors, total);

  // Phase 1: one trained network per seed on the fault-free training window.
  std::vector<Sodesn> trained(c.seeds.size());
  std::vector<SeriesSet> series(c.seeds.size());
  std::vector<JobTiming> train_timings(c.seeds.size());
  parallel_for(c.seeds.size(), c.jobs, [&](std::size_t si) {
    const auto tj = Clock::now();
    const std::uint64_t seed = c.seeds[si];
    series[si] = normalize(data[si], 0, c.train_size);
    const Sodesn net = init_sodesn(topo, c.node, c.init, derive_seed(seed, {stream::init}));
    trained[si] = train_on(net, series[si].normalized(), 0, c.train_size, c, c.link_quality, seed,
                           derive_seed(seed, {stream::links, 0}));
    train_timings[si] = {label(seed, "train"), seconds_since(tj)};
  });

  // Phase 2: every failure count and feedback mode on the same test window, faults and links.
  const std::size_t per_seed = c.failures.size() * c.feedback_modes.size();
  ExperimentResult result = run_jobs(c.scenario, c.seeds.size() * per_seed, c.jobs, [&](std::size_t i, auto& records) {
    const std::size_t si = i / per_seed;
    const int failures = c.failures[(i % per_seed) / c.feedback_modes.size()];
    const Feedback feedback = c.feedback_modes[i % c.feedback_modes.size()];
    const std::uint64_t seed = c.seeds[si];
    const SeriesSet test = series[si].rows(c.train_size, c.train_size + c.warmup + c.test_size);
    Rng fault_rng = make_rng(seed, {stream::faults});
    const FaultSchedule schedule = random_fault_schedule(sensors, failures, c.warmup, fault_rng);
    const SeriesSet faulty = apply_faults(test, schedule);

    MonitorOptions mo;
    mo.feedback = feedback;
    mo.link_quality = c.link_quality;
    mo.link_seed = derive_seed(seed, {stream::links, 1});
    mo.use_thresholds = false;
    mo.oracle = schedule;
    ThresholdPolicy policy;
    policy.thresholds = Eigen::VectorXd::Constant(sensors, std::numeric_limits<double>::infinity());
    const FaultReport report = run_monitor(trained[si], faulty, policy, mo, &test.samples);
    for (int s = 0; s < sensors; ++s) {
      if (schedule.contains(s)) continue;
      records.push_back({std::to_string(failures), to_string(feedback), 0, seed, s,
                         score(report.predictions.col(s).tail(c.test_size), test.samples.col(s).tail(c.test_size))});
    }
    return label(seed, "failures=" + std::to_string(failures) + " feedback=" + to_string(feedback));
  });
  result.timings.insert(result.timings.begin(), train_timings.begin(), train_timings.end());
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  switch (config.scenario) {
    case Scenario::learning_curve: return run_learning_curve(config);
    case Scenario::reservoir_sweep: return run_reservoir_sweep(config);
    case Scenario::baseline_compare: return run_baseline_compare(config);
    case Scenario::robustness: return run_robustness(config);
  }
  throw UsageError("unknown scenario");
}

namespace {

std::vector<PointAggregate> aggregate_if(const ExperimentResult& result, std::optional<std::uint64_t> seed) {
  std::vector<PointAggregate> out;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  std::vector<double> sums;
  for (const auto& r : result.records) {
    if (seed && r.seed != *seed) continue;
    auto key = std::make_pair(r.point, r.variant);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      out.push_back({r.point, r.variant, 0.0, 0});
      sums.push_back(0.0);
    }
    sums[it->second] += r.score.nrmse;
    ++out[it->second].records;
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].mean_nrmse = sums[i] / double(out[i].records);
  return out;
}

const char* x_column(Scenario s) {
  switch (s) {
    case Scenario::learning_curve: return "train_size";
    case Scenario::reservoir_sweep: return "units_per_node";
    case Scenario::baseline_compare: return "link_quality";
    case Scenario::robustness: return "failed_sensors";
  }
  return "x";
}

}  // namespace

std::vector<PointAggregate> aggregate(const ExperimentResult& result) { return aggregate_if(result, std::nullopt); }

std::vector<PointAggregate> aggregate(const ExperimentResult& result, std::uint64_t seed) {
  return aggregate_if(result, seed);
}

void write_records_csv(std::ostream& out, const ExperimentResult& result) {
  out << "scenario,point,variant,fold,seed,sensor,nrmse,max_abs_error,n\n";
  for (const auto& r : result.records) {
    out << to_string(result.scenario) << ',' << r.point << ',' << r.variant << ',' << r.fold << ',' << r.seed << ','
        << r.sensor << ',' << format_double(r.score.nrmse) << ',' << format_double(r.score.max_abs_error) << ','
        << r.score.n << '\n';
  }
}

void write_plot_csv(std::ostream& out, const ExperimentResult& result) {
  const auto aggregates = aggregate(result);
  std::vector<std::string> points;
  std::vector<std::string> variants;
  for (const auto& a : aggregates) {
    if (std::find(points.begin(), points.end(), a.point) == points.end()) points.push_back(a.point);
    if (std::find(variants.begin(), variants.end(), a.variant) == variants.end()) variants.push_back(a.variant);
  }
  out << x_column(result.scenario);
  for (const auto& v : variants) out << ',' << v;
  out << '\n';
  for (const auto& p : points) {
    out << p;
    for (const auto& v : variants) {
      out << ',';
      for (const auto& a : aggregates) {
        if (a.point == p && a.variant == v) out << format_double(a.mean_nrmse);
      }
    }
    out << '\n';
  }
}

nlohmann::json summary_json(const ExperimentResult& result) {
  using nlohmann::json;
  json j;
  j["scenario"] = to_string(result.scenario);
  j["records"] = result.records.size();
  json aggs = json::array();
  for (const auto& a : aggregate(result)) {
    aggs.push_back({{"point", a.point}, {"variant", a.variant}, {"mean_nrmse", a.mean_nrmse}, {"records", a.records}});
  }
  j["aggregates"] = std::move(aggs);
  std::vector<std::uint64_t> seeds;
  for (const auto& r : result.records) {
    if (std::find(seeds.begin(), seeds.end(), r.seed) == seeds.end()) seeds.push_back(r.seed);
  }
  json per_seed = json::object();
  for (auto s : seeds) {
    json list = json::array();
    for (const auto& a : aggregate(result, s)) {
      list.push_back({{"point", a.point}, {"variant", a.variant}, {"mean_nrmse", a.mean_nrmse}});
    }
    per_seed[std::to_string(s)] = std::move(list);
  }
  j["by_seed"] = std::move(per_seed);
  json timings = json::array();
  double total = 0.0;
  for (const auto& t : result.timings) {
    timings.push_back({{"job", t.label}, {"seconds", t.seconds}});
    total += t.seconds;
  }
  j["jobs"] = std::move(timings);
  j["job_seconds_total"] = total;
  return j;
}

}  // namespace sodesn
