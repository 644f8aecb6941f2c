#include "sodesn/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "sodesn/bundle.hpp"
#include "sodesn/config.hpp"
#include "sodesn/data.hpp"
#include "sodesn/experiments.hpp"
#include "sodesn/fault_detection.hpp"
#include "sodesn/training.hpp"

namespace sodesn {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const char* category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::usage: return "usage";
    case ErrorCategory::config: return "config";
    case ErrorCategory::data: return "data";
    case ErrorCategory::numeric: return "numeric";
  }
  return "unknown";
}

std::string now_utc() {
  return format_timestamp(std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now()));
}

/// State shared by every command of one invocation.
struct Invocation {
  std::vector<std::string> args;
  std::string config_path;
  std::vector<std::string> overrides;
  std::string run_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  Config config;
  std::map<std::string, std::string> inputs;  // path -> sha256
  std::vector<std::string> outputs;
  std::string started;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  void resolve_config() {
    if (!config_path.empty()) {
      inputs[config_path] = fingerprint_file(config_path);
      config.merge_file(config_path);
    }
    for (const auto& o : overrides) config.apply_override(o);
    if (seed) config.set("seed", *seed, "--seed");
    if (jobs) config.set("jobs", *jobs, "--jobs");
  }

  fs::path run_path(const std::string& name) const {
    fs::create_directories(run_dir);
    return fs::path(run_dir) / name;
  }

  void record_input(const std::string& path) {
    if (!inputs.count(path)) inputs[path] = fingerprint_file(path);
  }

  void write_output(const std::string& name, const std::string& text) {
    const fs::path p = run_path(name);
    std::ofstream f(p, std::ios::binary);
    if (!f) throw DataError("cannot write '" + p.string() + "'");
    f << text;
    if (!f) throw DataError("write failed for '" + p.string() + "'");
    outputs.push_back(p.string());
  }

  void write_manifest(const std::string& name, const std::string& command, const json& extra = json::object()) {
    json m;
    m["command"] = command;
    m["args"] = args;
    m["tool"] = "sodesn";
    m["version"] = kToolVersion;
    m["seed"] = config.get_uint("seed");
    m["config"] = config.values();
    m["inputs"] = inputs;
    m["outputs"] = outputs;
    m["started"] = started;
    m["finished"] = now_utc();
    for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = *it;
    const fs::path p = run_path(name);
    std::ofstream f(p);
    if (!f) throw DataError("cannot write '" + p.string() + "'");
    f << m.dump(2) << "\n";
  }
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Topology topology_from(const Config& c) {
  const std::string kind = c.get_string("topology.kind");
  if (kind == "grid") return build_grid(static_cast<int>(c.get_int("topology.rows")), static_cast<int>(c.get_int("topology.cols")));
  if (kind == "edge_list") return load_edge_list(c.get_string("topology.edge_list"));
  throw ConfigError("topology.kind must be grid or edge_list");
}

InitOptions init_from(const Config& c) {
  InitOptions o;
  o.density_local = c.get_double("init.density_local");
  o.density_cross = c.get_double("init.density_cross");
  o.rho_target = c.get_double("init.rho_target");
  o.taps = parse_readout_taps(c.get_string("init.taps"));
  o.activation = parse_readout_activation(c.get_string("init.activation"));
  return o;
}

SeriesSet synthesize_from(const Config& c, int count) {
  BaseSeriesParams p;
  p.mean = c.get_double("synth.mean");
  p.daily_amplitude = c.get_double("synth.daily_amplitude");
  p.half_daily_amplitude = c.get_double("synth.half_daily_amplitude");
  p.weather_std = c.get_double("synth.weather_std");
  p.weather_days = c.get_double("synth.weather_days");
  p.fast_std = c.get_double("synth.fast_std");
  p.fast_hours = c.get_double("synth.fast_hours");
  const auto length = c.get_int("synth.length");
  const int shift = static_cast<int>(c.get_int("synth.max_shift"));
  if (length < 2) throw ConfigError("synth.length must be at least 2");
  const std::chrono::seconds interval = std::chrono::minutes(c.get_int("synth.interval_minutes"));
  Rng rng = make_rng(c.get_uint("seed"), {stream::data});
  const Eigen::VectorXd base = synthesize_base(length + 2 * shift, interval, p, rng);
  return synthesize_correlated(base, count, shift, c.get_double("synth.noise_fraction"), rng, interval);
}

/// Loads a CSV and selects `names` in order; a missing sensor is a configuration mismatch.
SeriesSet load_matching(const std::string& path, const std::vector<std::string>& names, bool forward_fill) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  CsvOptions options;
  options.forward_fill = forward_fill;
  SeriesSet all = parse_csv(in, options, path);
  std::vector<int> columns;
  for (const auto& n : names) {
    const auto c = all.column(n);
    if (!c) throw ConfigError("data '" + path + "' has no sensor '" + n + "' required by the model");
    columns.push_back(*c);
  }
  SeriesSet out;
  out.names = names;
  out.samples = all.samples(Eigen::all, columns);
  out.interval = all.interval;
  out.start = all.start;
  return out;
}

int cmd_config_show(Invocation& inv) {
  inv.resolve_config();
  *inv.out << inv.config.dump();
  inv.write_manifest("config_manifest.json", "config show");
  return 0;
}

int cmd_synth_data(Invocation& inv, const std::string& out_name) {
  inv.resolve_config();
  const SeriesSet series = synthesize_from(inv.config, static_cast<int>(inv.config.get_int("synth.count")));
  std::ostringstream ss;
  write_csv(ss, series);
  inv.write_output(out_name, ss.str());
  *inv.out << "wrote " << inv.outputs.back() << " (" << series.length() << " rows, " << series.sensor_count()
           << " sensors)\n";
  inv.write_manifest("synth-data_manifest.json", "synth-data");
  return 0;
}

int cmd_train(Invocation& inv, std::string data_path, const std::string& out_name) {
  inv.resolve_config();
  const Config& c = inv.config;
  if (data_path.empty()) data_path = c.get_string("data.csv");
  if (data_path.empty()) throw UsageError("train needs --data or data.csv");
  inv.record_input(data_path);
  if (c.get_string("topology.kind") == "edge_list") inv.record_input(c.get_string("topology.edge_list"));

  const Topology topo = topology_from(c);
  NodeSpec spec;
  spec.internal = static_cast<int>(c.get_int("node.internal"));
  CsvOptions csv;
  csv.forward_fill = c.get_bool("data.forward_fill");
  const auto sensors = c.get_string_list("data.sensors");
  if (!sensors.empty()) csv.expected_columns = sensors;
  SeriesSet data = load_csv(data_path, csv);
  if (data.sensor_count() != Eigen::Index(topo.node_count()) * spec.inputs) {
    throw ConfigError("data has " + std::to_string(data.sensor_count()) + " sensors but the topology has " +
                      std::to_string(topo.node_count()) + " nodes");
  }

  const Eigen::Index window = c.get_int("monitor.window");
  Eigen::Index train_rows = std::min<Eigen::Index>(c.get_int("train.rows"), data.length());
  const bool holdout = data.length() - train_rows >= std::max<Eigen::Index>(window, 2);
  if (!holdout) train_rows = data.length();
  const SeriesSet normalized = normalize(data, 0, train_rows);

  const std::uint64_t seed = c.get_uint("seed");
  const Sodesn net = init_sodesn(topo, spec, init_from(c), derive_seed(seed, {stream::init}));
  FaultTrainingOptions fo;
  fo.noise = {c.get_double("train.noise_amplitude"), derive_seed(seed, {stream::noise})};
  const auto washout = c.get_int("train.washout");
  fo.washout = washout < 0 ? default_washout(train_rows) : washout;
  fo.link_quality = c.get_double("train.link_quality");
  fo.seed = derive_seed(seed, {stream::links, 0});
  fo.solve = {c.get_double("train.sv_cutoff"), c.get_double("train.ridge")};
  fo.jobs = static_cast<int>(c.get_int("jobs"));
  const Sodesn trained = train_fault_detectors(net, normalized.normalized().topRows(train_rows), fo);

  ModelBundle bundle{trained, SensorMeta{data.names, normalized.normalization, data.interval}, TrainingMeta{}, {}};
  TrainingMeta& tm = *bundle.training;
  tm.fingerprint = fingerprint_series(data.rows(0, train_rows));
  tm.washout = fo.washout;
  tm.noise = fo.noise;
  tm.sv_cutoff = fo.solve.sv_cutoff;
  tm.ridge = fo.solve.ridge;
  tm.link_quality = fo.link_quality;
  tm.seed = seed;
  tm.train_rows = train_rows;

  if (c.get_bool("monitor.thresholds")) {
    Eigen::Index begin = train_rows;
    Eigen::Index end = std::min<Eigen::Index>(data.length(), train_rows + c.get_int("monitor.calibration_rows"));
    if (!holdout) {
      begin = 0;
      *inv.err << "warning: no rows left after training; calibrating thresholds on the training rows\n";
    }
    CalibrationOptions co;
    co.mode = parse_threshold_mode(c.get_string("monitor.threshold_mode"));
    co.safety_factor = c.get_double("monitor.safety_factor");
    co.window = window;
    co.link_quality = c.get_double("monitor.link_quality");
    co.link_seed = derive_seed(seed, {stream::links, 2});
    std::vector<std::string> warnings;
    bundle.thresholds = calibrate_thresholds(trained, normalized.rows(begin, end), co, &warnings);
    for (const auto& w : warnings) *inv.err << "warning: " << w << "\n";
  }
  inv.write_output(out_name, serialize_bundle(bundle));
  *inv.out << "trained " << trained.node_count() << " nodes on " << train_rows << " rows; wrote "
           << inv.outputs.back() << "\n";
  inv.write_manifest("train_manifest.json", "train");
  return 0;
}

struct MonitorArgs {
  std::string bundle;
  std::string data;
  std::string feedback;
  std::vector<std::string> faults;
  bool reset_flags = false;
  std::string prefix = "monitor";
};

FaultSchedule parse_faults(const std::vector<std::string>& specs, const std::vector<std::string>& names,
                           Eigen::Index length) {
  FaultSchedule schedule;
  for (const auto& s : specs) {
    const auto colon = s.rfind(':');
    const std::string who = s.substr(0, colon);
    Eigen::Index start = 0;
    if (colon != std::string::npos) {
      try {
        std::size_t used = 0;
        start = std::stoll(s.substr(colon + 1), &used);
        if (used != s.size() - colon - 1) throw std::invalid_argument(s);
      } catch (const std::logic_error&) {
        throw UsageError("--inject-fault expects SENSOR[:START], got '" + s + "'");
      }
    }
    int sensor = -1;
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == who) sensor = static_cast<int>(i);
    }
    if (sensor < 0) throw UsageError("--inject-fault: unknown sensor '" + who + "'");
    if (start < 0 || start >= length) throw UsageError("--inject-fault: start step out of range in '" + s + "'");
    schedule.entries.push_back({sensor, start, FaultKind::stuck_at_zero});
  }
  return schedule;
}

int cmd_monitor(Invocation& inv, const MonitorArgs& a) {
  inv.resolve_config();
  const Config& c = inv.config;
  inv.record_input(a.bundle);
  inv.record_input(a.data);
  const ModelBundle bundle = parse_bundle(read_text(a.bundle));
  if (!bundle.sensors) throw ConfigError("bundle carries no sensor metadata");
  SeriesSet truth = load_matching(a.data, bundle.sensors->names, c.get_bool("data.forward_fill"));
  truth.normalization = bundle.sensors->normalization;

  const FaultSchedule injected = parse_faults(a.faults, truth.names, truth.length());
  SeriesSet readings = apply_faults(truth, injected);

  const bool thresholds = c.get_bool("monitor.thresholds");
  ThresholdPolicy policy;
  if (bundle.thresholds) {
    policy = *bundle.thresholds;
  } else if (thresholds) {
    throw ConfigError("bundle has no calibrated thresholds; retrain or set monitor.thresholds=false");
  } else {
    policy.thresholds = Eigen::VectorXd::Constant(truth.sensor_count(), 1.0);
  }

  MonitorOptions mo;
  mo.feedback = parse_feedback(a.feedback.empty() ? c.get_string("monitor.feedback") : a.feedback);
  mo.link_quality = c.get_double("monitor.link_quality");
  mo.link_seed = derive_seed(c.get_uint("seed"), {stream::links, 3});
  mo.use_thresholds = thresholds;

  // Sticky flags persist across runs in the run directory.
  const fs::path flags_path = inv.run_path("flags.json");
  std::vector<std::string> carried;
  if (!a.reset_flags && fs::exists(flags_path)) {
    inv.record_input(flags_path.string());
    try {
      carried = json::parse(read_text(flags_path.string())).at("flagged").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw DataError(flags_path.string() + ": " + e.what());
    }
    for (const auto& n : carried) {
      const auto col = truth.column(n);
      if (!col) throw ConfigError(flags_path.string() + ": unknown sensor '" + n + "'");
      mo.initial_flags.push_back(*col);
    }
  }

  const FaultReport report =
      run_monitor(bundle.net, readings, policy, mo, &truth.samples, injected.entries.empty() ? nullptr : &injected);
  std::ostringstream trace;
  write_trace_csv(trace, report);
  inv.write_output(a.prefix + "_trace.csv", trace.str());
  inv.write_output(a.prefix + "_summary.json", summary_json(report, policy, mo.feedback));

  json flags = {{"flagged", json::array()}};
  for (const auto& s : report.sensors) {
    if (s.flagged) flags["flagged"].push_back(s.name);
  }
  std::ofstream(flags_path) << flags.dump(2) << "\n";
  inv.outputs.push_back(flags_path.string());

  *inv.out << "monitored " << report.truth.rows() << " steps; flagged:";
  if (flags["flagged"].empty()) *inv.out << " none";
  for (const auto& n : flags["flagged"]) *inv.out << ' ' << n.get<std::string>();
  *inv.out << "\n";
  inv.write_manifest(a.prefix + "_manifest.json", "monitor",
                     {{"feedback", to_string(mo.feedback)}, {"reset_flags", a.reset_flags}, {"injected_faults", a.faults}});
  return 0;
}

int cmd_experiment(Invocation& inv, const std::string& scenario_name) {
  const Scenario scenario = parse_scenario(scenario_name);
  if (!inv.seed) throw UsageError("experiment requires --seed");
  inv.resolve_config();
  const Config& c = inv.config;
  if (c.get_string("data.source") == "csv") inv.record_input(c.get_string("data.csv"));
  const ExperimentConfig ec = make_experiment_config(c, scenario);
  const ExperimentResult result = run_experiment(ec);

  const std::string stem = std::string(to_string(scenario)) + "_seed" + std::to_string(*inv.seed);
  std::ostringstream records;
  write_records_csv(records, result);
  inv.write_output(stem + "_records.csv", records.str());
  std::ostringstream plot;
  write_plot_csv(plot, result);
  inv.write_output(stem + "_plot.csv", plot.str());
  json summary = summary_json(result);
  summary["seeds"] = ec.seeds;
  inv.write_output(stem + "_summary.json", summary.dump(2) + "\n");

  *inv.out << plot.str();
  inv.write_manifest(stem + "_manifest.json", "experiment " + scenario_name);
  return 0;
}

}  // namespace

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::usage: return 2;
    case ErrorCategory::config: return 3;
    case ErrorCategory::data: return 4;
    case ErrorCategory::numeric: return 5;
  }
  return 1;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Invocation inv;
  inv.args = args;
  inv.out = &out;
  inv.err = &err;
  inv.started = now_utc();
  if (const char* env = std::getenv(kRunDirEnv); env && *env) {
    inv.run_dir = env;
  } else {
    inv.run_dir = "sodesn-run";
  }

  CLI::App app{"Distributed echo state network simulator for wireless sensor networks", "sodesn"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kToolVersion);
  app.add_option("--config", inv.config_path, "JSON configuration file (nested objects or dotted keys)");
  app.add_option("--set", inv.overrides, "Override a configuration key: key=value (repeatable)")
      ->allow_extra_args(false);
  app.add_option("--run-dir", inv.run_dir, std::string("Output directory (default $") + kRunDirEnv + " or ./sodesn-run)");
  app.add_option("--seed", inv.seed, "Global seed (required for experiments)");
  app.add_option("--jobs", inv.jobs, "Parallel jobs")->check(CLI::PositiveNumber);

  auto* train = app.add_subcommand("train", "Train per-sensor fault detectors and write a weight bundle");
  std::string train_data;
  std::string train_out = "bundle.json";
  train->add_option("--data", train_data, "Training CSV (timestamp,<sensor>...)");
  train->add_option("--out", train_out, "Bundle file name inside the run directory");

  auto* monitor = app.add_subcommand("monitor", "Run the fault detector over a data file");
  MonitorArgs margs;
  monitor->add_option("--bundle", margs.bundle, "Trained weight bundle")->required();
  monitor->add_option("--data", margs.data, "CSV to monitor")->required();
  monitor->add_option("--feedback", margs.feedback, "replace or passthrough")
      ->check(CLI::IsMember({"replace", "passthrough"}));
  monitor->add_option("--inject-fault", margs.faults, "Stuck-at-zero fault SENSOR[:START] (repeatable)")
      ->allow_extra_args(false);
  monitor->add_flag("--reset-flags", margs.reset_flags, "Ignore flags carried over from earlier runs");
  monitor->add_option("--name", margs.prefix, "Prefix of the output files");

  auto* experiment = app.add_subcommand("experiment", "Run an experiment scenario");
  std::string scenario;
  experiment->add_option("scenario", scenario, "learning_curve | reservoir_sweep | baseline_compare | robustness")
      ->required();

  auto* synth = app.add_subcommand("synth-data", "Write a synthetic correlated data set");
  std::string synth_out = "synthetic.csv";
  synth->add_option("--out", synth_out, "CSV file name inside the run directory");

  auto* config = app.add_subcommand("config", "Configuration utilities");
  config->require_subcommand(1);
  auto* show = config->add_subcommand("show", "Print the resolved configuration with all defaults");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    // Help and version requests arrive as parse "errors" with exit code 0.
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: usage: " << e.what() << "\n";
    return exit_code(ErrorCategory::usage);
  }

  try {
    if (*train) return cmd_train(inv, train_data, train_out);
    if (*monitor) return cmd_monitor(inv, margs);
    if (*experiment) return cmd_experiment(inv, scenario);
    if (*synth) return cmd_synth_data(inv, synth_out);
    if (*show) return cmd_config_show(inv);
    throw UsageError("no command given");
  } catch (const Error& e) {
    err << "error: " << category_name(e.category()) << ": " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const fs::filesystem_error& e) {
    err << "error: data: " << e.what() << "\n";
    return exit_code(ErrorCategory::data);
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace sodesn
