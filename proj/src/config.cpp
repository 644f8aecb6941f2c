#include "sodesn/config.hpp"

#include <algorithm>
#include <fstream>

#include "sodesn/error.hpp"

namespace sodesn {
namespace {

using nlohmann::json;

json default_values() {
  json d = json::object();
  d["seed"] = 1u;
  d["jobs"] = 1;

  d["data.source"] = "synthetic";
  d["data.csv"] = "";
  d["data.forward_fill"] = false;
  d["data.sensors"] = json::array();

  d["synth.length"] = 14000;
  d["synth.count"] = 8;
  d["synth.max_shift"] = 2;
  d["synth.noise_fraction"] = 0.10;
  d["synth.interval_minutes"] = 15;
  d["synth.mean"] = 18.0;
  d["synth.daily_amplitude"] = 7.0;
  d["synth.half_daily_amplitude"] = 1.5;
  d["synth.weather_std"] = 0.5;
  d["synth.weather_days"] = 3.0;
  d["synth.fast_std"] = 0.3;
  d["synth.fast_hours"] = 2.0;

  d["topology.kind"] = "grid";
  d["topology.rows"] = 2;
  d["topology.cols"] = 4;
  d["topology.edge_list"] = "";

  d["node.internal"] = 15;
  d["init.density_local"] = 0.2;
  d["init.density_cross"] = 0.1;
  d["init.rho_target"] = 0.66;
  d["init.taps"] = "neighbor_state";
  d["init.activation"] = "linear";

  d["train.rows"] = 10000;
  d["train.washout"] = -1;
  d["train.noise_amplitude"] = 1.0;
  d["train.link_quality"] = 1.0;
  d["train.sv_cutoff"] = 1e-10;
  d["train.ridge"] = 0.0;

  d["monitor.feedback"] = "replace";
  d["monitor.threshold_mode"] = "windowed";
  d["monitor.window"] = 96;
  d["monitor.safety_factor"] = 1.2;
  d["monitor.link_quality"] = 1.0;
  d["monitor.calibration_rows"] = 2000;
  d["monitor.thresholds"] = true;

  d["esn.internal"] = 120;
  d["esn.density"] = 0.1;
  d["esn.rho_target"] = 0.66;
  d["esn.input_scaling"] = 1.0;

  d["experiment.train_size"] = 10000;
  d["experiment.test_size"] = 2000;
  d["experiment.warmup"] = 100;
  d["experiment.repeats"] = 1;
  d["experiment.link_quality"] = 1.0;

  d["learning_curve.train_sizes"] = {300, 1000, 3000, 10000};
  d["learning_curve.folds"] = 10;
  d["learning_curve.full_scale"] = false;

  d["reservoir_sweep.units"] = {3, 15, 27, 39};
  d["reservoir_sweep.folds"] = 3;

  d["baseline_compare.link_qualities"] = {0.10, 0.50, 0.90, 0.98};

  d["robustness.rows"] = 10;
  d["robustness.cols"] = 10;
  d["robustness.train_size"] = 5000;
  d["robustness.failures"] = {0, 16, 30, 50, 60};
  d["robustness.feedback"] = {"passthrough", "replace"};
  return d;
}

const char* kind_name(const json& v) {
  if (v.is_boolean()) return "boolean";
  if (v.is_number_integer()) return "integer";
  if (v.is_number()) return "number";
  if (v.is_string()) return "string";
  if (v.is_array()) return "list";
  return "value";
}

bool compatible(const json& def, const json& v) {
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_number_unsigned()) return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  if (def.is_number_integer()) return v.is_number_integer();
  if (def.is_number()) return v.is_number();
  if (def.is_string()) return v.is_string();
  if (def.is_array()) {
    if (!v.is_array()) return false;
    if (def.empty()) return std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_string(); });
    return std::all_of(v.begin(), v.end(), [&](const json& e) { return compatible(def.front(), e); });
  }
  return false;
}

void flatten(const json& object, const std::string& prefix, std::vector<std::pair<std::string, json>>& out) {
  for (auto it = object.begin(); it != object.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) {
      flatten(*it, key, out);
    } else {
      out.emplace_back(key, *it);
    }
  }
}

}  // namespace

Config::Config() : values_(default_values()) {}

void Config::set(const std::string& key, json value, const std::string& source) {
  if (!values_.contains(key)) throw ConfigError(source + ": unknown key '" + key + "'");
  json& current = values_[key];
  if (!compatible(current, value)) {
    throw ConfigError(source + ": key '" + key + "' expects a " + kind_name(current) + ", got " + value.dump());
  }
  // Keep the stored number kind stable so dumps stay uniform.
  if (current.is_number_float() && value.is_number()) value = value.get<double>();
  if (current.is_number_unsigned()) value = value.get<std::uint64_t>();
  current = std::move(value);
}

void Config::merge_json(const json& object, const std::string& source) {
  if (!object.is_object()) throw ConfigError(source + ": configuration must be a JSON object");
  std::vector<std::pair<std::string, json>> flat;
  flatten(object, "", flat);
  for (auto& [key, value] : flat) set(key, std::move(value), source);
}

void Config::merge_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  merge_json(j, path);
}

void Config::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  set(key, std::move(value), "--set");
}

const json& Config::at(const std::string& key) const {
  if (!values_.contains(key)) throw ConfigError("unknown configuration key '" + key + "'");
  return values_.at(key);
}

std::int64_t Config::get_int(const std::string& key) const { return at(key).get<std::int64_t>(); }
std::uint64_t Config::get_uint(const std::string& key) const { return at(key).get<std::uint64_t>(); }
double Config::get_double(const std::string& key) const { return at(key).get<double>(); }
bool Config::get_bool(const std::string& key) const { return at(key).get<bool>(); }
std::string Config::get_string(const std::string& key) const { return at(key).get<std::string>(); }
std::vector<std::int64_t> Config::get_int_list(const std::string& key) const {
  return at(key).get<std::vector<std::int64_t>>();
}
std::vector<double> Config::get_double_list(const std::string& key) const { return at(key).get<std::vector<double>>(); }
std::vector<std::string> Config::get_string_list(const std::string& key) const {
  return at(key).get<std::vector<std::string>>();
}

}  // namespace sodesn
