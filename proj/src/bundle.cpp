#include "sodesn/bundle.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "sodesn/error.hpp"

namespace sodesn {
namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* what) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const json& data = j.at("data");
  if (rows < 0 || cols < 0 || !data.is_array() || data.size() != static_cast<std::size_t>(rows * cols)) {
    throw ConfigError(std::string("bundle: malformed matrix '") + what + "'");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[i++].get<double>();
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vector_from_json(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

json header(const char* kind) { return {{"format", kBundleFormat}, {"version", kBundleVersion}, {"model", kind}}; }

void check_header(const json& j, const char* kind) {
  if (!j.is_object() || j.value("format", "") != kBundleFormat) throw ConfigError("bundle: not a weight bundle");
  if (j.value("version", -1) != kBundleVersion) {
    throw ConfigError("bundle: unsupported version " + j.value("version", json(-1)).dump());
  }
  const std::string model = j.value("model", "");
  if (model != kind) throw ConfigError("bundle: expected model '" + std::string(kind) + "', found '" + model + "'");
}

json sensors_to_json(const SensorMeta& s) {
  return {{"names", s.names},
          {"offset", vector_to_json(s.normalization.offset)},
          {"scale", vector_to_json(s.normalization.scale)},
          {"interval_seconds", s.interval.count()}};
}

SensorMeta sensors_from_json(const json& j) {
  SensorMeta s;
  s.names = j.at("names").get<std::vector<std::string>>();
  s.normalization.offset = vector_from_json(j.at("offset"));
  s.normalization.scale = vector_from_json(j.at("scale"));
  s.interval = std::chrono::seconds(j.at("interval_seconds").get<std::int64_t>());
  if (s.normalization.offset.size() != static_cast<Eigen::Index>(s.names.size()) ||
      s.normalization.scale.size() != s.normalization.offset.size()) {
    throw ConfigError("bundle: sensor metadata sizes disagree");
  }
  return s;
}

json training_to_json(const TrainingMeta& t) {
  return {{"fingerprint", t.fingerprint},   {"washout", t.washout},
          {"noise_amplitude", t.noise.amplitude}, {"noise_seed", t.noise.seed},
          {"sv_cutoff", t.sv_cutoff},       {"ridge", t.ridge},
          {"link_quality", t.link_quality}, {"seed", t.seed},
          {"train_rows", t.train_rows}};
}

TrainingMeta training_from_json(const json& j) {
  TrainingMeta t;
  t.fingerprint = j.at("fingerprint").get<std::string>();
  t.washout = j.at("washout").get<Eigen::Index>();
  t.noise.amplitude = j.at("noise_amplitude").get<double>();
  t.noise.seed = j.at("noise_seed").get<std::uint64_t>();
  t.sv_cutoff = j.at("sv_cutoff").get<double>();
  t.ridge = j.at("ridge").get<double>();
  t.link_quality = j.at("link_quality").get<double>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.train_rows = j.at("train_rows").get<Eigen::Index>();
  return t;
}

json thresholds_to_json(const ThresholdPolicy& p) {
  return {{"mode", to_string(p.mode)},
          {"thresholds", vector_to_json(p.thresholds)},
          {"window", p.window},
          {"safety_factor", p.safety_factor}};
}

ThresholdPolicy thresholds_from_json(const json& j) {
  ThresholdPolicy p;
  p.mode = parse_threshold_mode(j.at("mode").get<std::string>());
  p.thresholds = vector_from_json(j.at("thresholds"));
  p.window = j.at("window").get<Eigen::Index>();
  p.safety_factor = j.at("safety_factor").get<double>();
  return p;
}

template <class F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bundle: ") + e.what());
  }
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bundle: invalid JSON: ") + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace

std::string serialize_bundle(const ModelBundle& bundle) {
  const Sodesn& net = bundle.net;
  const Topology& topo = net.topology();
  json j = header("sodesn");
  json t = {{"node_count", topo.node_count()}, {"edges", topo.undirected_edges()}};
  if (topo.grid()) t["grid"] = {{"rows", topo.grid()->rows}, {"cols", topo.grid()->cols}};
  j["topology"] = std::move(t);
  j["node_spec"] = {{"inputs", net.spec().inputs}, {"internal", net.spec().internal}, {"outputs", net.spec().outputs}};
  const InitOptions& o = net.options();
  j["init"] = {{"density_local", o.density_local}, {"density_cross", o.density_cross},
               {"rho_target", o.rho_target},       {"taps", to_string(o.taps)},
               {"activation", to_string(o.activation)}, {"seed", net.seed()}};
  json nodes = json::array();
  for (const NodeWeights& w : net.nodes()) {
    nodes.push_back({{"internal", matrix_to_json(w.internal)},
                     {"input", matrix_to_json(w.input)},
                     {"cross", matrix_to_json(w.cross)},
                     {"readout", matrix_to_json(w.readout)}});
  }
  j["nodes"] = std::move(nodes);
  if (bundle.sensors) j["sensors"] = sensors_to_json(*bundle.sensors);
  if (bundle.training) j["training"] = training_to_json(*bundle.training);
  if (bundle.thresholds) j["thresholds"] = thresholds_to_json(*bundle.thresholds);
  return j.dump(1) + "\n";
}

ModelBundle parse_bundle(std::string_view text) {
  const json j = parse_json(text);
  check_header(j, "sodesn");
  return guarded([&] {
    const json& t = j.at("topology");
    std::optional<GridShape> grid;
    if (t.contains("grid")) grid = GridShape{t["grid"].at("rows").get<int>(), t["grid"].at("cols").get<int>()};
    Topology topo(t.at("node_count").get<int>(), t.at("edges").get<std::vector<std::pair<int, int>>>(), grid);
    const json& s = j.at("node_spec");
    NodeSpec spec{s.at("inputs").get<int>(), s.at("internal").get<int>(), s.at("outputs").get<int>()};
    const json& i = j.at("init");
    InitOptions opts;
    opts.density_local = i.at("density_local").get<double>();
    opts.density_cross = i.at("density_cross").get<double>();
    opts.rho_target = i.at("rho_target").get<double>();
    opts.taps = parse_readout_taps(i.at("taps").get<std::string>());
    opts.activation = parse_readout_activation(i.at("activation").get<std::string>());
    std::vector<NodeWeights> nodes;
    for (const json& n : j.at("nodes")) {
      nodes.push_back({matrix_from_json(n.at("internal"), "internal"), matrix_from_json(n.at("input"), "input"),
                       matrix_from_json(n.at("cross"), "cross"), matrix_from_json(n.at("readout"), "readout")});
    }
    ModelBundle b{Sodesn(std::move(topo), spec, std::move(nodes), opts, i.at("seed").get<std::uint64_t>()), {}, {}, {}};
    if (j.contains("sensors")) b.sensors = sensors_from_json(j["sensors"]);
    if (j.contains("training")) b.training = training_from_json(j["training"]);
    if (j.contains("thresholds")) b.thresholds = thresholds_from_json(j["thresholds"]);
    if (b.sensors && static_cast<Eigen::Index>(b.sensors->names.size()) != b.net.total_inputs()) {
      throw ConfigError("bundle: sensor count differs from network inputs");
    }
    return b;
  });
}

std::string serialize_bundle(const EsnBundle& bundle) {
  json j = header("esn");
  json models = json::array();
  for (const Esn& e : bundle.models) {
    models.push_back({{"reservoir", matrix_to_json(e.reservoir)},
                      {"input", matrix_to_json(e.input)},
                      {"readout", matrix_to_json(e.readout)},
                      {"rho_target", e.rho_target},
                      {"input_sensors", e.input_sensors},
                      {"target_sensor", e.target_sensor}});
  }
  j["models"] = std::move(models);
  if (bundle.sensors) j["sensors"] = sensors_to_json(*bundle.sensors);
  if (bundle.training) j["training"] = training_to_json(*bundle.training);
  return j.dump(1) + "\n";
}

EsnBundle parse_esn_bundle(std::string_view text) {
  const json j = parse_json(text);
  check_header(j, "esn");
  return guarded([&] {
    EsnBundle b;
    for (const json& m : j.at("models")) {
      Esn e;
      e.reservoir = matrix_from_json(m.at("reservoir"), "reservoir");
      e.input = matrix_from_json(m.at("input"), "input");
      const Eigen::MatrixXd readout = matrix_from_json(m.at("readout"), "readout");
      if (readout.rows() != 1 || e.reservoir.rows() != e.reservoir.cols() || e.input.rows() != e.reservoir.rows() ||
          readout.cols() != e.input.cols() + e.reservoir.rows()) {
        throw ConfigError("bundle: ESN matrix shapes disagree");
      }
      e.readout = readout.row(0);
      e.rho_target = m.at("rho_target").get<double>();
      e.input_sensors = m.at("input_sensors").get<std::vector<int>>();
      e.target_sensor = m.at("target_sensor").get<int>();
      b.models.push_back(std::move(e));
    }
    if (j.contains("sensors")) b.sensors = sensors_from_json(j["sensors"]);
    if (j.contains("training")) b.training = training_from_json(j["training"]);
    return b;
  });
}

std::string bundle_kind(std::string_view text) {
  const json j = parse_json(text);
  if (!j.is_object() || j.value("format", "") != kBundleFormat) throw ConfigError("bundle: not a weight bundle");
  return j.value("model", "");
}

void save_bundle(const std::string& path, const ModelBundle& bundle) { write_file(path, serialize_bundle(bundle)); }
void save_bundle(const std::string& path, const EsnBundle& bundle) { write_file(path, serialize_bundle(bundle)); }
ModelBundle load_bundle(const std::string& path) { return parse_bundle(read_file(path)); }
EsnBundle load_esn_bundle(const std::string& path) { return parse_esn_bundle(read_file(path)); }

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw NumericError("SHA-256 computation failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string fingerprint_file(const std::string& path) { return sha256_hex(read_file(path)); }

std::string fingerprint_series(const SeriesSet& series) {
  std::ostringstream ss;
  write_csv(ss, series);
  return sha256_hex(ss.str());
}

}  // namespace sodesn
