#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sodesn/baseline_esn.hpp"
#include "sodesn/data.hpp"
#include "sodesn/fault_detection.hpp"
#include "sodesn/reservoir.hpp"
#include "sodesn/training.hpp"

namespace sodesn {

/// Bundle format identifier and version written into every file.
inline constexpr const char* kBundleFormat = "sodesn-bundle";
inline constexpr int kBundleVersion = 1;

/// Sensor names and the normalization the model was trained with.
struct SensorMeta {
  std::vector<std::string> names;
  Normalization normalization;
  std::chrono::seconds interval{900};
  bool operator==(const SensorMeta&) const = default;
};

/// How a readout was obtained.
struct TrainingMeta {
  std::string fingerprint;  ///< SHA-256 of the training series
  Eigen::Index washout = 0;
  NoiseSpec noise;
  double sv_cutoff = 1e-10;
  double ridge = 0.0;
  double link_quality = 1.0;
  std::uint64_t seed = 0;
  Eigen::Index train_rows = 0;
};

struct ModelBundle {
  Sodesn net;
  std::optional<SensorMeta> sensors;
  std::optional<TrainingMeta> training;
  std::optional<ThresholdPolicy> thresholds;
};

/// One centralized ESN per target sensor.
struct EsnBundle {
  std::vector<Esn> models;
  std::optional<SensorMeta> sensors;
  std::optional<TrainingMeta> training;
};

/// JSON text; doubles round-trip bit-exactly.
std::string serialize_bundle(const ModelBundle& bundle);
std::string serialize_bundle(const EsnBundle& bundle);
/// Throws ConfigError on malformed input, a wrong model kind, or a version mismatch.
ModelBundle parse_bundle(std::string_view text);
EsnBundle parse_esn_bundle(std::string_view text);
/// Model kind ("sodesn" or "esn") of a bundle without full validation.
std::string bundle_kind(std::string_view text);

void save_bundle(const std::string& path, const ModelBundle& bundle);
void save_bundle(const std::string& path, const EsnBundle& bundle);
ModelBundle load_bundle(const std::string& path);
EsnBundle load_esn_bundle(const std::string& path);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
/// SHA-256 of a file's bytes; throws DataError when unreadable.
std::string fingerprint_file(const std::string& path);
/// SHA-256 of the CSV rendering of a series.
std::string fingerprint_series(const SeriesSet& series);

}  // namespace sodesn
