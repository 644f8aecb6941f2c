#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>
#include <vector>

namespace sodesn {

/// Flat configuration with dotted keys. Every key has a default; files and
/// overrides may only set known keys and must keep the default's type.
class Config {
 public:
  /// All defaults materialized.
  Config();

  /// Merges a JSON file. Nested objects are flattened into dotted keys.
  void merge_file(const std::string& path);
  void merge_json(const nlohmann::json& object, const std::string& source = "<json>");
  /// `key=value`; the value is parsed as JSON, falling back to a plain string.
  void apply_override(std::string_view assignment);
  void set(const std::string& key, nlohmann::json value, const std::string& source = "<set>");

  bool contains(const std::string& key) const { return values_.contains(key); }
  const nlohmann::json& at(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::vector<std::int64_t> get_int_list(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& key) const;

  /// Flat object of all keys in sorted order.
  const nlohmann::json& values() const noexcept { return values_; }
  std::string dump() const { return values_.dump(2) + "\n"; }

 private:
  nlohmann::json values_;
};

}  // namespace sodesn
