#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace exactdiff::cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Minimal TOML-style configuration: [section] headers, key = value lines,
/// values being numbers, quoted strings, booleans, or flat arrays of numbers.
/// '#' starts a comment.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         std::optional<std::string> fallback = std::nullopt) const;
  double get_number(const std::string& section, const std::string& key,
                    std::optional<double> fallback = std::nullopt) const;
  bool get_bool(const std::string& section, const std::string& key, std::optional<bool> fallback) const;
  std::vector<double> get_array(const std::string& section, const std::string& key) const;

  /// Scalar key or "<key>_list" array; at least the fallback when neither is
  /// present.
  std::vector<double> get_number_or_list(const std::string& section, const std::string& key,
                                         std::optional<double> fallback = std::nullopt) const;

 private:
  struct Value {
    std::string raw;
    bool is_string = false;
    bool is_array = false;
    std::vector<double> array;
  };
  std::map<std::string, std::map<std::string, Value>> sections_;

  const Value* find(const std::string& section, const std::string& key) const;
};

}  // namespace exactdiff::cli
