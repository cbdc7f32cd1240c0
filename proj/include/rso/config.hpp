#pragma once

#include <map>
#include <string>
#include <vector>

namespace rso {

/// Flat key-value configuration with [section] headers, TOML-style syntax:
/// strings in double quotes, numbers, booleans, and one-level arrays of
/// scalars. Keys are addressed as "section.key".
class Config {
 public:
  struct Value {
    enum class Type { string, number, boolean, list };
    Type type = Type::string;
    std::string str;
    double num = 0.0;
    bool boolean = false;
    std::vector<Value> list;
  };

  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_number(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Scalar values come back as a one-element list.
  std::vector<double> get_number_list(const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& key) const;

  const std::map<std::string, Value>& entries() const { return values_; }

 private:
  std::map<std::string, Value> values_;
};

}  // namespace rso
