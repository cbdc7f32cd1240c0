#include "rso/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rso/error.hpp"

namespace rso {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

/// Strips a trailing # comment that is not inside a quoted string.
std::string strip_comment(const std::string& s) {
  bool in_quote = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_quote = !in_quote;
    if (s[i] == '#' && !in_quote) return s.substr(0, i);
  }
  return s;
}

Config::Value parse_scalar(const std::string& raw, int line_no) {
  Config::Value v;
  const std::string s = trim(raw);
  if (s.empty()) throw_config("config line " + std::to_string(line_no) + ": empty value");
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"')
      throw_config("config line " + std::to_string(line_no) + ": unterminated string");
    v.type = Config::Value::Type::string;
    v.str = s.substr(1, s.size() - 2);
    return v;
  }
  if (s == "true" || s == "false") {
    v.type = Config::Value::Type::boolean;
    v.boolean = (s == "true");
    return v;
  }
  char* end = nullptr;
  const double num = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size())
    throw_config("config line " + std::to_string(line_no) + ": cannot parse value '" + s + "'");
  v.type = Config::Value::Type::number;
  v.num = num;
  return v;
}

Config::Value parse_value(const std::string& raw, int line_no) {
  const std::string s = trim(raw);
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']')
      throw_config("config line " + std::to_string(line_no) + ": unterminated array");
    Config::Value v;
    v.type = Config::Value::Type::list;
    const std::string inner = s.substr(1, s.size() - 2);
    std::string item;
    bool in_quote = false;
    for (char c : inner) {
      if (c == '"') in_quote = !in_quote;
      if (c == ',' && !in_quote) {
        if (!trim(item).empty()) v.list.push_back(parse_scalar(item, line_no));
        item.clear();
      } else {
        item += c;
      }
    }
    if (!trim(item).empty()) v.list.push_back(parse_scalar(item, line_no));
    return v;
  }
  return parse_scalar(s, line_no);
}

}  // namespace

Config Config::parse_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw_config("config line " + std::to_string(line_no) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw_config("config line " + std::to_string(line_no) + ": empty section name");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw_config("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw_config("config line " + std::to_string(line_no) + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (cfg.values_.count(full))
      throw_config("config line " + std::to_string(line_no) + ": duplicate key '" + full + "'");
    cfg.values_[full] = parse_value(line.substr(eq + 1), line_no);
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second.type != Value::Type::string)
    throw_config("config key '" + key + "' must be a string");
  return it->second.str;
}

double Config::get_number(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second.type != Value::Type::number)
    throw_config("config key '" + key + "' must be a number");
  return it->second.num;
}

long Config::get_int(const std::string& key, long fallback) const {
  const double v = get_number(key, static_cast<double>(fallback));
  const long rounded = std::lround(v);
  if (static_cast<double>(rounded) != v)
    throw_config("config key '" + key + "' must be an integer");
  return rounded;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second.type != Value::Type::boolean)
    throw_config("config key '" + key + "' must be a boolean");
  return it->second.boolean;
}

std::vector<double> Config::get_number_list(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return {};
  std::vector<double> out;
  if (it->second.type == Value::Type::number) {
    out.push_back(it->second.num);
    return out;
  }
  if (it->second.type != Value::Type::list)
    throw_config("config key '" + key + "' must be a number or number list");
  for (const Value& v : it->second.list) {
    if (v.type != Value::Type::number)
      throw_config("config key '" + key + "' must contain only numbers");
    out.push_back(v.num);
  }
  return out;
}

std::vector<std::string> Config::get_string_list(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return {};
  std::vector<std::string> out;
  if (it->second.type == Value::Type::string) {
    out.push_back(it->second.str);
    return out;
  }
  if (it->second.type != Value::Type::list)
    throw_config("config key '" + key + "' must be a string or string list");
  for (const Value& v : it->second.list) {
    if (v.type != Value::Type::string)
      throw_config("config key '" + key + "' must contain only strings");
    out.push_back(v.str);
  }
  return out;
}

}  // namespace rso
