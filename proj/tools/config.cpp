#include "config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace exactdiff::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_number(const std::string& raw, const std::string& context) {
  char* end = nullptr;
  const double v = std::strtod(raw.c_str(), &end);
  if (end == raw.c_str() || *end != '\0') {
    throw ConfigError("config: expected a number for " + context + ", got '" + raw + "'");
  }
  return v;
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

Config Config::parse_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      // keep '#' inside quoted strings
      const auto q1 = line.find('"');
      if (q1 == std::string::npos || hash < q1) line.erase(hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config: bad section header at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config: expected key = value at line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    std::string raw = trim(line.substr(eq + 1));
    if (key.empty() || raw.empty()) throw ConfigError("config: empty key or value at line " + std::to_string(lineno));
    Value v;
    if (raw.front() == '"') {
      if (raw.size() < 2 || raw.back() != '"') {
        throw ConfigError("config: unterminated string at line " + std::to_string(lineno));
      }
      v.is_string = true;
      v.raw = raw.substr(1, raw.size() - 2);
    } else if (raw.front() == '[') {
      if (raw.back() != ']') throw ConfigError("config: unterminated array at line " + std::to_string(lineno));
      v.is_array = true;
      std::string inner = raw.substr(1, raw.size() - 2);
      std::istringstream items(inner);
      std::string item;
      while (std::getline(items, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        v.array.push_back(parse_number(item, key));
      }
      if (v.array.empty()) throw ConfigError("config: empty array for '" + key + "'");
    } else {
      v.raw = raw;
    }
    cfg.sections_[section][key] = std::move(v);
  }
  return cfg;
}

const Config::Value* Config::find(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return nullptr;
  return &k->second;
}

bool Config::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               std::optional<std::string> fallback) const {
  const Value* v = find(section, key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError("config: missing [" + section + "] " + key);
  }
  return v->raw;
}

double Config::get_number(const std::string& section, const std::string& key,
                          std::optional<double> fallback) const {
  const Value* v = find(section, key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError("config: missing [" + section + "] " + key);
  }
  if (v->is_string || v->is_array) throw ConfigError("config: [" + section + "] " + key + " must be a number");
  return parse_number(v->raw, key);
}

bool Config::get_bool(const std::string& section, const std::string& key, std::optional<bool> fallback) const {
  const Value* v = find(section, key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError("config: missing [" + section + "] " + key);
  }
  if (v->raw == "true") return true;
  if (v->raw == "false") return false;
  throw ConfigError("config: [" + section + "] " + key + " must be true or false");
}

std::vector<double> Config::get_array(const std::string& section, const std::string& key) const {
  const Value* v = find(section, key);
  if (!v) throw ConfigError("config: missing [" + section + "] " + key);
  if (!v->is_array) return {parse_number(v->raw, key)};
  return v->array;
}

std::vector<double> Config::get_number_or_list(const std::string& section, const std::string& key,
                                               std::optional<double> fallback) const {
  if (has(section, key + "_list")) return get_array(section, key + "_list");
  if (has(section, key)) return {get_number(section, key)};
  if (fallback) return {*fallback};
  throw ConfigError("config: missing [" + section + "] " + key + " (or " + key + "_list)");
}

}  // namespace exactdiff::cli
