#include "recbf/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "recbf/csv.hpp"
#include "recbf/errors.hpp"

namespace recbf {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool valid_key(const std::string& key) {
  if (key.empty()) return false;
  for (char c : key)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '_' &&
        c != '-')
      return false;
  return true;
}

double parse_double(const std::string& key, const std::string& value) {
  const char* begin = value.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  while (end && *end != '\0' && std::isspace(static_cast<unsigned char>(*end)))
    ++end;
  if (end == begin || *end != '\0' || errno == ERANGE)
    throw ConfigError("config key " + key + ": bad number '" + value + "'");
  return v;
}

}  // namespace

Config Config::from_file(const std::string& path) {
  Config cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key))
      throw ConfigError(path + ":" + std::to_string(lineno) + ": bad key '" +
                        key + "'");
    if (cfg.raw_.count(key))
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": duplicate key '" + key + "'");
    cfg.raw_[key] = value;
  }
  return cfg;
}

void Config::set_raw(const std::string& key, const std::string& value) {
  if (!valid_key(key)) throw ConfigError("bad config key '" + key + "'");
  raw_[key] = value;
  consumed_.erase(key);
  effective_.erase(key);
}

void Config::apply_override(const std::string& key_equals_value) {
  const std::size_t eq = key_equals_value.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + key_equals_value +
                      "' is not of the form key=value");
  set_raw(trim(key_equals_value.substr(0, eq)),
          trim(key_equals_value.substr(eq + 1)));
}

const std::string* Config::raw_of(const std::string& key) {
  const auto it = raw_.find(key);
  if (it == raw_.end()) return nullptr;
  consumed_[key] = true;
  return &it->second;
}

double Config::get_double(const std::string& key, double fallback) {
  const std::string* raw = raw_of(key);
  const double v = raw ? parse_double(key, *raw) : fallback;
  effective_[key] = format_double(v);
  return v;
}

int Config::get_int(const std::string& key, int fallback) {
  const std::string* raw = raw_of(key);
  int v = fallback;
  if (raw) {
    const double d = parse_double(key, *raw);
    v = static_cast<int>(d);
    if (static_cast<double>(v) != d)
      throw ConfigError("config key " + key + ": expected an integer, got '" +
                        *raw + "'");
  }
  effective_[key] = std::to_string(v);
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) {
  const std::string* raw = raw_of(key);
  bool v = fallback;
  if (raw) {
    if (*raw == "true" || *raw == "1")
      v = true;
    else if (*raw == "false" || *raw == "0")
      v = false;
    else
      throw ConfigError("config key " + key + ": expected true/false, got '" +
                        *raw + "'");
  }
  effective_[key] = v ? "true" : "false";
  return v;
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) {
  const std::string* raw = raw_of(key);
  const std::string v = raw ? *raw : fallback;
  effective_[key] = v;
  return v;
}

std::vector<double> Config::get_doubles(const std::string& key,
                                        const std::vector<double>& fallback) {
  const std::string* raw = raw_of(key);
  std::vector<double> v;
  if (raw) {
    std::stringstream ss(*raw);
    std::string cell;
    while (std::getline(ss, cell, ','))
      v.push_back(parse_double(key, trim(cell)));
    if (v.empty())
      throw ConfigError("config key " + key + ": empty list");
  } else {
    v = fallback;
  }
  std::string canon;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) canon += ',';
    canon += format_double(v[i]);
  }
  effective_[key] = canon;
  return v;
}

bool Config::has(const std::string& key) const { return raw_.count(key) > 0; }

void Config::require_all_consumed() const {
  std::string unknown;
  for (const auto& [key, value] : raw_) {
    (void)value;
    if (!consumed_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
  }
  if (!unknown.empty()) throw ConfigError("unknown config keys: " + unknown);
}

std::string Config::serialize() const {
  std::string out;
  for (const auto& [key, value] : effective_)
    out += key + " = " + value + "\n";
  return out;
}

void Config::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << serialize();
  if (!out) throw ConfigError("write failed: " + path);
}

}  // namespace recbf
