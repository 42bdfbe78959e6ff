#pragma once

#include <map>
#include <string>
#include <vector>

namespace recbf {

// Flat dotted-key configuration. Typed getters record the value actually
// used (given or default), so serialize() emits a complete effective config
// whose re-run reproduces the original bit for bit. Keys that were loaded
// but never consumed are rejected by require_all_consumed().
class Config {
 public:
  Config() = default;
  static Config from_file(const std::string& path);

  void set_raw(const std::string& key, const std::string& value);
  void apply_override(const std::string& key_equals_value);

  double get_double(const std::string& key, double fallback);
  int get_int(const std::string& key, int fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::string get_string(const std::string& key, const std::string& fallback);
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback);

  bool has(const std::string& key) const;
  void require_all_consumed() const;

  std::string serialize() const;
  void write(const std::string& path) const;

 private:
  const std::string* raw_of(const std::string& key);

  std::map<std::string, std::string> raw_;
  std::map<std::string, bool> consumed_;
  std::map<std::string, std::string> effective_;
};

}  // namespace recbf
