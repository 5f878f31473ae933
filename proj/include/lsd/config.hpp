#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lsd {

// Flat "key = value" configuration with '#' comments. Keys are dotted paths
// by convention (e.g. model.enc_hidden); values are raw strings with typed
// accessors. Unknown keys are surfaced by check_known().
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Comma-separated list accessor, entries trimmed.
  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& fallback) const;

  // Throws InvalidConfigError naming the first key not in `known`.
  void check_known(const std::vector<std::string>& known) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace lsd
