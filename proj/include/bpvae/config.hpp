// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BPVAE_CONFIG_HPP
#define BPVAE_CONFIG_HPP

#include <map>
#include <string>
#include <vector>

namespace bpvae {

/// Flat key=value config file: one pair per line, '#' comments, blank
/// lines ignored, later keys win. Keys are documented in the README.
class Config {
 public:
  Config() = default;
  static Config load(const std::string& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  std::string require(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated integer list.
  std::vector<int> get_int_list(const std::string& key,
                                const std::vector<int>& fallback) const;

  void set(const std::string& key, const std::string& value) {
    values_[key] = value;
  }
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace bpvae

#endif  // BPVAE_CONFIG_HPP
