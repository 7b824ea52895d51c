#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "msrb/common.hpp"

namespace msrb {

/// Sectioned key/value experiment configuration. Keys are addressed as
/// "section.key"; validation errors carry that path. Values accept plain
/// numbers, a/b fractions, and comma-separated lists.
class Config {
public:
  Config() = default;

  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  void set(const std::string& path, const std::string& value);
  bool has(const std::string& path) const;

  std::string get_string(const std::string& path) const;
  std::string get_string(const std::string& path, const std::string& fallback) const;
  double get_double(const std::string& path) const;
  double get_double(const std::string& path, double fallback) const;
  long get_int(const std::string& path) const;
  long get_int(const std::string& path, long fallback) const;
  bool get_bool(const std::string& path, bool fallback) const;
  std::vector<double> get_double_list(const std::string& path) const;
  std::vector<double> get_double_list(const std::string& path,
                                      const std::vector<double>& fallback) const;
  std::vector<long> get_int_list(const std::string& path) const;
  std::vector<long> get_int_list(const std::string& path,
                                 const std::vector<long>& fallback) const;

  /// Sorted, normalized rendering used for hashing and manifests.
  std::string canonical_string() const;
  std::uint64_t content_hash() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

private:
  [[noreturn]] void fail(const std::string& path, const std::string& what) const;
  std::map<std::string, std::string> values_;
};

/// Parse "0.125", "1/8", or "2pi/128" style mesh and scale entries.
double parse_number(const std::string& text, const std::string& path);

}  // namespace msrb
