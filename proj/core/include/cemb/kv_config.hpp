#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace cemb {

/// Plain-text `key = value` file. Blank lines and `#` comments are ignored;
/// lists are comma-separated. Typed getters throw ConfigError on malformed
/// values, and `reject_unused` flags keys nobody asked for (usually typos).
class KvConfig {
 public:
  static KvConfig parse(std::istream& in, const std::string& source = "<stream>");
  static KvConfig load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> raw(const std::string& key) const;

  double real(const std::string& key, double fallback) const;
  std::size_t size(const std::string& key, std::size_t fallback) const;
  std::uint64_t u64(const std::string& key, std::uint64_t fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::vector<double> reals(const std::string& key, std::vector<double> fallback) const;
  std::vector<std::size_t> sizes(const std::string& key, std::vector<std::size_t> fallback) const;

  void set(const std::string& key, std::string value);
  /// Throws ConfigError naming the first key never read through a getter.
  void reject_unused() const;
  /// Sorted `key = value` lines.
  void write(std::ostream& out) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::string source_;
  mutable std::set<std::string> used_;
};

}  // namespace cemb
