#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sgdlab {

// Flat key-value configuration text.  One `key = value` pair per line,
// `#` starts a comment, whitespace around keys and values is ignored.
class Config {
 public:
  Config() = default;

  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;  // comma-separated

  void set(const std::string& key, const std::string& value);

  // Canonical text form (sorted keys), used for hashing and round-trips.
  std::string canonical_text() const;
  std::uint64_t hash() const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace sgdlab
