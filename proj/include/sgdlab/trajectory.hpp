#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sgdlab {

enum class Source { sgd, hsgd, volterra, gradient_flow };

std::string source_name(Source source);

// Time-stamped values of recorded statistics along one path.  Times are in
// continuum units (t = k/d for SGD) and strictly increasing; every value
// sequence has the same length as `times`.
struct Trajectory {
  std::vector<double> times;
  std::map<std::string, std::vector<double>> values;
  Source source = Source::sgd;
  int replica = 0;

  struct Meta {
    std::uint64_t spec_hash = 0;
    std::uint64_t seed = 0;
    double gamma = 0.0;
    long stride = 1;
  } meta;

  std::size_t size() const { return times.size(); }
  const std::vector<double>& series(const std::string& label) const;
  bool has_series(const std::string& label) const { return values.count(label) > 0; }

  // Linear interpolation of one series; clamps outside the recorded range.
  double interpolate(const std::string& label, double t) const;
};

}  // namespace sgdlab
