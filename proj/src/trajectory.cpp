#include "sgdlab/trajectory.hpp"

#include <algorithm>
#include <stdexcept>

namespace sgdlab {

std::string source_name(Source source) {
  switch (source) {
    case Source::sgd: return "sgd";
    case Source::hsgd: return "hsgd";
    case Source::volterra: return "volterra";
    case Source::gradient_flow: return "gradient_flow";
  }
  return "unknown";
}

const std::vector<double>& Trajectory::series(const std::string& label) const {
  const auto it = values.find(label);
  if (it == values.end()) throw std::runtime_error("trajectory has no statistic: " + label);
  if (it->second.size() != times.size()) {
    throw std::runtime_error("trajectory series length mismatch for: " + label);
  }
  return it->second;
}

double Trajectory::interpolate(const std::string& label, double t) const {
  const std::vector<double>& y = series(label);
  if (times.empty()) throw std::runtime_error("trajectory is empty");
  if (t <= times.front()) return y.front();
  if (t >= times.back()) return y.back();
  const auto upper = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t j = static_cast<std::size_t>(upper - times.begin());
  const double t0 = times[j - 1], t1 = times[j];
  const double w = (t - t0) / (t1 - t0);
  return (1.0 - w) * y[j - 1] + w * y[j];
}

}  // namespace sgdlab
