#include "sgdlab/problem.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include <Eigen/Dense>

namespace sgdlab {

SpectrumModel SpectrumModel::identity() { return SpectrumModel{}; }

SpectrumModel SpectrumModel::uniform(double lower, double upper) {
  SpectrumModel m;
  m.kind = Kind::uniform;
  m.lower = lower;
  m.upper = upper;
  return m;
}

SpectrumModel SpectrumModel::power_law(double exponent, double lambda_max) {
  SpectrumModel m;
  m.kind = Kind::power_law;
  m.exponent = exponent;
  m.lambda_max = lambda_max;
  return m;
}

SpectrumModel SpectrumModel::explicit_list(std::vector<double> values) {
  SpectrumModel m;
  m.kind = Kind::explicit_list;
  m.values = std::move(values);
  return m;
}

SpectrumModel SpectrumModel::parse(const std::string& kind, const std::vector<double>& params) {
  if (kind == "identity") return identity();
  if (kind == "uniform") {
    if (params.size() != 2) throw std::invalid_argument("spectrum.params: uniform needs two values a,b");
    return uniform(params[0], params[1]);
  }
  if (kind == "power_law") {
    if (params.size() != 2) {
      throw std::invalid_argument("spectrum.params: power_law needs exponent,lambda_max");
    }
    return power_law(params[0], params[1]);
  }
  if (kind == "explicit") {
    if (params.empty()) throw std::invalid_argument("spectrum.params: explicit needs at least one value");
    return explicit_list(params);
  }
  throw std::invalid_argument("spectrum.kind: unknown kind '" + kind + "'");
}

Eigen::VectorXd SpectrumModel::eigenvalues(int d) const {
  if (d <= 0) throw std::invalid_argument("dim must be positive");
  Eigen::VectorXd lambda(d);
  switch (kind) {
    case Kind::identity:
      lambda.setOnes();
      break;
    case Kind::uniform: {
      if (lower < 0 || upper < lower) {
        throw std::invalid_argument("spectrum.params: uniform requires 0 <= a <= b");
      }
      // Evenly spaced across [lower, upper], descending.
      if (d == 1) {
        lambda[0] = upper;
      } else {
        for (int i = 0; i < d; ++i) lambda[i] = upper - (upper - lower) * i / (d - 1);
      }
      break;
    }
    case Kind::power_law: {
      if (lambda_max < 0) throw std::invalid_argument("spectrum.params: lambda_max must be nonnegative");
      for (int i = 0; i < d; ++i) lambda[i] = lambda_max * std::pow(i + 1.0, -exponent);
      break;
    }
    case Kind::explicit_list: {
      if (static_cast<int>(values.size()) != d) {
        throw std::invalid_argument("spectrum.params: explicit list length must equal dim");
      }
      for (int i = 0; i < d; ++i) lambda[i] = values[i];
      std::sort(lambda.begin(), lambda.end(), std::greater<double>());
      break;
    }
  }
  for (int i = 0; i < d; ++i) {
    if (lambda[i] < 0) throw std::invalid_argument("spectrum: eigenvalue must be nonnegative");
  }
  return lambda;
}

Eigen::VectorXd ProblemSpec::truth_in_eigenbasis() const {
  return has_nontrivial_basis() ? Eigen::VectorXd(eigenbasis.transpose() * ground_truth) : ground_truth;
}

Eigen::VectorXd ProblemSpec::to_eigenbasis(const Eigen::VectorXd& x) const {
  return has_nontrivial_basis() ? Eigen::VectorXd(eigenbasis.transpose() * x) : x;
}

Eigen::VectorXd ProblemSpec::from_eigenbasis(const Eigen::VectorXd& x) const {
  return has_nontrivial_basis() ? Eigen::VectorXd(eigenbasis * x) : x;
}

Eigen::MatrixXd ProblemSpec::covariance() const {
  if (!has_nontrivial_basis()) return spectrum.asDiagonal();
  return eigenbasis * spectrum.asDiagonal() * eigenbasis.transpose();
}

std::uint64_t ProblemSpec::hash() const {
  std::uint64_t h = fnv1a64(&d, sizeof(d));
  auto mix = [&h](const double* data, std::size_t count) {
    h = fnv1a64(data, count * sizeof(double), h);
  };
  mix(spectrum.data(), spectrum.size());
  if (has_nontrivial_basis()) mix(eigenbasis.data(), eigenbasis.size());
  mix(ground_truth.data(), ground_truth.size());
  mix(&noise_std, 1);
  mix(&delta, 1);
  mix(&gamma, 1);
  mix(&epsilon, 1);
  return h;
}

void ProblemSpec::validate() const {
  if (d <= 0) throw std::invalid_argument("dim must be positive");
  if (gamma <= 0) throw std::invalid_argument("gamma must be positive");
  if (delta < 0) throw std::invalid_argument("delta must be nonnegative");
  if (noise_std < 0) throw std::invalid_argument("noise_std must be nonnegative");
  if (epsilon <= 0 || epsilon >= 1.0 / 18.0) {
    throw std::invalid_argument("epsilon must lie in (0, 1/18)");
  }
  if (spectrum.size() != d) throw std::invalid_argument("spectrum length must equal dim");
  for (int i = 0; i < d; ++i) {
    if (spectrum[i] < 0) throw std::invalid_argument("spectrum: eigenvalue must be nonnegative");
    if (i > 0 && spectrum[i] > spectrum[i - 1] + 1e-14) {
      throw std::invalid_argument("spectrum must be sorted descending");
    }
  }
  if (ground_truth.size() != d) throw std::invalid_argument("ground_truth length must equal dim");
  if (ground_truth.norm() > std::pow(double(d), epsilon) + 1e-12) {
    throw std::invalid_argument("ground_truth norm exceeds d^epsilon");
  }
  if (has_nontrivial_basis()) {
    if (eigenbasis.rows() != d || eigenbasis.cols() != d) {
      throw std::invalid_argument("eigenbasis must be d x d");
    }
    // Columnwise orthonormality check.
    for (int j = 0; j < d; ++j) {
      for (int i = 0; i <= j; ++i) {
        const double dot = eigenbasis.col(i).dot(eigenbasis.col(j));
        const double expected = (i == j) ? 1.0 : 0.0;
        if (std::abs(dot - expected) > 1e-10) {
          throw std::invalid_argument("eigenbasis is not orthogonal to 1e-10");
        }
      }
    }
  }
}

Eigen::VectorXd default_ground_truth(int d, std::uint64_t seed) {
  RandomStream stream = derive_stream(seed, "ground_truth", 0);
  Eigen::VectorXd x = stream.gaussian_vector(d);
  const double norm = x.norm();
  if (norm == 0) {
    x.setZero();
    x[0] = 1.0;
    return x;
  }
  return x / norm;
}

ProblemSpec build_problem(int d, const SpectrumModel& spectrum, double gamma, double delta,
                          double noise_std, std::uint64_t seed, double epsilon) {
  if (d <= 0) throw std::invalid_argument("dim must be positive");
  ProblemSpec spec;
  spec.d = d;
  spec.spectrum = spectrum.eigenvalues(d);
  spec.ground_truth = default_ground_truth(d, seed);
  spec.noise_std = noise_std;
  spec.delta = delta;
  spec.gamma = gamma;
  spec.epsilon = epsilon;
  spec.validate();
  return spec;
}

ProblemSpec build_problem(const Config& config) {
  ProblemSpec spec;
  spec.d = static_cast<int>(config.get_int("dim"));
  if (spec.d <= 0) throw std::invalid_argument("dim must be positive");

  const std::string kind = config.get_string("spectrum.kind", "identity");
  std::vector<double> params;
  if (config.has("spectrum.params")) params = config.get_doubles("spectrum.params");
  spec.spectrum = SpectrumModel::parse(kind, params).eigenvalues(spec.d);

  spec.gamma = config.get_double("gamma", 1.0);
  spec.delta = config.get_double("delta", 0.0);
  spec.noise_std = config.get_double("noise_std", 0.0);
  spec.epsilon = config.get_double("epsilon", 0.05);

  const auto seed = static_cast<std::uint64_t>(config.get_int("seed", 0));
  if (config.has("ground_truth")) {
    const std::vector<double> raw = config.get_doubles("ground_truth");
    if (static_cast<int>(raw.size()) != spec.d) {
      throw std::invalid_argument("ground_truth length must equal dim");
    }
    spec.ground_truth = Eigen::Map<const Eigen::VectorXd>(raw.data(), spec.d);
  } else {
    spec.ground_truth = default_ground_truth(spec.d, seed);
  }

  spec.validate();
  return spec;
}

Dataset sample_dataset(const ProblemSpec& spec, Eigen::Index n, RandomStream& rng) {
  if (n < 1) throw std::invalid_argument("sample_dataset: n must be >= 1");
  const int d = spec.d;
  const Eigen::VectorXd sqrt_lambda = spec.spectrum.cwiseSqrt();

  Dataset data;
  data.rows.resize(n, d);
  data.noise.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd u = rng.gaussian_vector(d);
    u.array() *= sqrt_lambda.array();
    data.rows.row(i) = spec.from_eigenbasis(u).transpose();
    data.noise[i] = spec.noise_std > 0 ? spec.noise_std * rng.gaussian() : 0.0;
  }
  data.labels = data.rows * spec.ground_truth + data.noise;
  return data;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> empirical_covariance(const Dataset& data) {
  const Eigen::Index n = data.n();
  const Eigen::Index d = data.dim();
  Eigen::MatrixXd cov = (data.rows.transpose() * data.rows) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw std::runtime_error("empirical_covariance: eigensolve failed");

  // Eigen returns ascending order; flip to descending and clamp tiny values.
  Eigen::VectorXd values(d);
  Eigen::MatrixXd vectors(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    double v = solver.eigenvalues()[d - 1 - i];
    if (v < 1e-12) v = 0.0;
    values[i] = v;
    vectors.col(i) = solver.eigenvectors().col(d - 1 - i);
  }
  return {values, vectors};
}

}  // namespace sgdlab
