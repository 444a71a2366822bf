#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sgdlab/config.hpp"
#include "sgdlab/rng.hpp"

namespace sgdlab {

// Recipe for the eigenvalue sequence of the data covariance.
struct SpectrumModel {
  enum class Kind { identity, uniform, power_law, explicit_list };

  Kind kind = Kind::identity;
  double lower = 0.0;          // uniform(lower, upper)
  double upper = 1.0;
  double exponent = 1.0;       // power_law: lambda_i = lambda_max * i^(-exponent)
  double lambda_max = 1.0;
  std::vector<double> values;  // explicit_list

  // Eigenvalues for dimension d, nonnegative and sorted descending.
  Eigen::VectorXd eigenvalues(int d) const;

  static SpectrumModel identity();
  static SpectrumModel uniform(double lower, double upper);
  static SpectrumModel power_law(double exponent, double lambda_max);
  static SpectrumModel explicit_list(std::vector<double> values);
  static SpectrumModel parse(const std::string& kind, const std::vector<double>& params);
};

// The population regression problem: covariance spectrum (and optional
// eigenbasis), ground truth, noise level, regularizer, step-size constant.
//
// All vectors are stored in the standard basis; `truth_in_eigenbasis` is the
// ground truth rotated into the covariance eigenbasis, where the engines and
// risk formulas operate.  With the default identity eigenbasis the two frames
// coincide.
struct ProblemSpec {
  int d = 0;
  Eigen::VectorXd spectrum;        // eigenvalues of K, descending, >= 0
  Eigen::MatrixXd eigenbasis;      // orthogonal; empty means identity
  Eigen::VectorXd ground_truth;    // x-tilde, standard basis
  double noise_std = 0.0;          // eta
  double delta = 0.0;              // l2 regularizer strength
  double gamma = 1.0;              // step-size constant (step = gamma / d)
  double epsilon = 0.05;           // stopping-time exponent, in (0, 1/18)

  bool has_nontrivial_basis() const { return eigenbasis.size() > 0; }
  double operator_norm() const { return spectrum.size() > 0 ? spectrum.maxCoeff() : 0.0; }
  double trace() const { return spectrum.sum(); }

  Eigen::VectorXd truth_in_eigenbasis() const;
  Eigen::VectorXd to_eigenbasis(const Eigen::VectorXd& x) const;
  Eigen::VectorXd from_eigenbasis(const Eigen::VectorXd& x) const;

  // Dense K, for small-d oracles only.
  Eigen::MatrixXd covariance() const;

  // Hash over all defining fields; recorded in trajectory metadata and output
  // summaries so runs can be traced back to their problem.
  std::uint64_t hash() const;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

// n sampled (row, label) pairs plus the latent noise.  Construction identity:
// labels = rows * ground_truth + noise, exactly.
struct Dataset {
  Eigen::MatrixXd rows;    // n x d, row i is the i-th sample a_i (standard basis)
  Eigen::VectorXd labels;  // b
  Eigen::VectorXd noise;   // w

  Eigen::Index n() const { return rows.rows(); }
  Eigen::Index dim() const { return rows.cols(); }
};

// Builds and validates a ProblemSpec from the documented flat keys:
// dim, spectrum.kind, spectrum.params, gamma, delta, noise_std, seed,
// ground_truth (explicit comma-separated vector; otherwise a deterministic
// unit vector derived from the seed), epsilon.
ProblemSpec build_problem(const Config& config);

// Same entry point for callers that already hold typed pieces.
ProblemSpec build_problem(int d, const SpectrumModel& spectrum, double gamma, double delta,
                          double noise_std, std::uint64_t seed = 0, double epsilon = 0.05);

// Deterministic pseudo-random unit vector used as the default ground truth.
Eigen::VectorXd default_ground_truth(int d, std::uint64_t seed);

// Draws n rows a_i = sqrt(K) u_i with u_i standard Gaussian, labels
// b_i = a_i . x-tilde + w_i with w_i ~ N(0, eta^2).  Deterministic given the
// stream state.
Dataset sample_dataset(const ProblemSpec& spec, Eigen::Index n, RandomStream& rng);

// Eigendecomposition of (1/n) A^T A: eigenvalues descending, values below
// 1e-12 clamped to zero, paired with orthonormal eigenvectors (columns).
std::pair<Eigen::VectorXd, Eigen::MatrixXd> empirical_covariance(const Dataset& data);

}  // namespace sgdlab
