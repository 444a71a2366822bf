#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "sgdlab/problem.hpp"
#include "sgdlab/quadratic.hpp"
#include "sgdlab/trajectory.hpp"

namespace sgdlab {

enum class HsgdMode { population, empirical };

struct HsgdConfig {
  double step_h = 0.0;  // 0 picks default_hsgd_step(spec)
  double horizon_T = 1.0;
  HsgdMode mode = HsgdMode::population;
  long record_stride = 1;
  double diffusion_scale = 1.0;  // 0 turns the noise off (gradient-flow limit)
  bool strict = false;           // reject a step violating the integrator sanity bound
  bool allow_large_init = false;
  int replica = 0;
};

// Default Euler-Maruyama step: the drift is linear with rate gamma(||K||+delta),
// so the step keeps gamma h (||K||+delta) well below one.
double default_hsgd_step(const ProblemSpec& spec);

// Frozen view of the empirical problem for multi-pass diffusion runs: the
// eigendecomposition of (1/n) A^T A and the affine pieces of the empirical
// risk, all expressed in the covariance eigenbasis frame.
struct EmpiricalModel {
  Eigen::VectorXd mu;     // empirical eigenvalues, descending, clamped at 0
  Eigen::MatrixXd basis;  // empirical eigenvectors (columns), eigenbasis frame
  Eigen::VectorXd linear; // (1/n) A^T b, eigenbasis frame
  double offset = 0.0;    // ||b||^2 / (2n)
  double delta = 0.0;
  int d = 0;

  static EmpiricalModel build(const ProblemSpec& spec, const Dataset& data);

  // L(x) = 1/2 x^T E x - linear . x + offset, clamped at 0 against roundoff.
  double risk(const Eigen::VectorXd& x) const;
  // grad f = E x - linear + delta x
  Eigen::VectorXd regularized_gradient(const Eigen::VectorXd& x) const;
};

struct DiffusionFactor {
  double scale = 0.0;             // gamma sqrt((2/d) risk(x)), clamped at 0
  Eigen::VectorXd sqrt_cov_diag;  // sqrt of the covariance eigenvalues
};

// Population mode: risk = population risk, covariance = K.
DiffusionFactor diffusion_factor(const ProblemSpec& spec, const Eigen::VectorXd& x);
// Empirical mode: risk = empirical risk, covariance = (1/n) A^T A.
DiffusionFactor diffusion_factor(const ProblemSpec& spec, const EmpiricalModel& empirical,
                                 const Eigen::VectorXd& x_eig);

// One Euler-Maruyama step of
//   dX = -gamma grad R(X) dt + gamma sqrt((2/d) P(X) K) dB
// (population mode; the empirical overload swaps in grad f, L, and the
// empirical covariance).  x in the standard basis for the population form,
// in the eigenbasis frame for the empirical form.
Eigen::VectorXd hsgd_step(const ProblemSpec& spec, const Eigen::VectorXd& x, double h,
                          RandomStream& rng);
Eigen::VectorXd hsgd_step(const ProblemSpec& spec, const EmpiricalModel& empirical,
                          const Eigen::VectorXd& x_eig, double h, RandomStream& rng);

// Deterministic variant taking the Brownian increment directly (as unit
// normals; the step scales them by sqrt(h)).  Used for matched-increment
// refinement studies.
Eigen::VectorXd hsgd_step(const ProblemSpec& spec, const Eigen::VectorXd& x, double h,
                          const Eigen::VectorXd& unit_noise);

// Integrates the diffusion over [0, horizon_T], recording statistics at step
// multiples of record_stride (always including t = 0 and the final time).
// Empirical mode requires a dataset.
Trajectory run_hsgd(const ProblemSpec& spec, const Eigen::VectorXd& x0, const HsgdConfig& config,
                    const std::vector<QuadraticD>& stats, RandomStream& rng,
                    const Dataset* data = nullptr);

struct NormBoundReport {
  double max_norm_sq = 0.0;
  bool flagged = false;
  double first_flag_time = -1.0;
};

// Compares recorded ||X_t||^2 against exp(growth_c * t) * d^dim_exponent (or a
// flat override threshold).  Diagnostic only.
NormBoundReport norm_bound_monitor(const Trajectory& traj, int d, double growth_c,
                                   double dim_exponent,
                                   std::optional<double> threshold_override = std::nullopt);

double default_norm_bound_growth(const ProblemSpec& spec);  // 10 (1 + ||K||)

}  // namespace sgdlab
