#include "sgdlab/hsgd.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <Eigen/Dense>

namespace sgdlab {

double default_hsgd_step(const ProblemSpec& spec) {
  const double scale = spec.gamma * (spec.operator_norm() + spec.delta);
  return scale > 0 ? std::min(0.01, 0.1 / scale) : 0.01;
}

EmpiricalModel EmpiricalModel::build(const ProblemSpec& spec, const Dataset& data) {
  if (data.dim() != spec.d) throw std::invalid_argument("EmpiricalModel: dimension mismatch");
  const auto n = static_cast<double>(data.n());

  Eigen::MatrixXd rotated;
  if (spec.has_nontrivial_basis()) rotated = data.rows * spec.eigenbasis;
  const Eigen::MatrixXd& rows_eig = spec.has_nontrivial_basis() ? rotated : data.rows;

  EmpiricalModel model;
  model.d = spec.d;
  model.delta = spec.delta;
  model.offset = data.labels.squaredNorm() / (2.0 * n);
  model.linear = rows_eig.transpose() * data.labels / n;

  const Eigen::MatrixXd cov = rows_eig.transpose() * rows_eig / n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw std::runtime_error("EmpiricalModel: eigensolve failed");
  model.mu.resize(spec.d);
  model.basis.resize(spec.d, spec.d);
  for (int i = 0; i < spec.d; ++i) {
    double v = solver.eigenvalues()[spec.d - 1 - i];
    if (v < 1e-12) v = 0.0;
    model.mu[i] = v;
    model.basis.col(i) = solver.eigenvectors().col(spec.d - 1 - i);
  }
  return model;
}

double EmpiricalModel::risk(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd y = basis.transpose() * x;
  const double value = 0.5 * mu.cwiseProduct(y).dot(y) - linear.dot(x) + offset;
  return value > 0 ? value : 0.0;
}

Eigen::VectorXd EmpiricalModel::regularized_gradient(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd y = basis.transpose() * x;
  return basis * mu.cwiseProduct(y) - linear + delta * x;
}

DiffusionFactor diffusion_factor(const ProblemSpec& spec, const Eigen::VectorXd& x) {
  const double risk = std::max(0.0, population_risk(spec, x));
  DiffusionFactor factor;
  factor.scale = spec.gamma * std::sqrt(2.0 * risk / spec.d);
  factor.sqrt_cov_diag = spec.spectrum.cwiseSqrt();
  return factor;
}

DiffusionFactor diffusion_factor(const ProblemSpec& spec, const EmpiricalModel& empirical,
                                 const Eigen::VectorXd& x_eig) {
  DiffusionFactor factor;
  factor.scale = spec.gamma * std::sqrt(2.0 * empirical.risk(x_eig) / spec.d);
  factor.sqrt_cov_diag = empirical.mu.cwiseSqrt();
  return factor;
}

namespace {

// Population-mode step in the eigenbasis frame, where K and its square root
// are diagonal and the Gaussian increment enters coordinatewise.
template <class NoiseFn>
void population_step_impl(const ProblemSpec& spec, const Eigen::VectorXd& truth_eig,
                          Eigen::VectorXd& x, double h, double diffusion_scale, NoiseFn&& noise) {
  const double gamma = spec.gamma;
  double quad = 0.0;
  for (int i = 0; i < spec.d; ++i) {
    const double diff = x[i] - truth_eig[i];
    quad += spec.spectrum[i] * diff * diff;
  }
  const double risk = 0.5 * quad + 0.5 * spec.noise_std * spec.noise_std;
  const double scale =
      diffusion_scale * gamma * std::sqrt(std::max(0.0, 2.0 * risk / spec.d) * h);
  for (int i = 0; i < spec.d; ++i) {
    const double drift = spec.spectrum[i] * (x[i] - truth_eig[i]) + spec.delta * x[i];
    x[i] -= gamma * h * drift;
    if (scale > 0) x[i] += scale * std::sqrt(spec.spectrum[i]) * noise(i);
  }
}

void population_step_inplace(const ProblemSpec& spec, const Eigen::VectorXd& truth_eig,
                             Eigen::VectorXd& x, double h, double diffusion_scale,
                             RandomStream& rng) {
  population_step_impl(spec, truth_eig, x, h, diffusion_scale,
                       [&rng](int) { return rng.gaussian(); });
}

void empirical_step_inplace(const ProblemSpec& spec, const EmpiricalModel& empirical,
                            Eigen::VectorXd& x, double h, double diffusion_scale,
                            RandomStream& rng) {
  const double gamma = spec.gamma;
  const Eigen::VectorXd y = empirical.basis.transpose() * x;
  const double risk =
      std::max(0.0, 0.5 * empirical.mu.cwiseProduct(y).dot(y) - empirical.linear.dot(x) +
                        empirical.offset);
  const Eigen::VectorXd grad =
      empirical.basis * empirical.mu.cwiseProduct(y) - empirical.linear + empirical.delta * x;
  x -= gamma * h * grad;
  const double scale = diffusion_scale * gamma * std::sqrt(2.0 * risk / spec.d * h);
  if (scale > 0) {
    const Eigen::VectorXd xi = rng.gaussian_vector(spec.d);
    x += scale * (empirical.basis * empirical.mu.cwiseSqrt().cwiseProduct(xi));
  }
}

}  // namespace

Eigen::VectorXd hsgd_step(const ProblemSpec& spec, const Eigen::VectorXd& x, double h,
                          RandomStream& rng) {
  if (h <= 0) throw std::invalid_argument("hsgd_step: h must be positive");
  if (x.size() != spec.d) throw std::invalid_argument("hsgd_step: dimension mismatch");
  const Eigen::VectorXd truth_eig = spec.truth_in_eigenbasis();
  Eigen::VectorXd x_eig = spec.to_eigenbasis(x);
  population_step_inplace(spec, truth_eig, x_eig, h, 1.0, rng);
  return spec.from_eigenbasis(x_eig);
}

Eigen::VectorXd hsgd_step(const ProblemSpec& spec, const EmpiricalModel& empirical,
                          const Eigen::VectorXd& x_eig, double h, RandomStream& rng) {
  if (h <= 0) throw std::invalid_argument("hsgd_step: h must be positive");
  Eigen::VectorXd x = x_eig;
  empirical_step_inplace(spec, empirical, x, h, 1.0, rng);
  return x;
}

Eigen::VectorXd hsgd_step(const ProblemSpec& spec, const Eigen::VectorXd& x, double h,
                          const Eigen::VectorXd& unit_noise) {
  if (h <= 0) throw std::invalid_argument("hsgd_step: h must be positive");
  if (x.size() != spec.d || unit_noise.size() != spec.d) {
    throw std::invalid_argument("hsgd_step: dimension mismatch");
  }
  const Eigen::VectorXd truth_eig = spec.truth_in_eigenbasis();
  Eigen::VectorXd x_eig = spec.to_eigenbasis(x);
  population_step_impl(spec, truth_eig, x_eig, h, 1.0,
                       [&unit_noise](int i) { return unit_noise[i]; });
  return spec.from_eigenbasis(x_eig);
}

namespace {

void record_stats(Trajectory& traj, double t, const Eigen::VectorXd& x_eig,
                  const std::vector<QuadraticD>& stats) {
  traj.times.push_back(t);
  for (const auto& stat : stats) traj.values[stat.label()].push_back(stat.eval(x_eig));
}

}  // namespace

Trajectory run_hsgd(const ProblemSpec& spec, const Eigen::VectorXd& x0, const HsgdConfig& config,
                    const std::vector<QuadraticD>& stats, RandomStream& rng, const Dataset* data) {
  if (x0.size() != spec.d) throw std::invalid_argument("run_hsgd: x0 dimension mismatch");
  if (x0.norm() > 1.0 + 1e-12) {
    if (!config.allow_large_init) {
      throw std::invalid_argument("run_hsgd: ||x0|| > 1; set allow_large_init to override");
    }
    std::fprintf(stderr, "run_hsgd: warning: ||x0|| = %.3g exceeds 1\n", x0.norm());
  }
  if (config.mode == HsgdMode::empirical && data == nullptr) {
    throw std::invalid_argument("run_hsgd: empirical mode requires a dataset");
  }

  const double h = config.step_h > 0 ? config.step_h : default_hsgd_step(spec);
  if (h > config.horizon_T) throw std::invalid_argument("run_hsgd: step exceeds horizon");
  const double sanity = spec.gamma * h * (spec.operator_norm() + spec.delta);
  if (sanity > 0.1) {
    if (config.strict) {
      throw std::invalid_argument("run_hsgd: step violates gamma h (||K|| + delta) <= 0.1");
    }
    std::fprintf(stderr, "run_hsgd: warning: gamma h (||K|| + delta) = %.3g exceeds 0.1\n",
                 sanity);
  }

  const long steps = static_cast<long>(std::llround(config.horizon_T / h));
  const long stride = config.record_stride > 0 ? config.record_stride : 1;

  std::optional<EmpiricalModel> empirical;
  if (config.mode == HsgdMode::empirical) empirical = EmpiricalModel::build(spec, *data);

  Trajectory traj;
  traj.source = Source::hsgd;
  traj.replica = config.replica;
  traj.meta = {spec.hash(), rng.seed(), spec.gamma, stride};

  const Eigen::VectorXd truth_eig = spec.truth_in_eigenbasis();
  Eigen::VectorXd x = spec.to_eigenbasis(x0);
  record_stats(traj, 0.0, x, stats);

  for (long k = 1; k <= steps; ++k) {
    if (config.mode == HsgdMode::population) {
      population_step_inplace(spec, truth_eig, x, h, config.diffusion_scale, rng);
    } else {
      empirical_step_inplace(spec, *empirical, x, h, config.diffusion_scale, rng);
    }
    if (k % stride == 0 || k == steps) record_stats(traj, k * h, x, stats);
  }
  return traj;
}

NormBoundReport norm_bound_monitor(const Trajectory& traj, int d, double growth_c,
                                   double dim_exponent, std::optional<double> threshold_override) {
  const std::vector<double>& norm_sq = traj.series("norm_sq");
  NormBoundReport report;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    report.max_norm_sq = std::max(report.max_norm_sq, norm_sq[i]);
    const double threshold = threshold_override
                                 ? *threshold_override
                                 : std::exp(growth_c * traj.times[i]) *
                                       std::pow(static_cast<double>(d), dim_exponent);
    if (!report.flagged && norm_sq[i] > threshold) {
      report.flagged = true;
      report.first_flag_time = traj.times[i];
    }
  }
  return report;
}

double default_norm_bound_growth(const ProblemSpec& spec) {
  return 10.0 * (1.0 + spec.operator_norm());
}

}  // namespace sgdlab
