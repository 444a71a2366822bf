#include "sgdlab/volterra.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "sgdlab/quadratic.hpp"

namespace sgdlab {

KernelMatrix psi_kernel_matrix(KernelChoice choice) {
  return choice == KernelChoice::as_printed ? KernelMatrix::hess_regularized
                                            : KernelMatrix::hess_population;
}

KernelMatrix omega_kernel_matrix(KernelChoice choice) {
  return choice == KernelChoice::as_printed ? KernelMatrix::hess_population
                                            : KernelMatrix::hess_regularized;
}

namespace {

double interpolate_grid(const Eigen::VectorXd& grid, const Eigen::VectorXd& values, double t) {
  const Eigen::Index n = grid.size();
  if (n == 0) throw std::runtime_error("VolterraSolution: empty grid");
  if (t <= grid[0]) return values[0];
  if (t >= grid[n - 1]) return values[n - 1];
  const double dt = grid[1] - grid[0];
  const auto j = static_cast<Eigen::Index>(std::floor((t - grid[0]) / dt));
  const Eigen::Index lo = std::min(j, n - 2);
  const double w = (t - grid[lo]) / dt;
  return (1.0 - w) * values[lo] + w * values[lo + 1];
}

}  // namespace

double VolterraSolution::psi_at(double t) const { return interpolate_grid(grid, psi, t); }
double VolterraSolution::omega_at(double t) const { return interpolate_grid(grid, omega, t); }

Eigen::VectorXd gradient_flow(const ProblemSpec& spec, const Eigen::VectorXd& x0, double t) {
  if (t < 0) throw std::invalid_argument("gradient_flow: t must be nonnegative");
  if (x0.size() != spec.d) throw std::invalid_argument("gradient_flow: dimension mismatch");
  if (t == 0) return x0;
  const Eigen::VectorXd truth = spec.truth_in_eigenbasis();
  Eigen::VectorXd v = spec.to_eigenbasis(x0) - truth;
  for (int i = 0; i < spec.d; ++i) {
    const double mu = spec.spectrum[i] + spec.delta;
    const double decay = std::exp(-spec.gamma * t * mu);
    double drift = 0.0;
    if (mu > 0) drift = (decay - 1.0) * spec.delta * truth[i] / mu;
    v[i] = decay * v[i] + drift;
  }
  return spec.from_eigenbasis(v + truth);
}

std::pair<double, double> forcing(const ProblemSpec& spec, const Eigen::VectorXd& x0, double t) {
  const Eigen::VectorXd x = gradient_flow(spec, x0, t);
  return {population_risk(spec, x), regularized_risk(spec, x)};
}

double kernel(const ProblemSpec& spec, KernelMatrix m, double t) {
  if (t < 0) throw std::invalid_argument("kernel: t must be nonnegative");
  const double g = spec.gamma;
  double sum = 0.0;
  for (int i = 0; i < spec.d; ++i) {
    const double lambda = spec.spectrum[i];
    const double mi = (m == KernelMatrix::hess_regularized) ? lambda + spec.delta : lambda;
    sum += lambda * mi * std::exp(-2.0 * g * t * (lambda + spec.delta));
  }
  return g * g / spec.d * sum;
}

double kernel_total_integral(const ProblemSpec& spec, KernelMatrix m, double gamma) {
  double sum = 0.0;
  for (int i = 0; i < spec.d; ++i) {
    const double lambda = spec.spectrum[i];
    if (lambda == 0.0) continue;  // zero contribution regardless of m
    const double mi = (m == KernelMatrix::hess_regularized) ? lambda + spec.delta : lambda;
    sum += lambda * mi / (lambda + spec.delta);
  }
  return gamma / (2.0 * spec.d) * sum;
}

namespace {

// Romberg integration of f on [a, b]; the kernel is analytic, so the
// extrapolation converges in a handful of levels.
double romberg(const std::function<double(double)>& f, double a, double b, double abs_tol) {
  constexpr int kMaxLevels = 14;
  double table[kMaxLevels][kMaxLevels];
  double h = b - a;
  table[0][0] = 0.5 * h * (f(a) + f(b));
  long panels = 1;
  for (int level = 1; level < kMaxLevels; ++level) {
    h *= 0.5;
    panels *= 2;
    double sum = 0.0;
    for (long j = 1; j < panels; j += 2) sum += f(a + j * h);
    table[level][0] = 0.5 * table[level - 1][0] + h * sum;
    double factor = 1.0;
    for (int k = 1; k <= level; ++k) {
      factor *= 4.0;
      table[level][k] =
          (factor * table[level][k - 1] - table[level - 1][k - 1]) / (factor - 1.0);
    }
    if (level >= 3 && std::abs(table[level][level] - table[level - 1][level - 1]) < abs_tol) {
      return table[level][level];
    }
  }
  return table[kMaxLevels - 1][kMaxLevels - 1];
}

}  // namespace

double kernel_total_integral_quadrature(const ProblemSpec& spec, KernelMatrix m, double gamma) {
  ProblemSpec scaled = spec;
  scaled.gamma = gamma;

  // Fastest and slowest decay rates present in the kernel.  The slowest fixes
  // the upper limit (neglected tail below 1e-12); the fastest fixes the width
  // of the first integration panel.
  double slowest = std::numeric_limits<double>::infinity();
  double fastest = 0.0;
  for (int i = 0; i < spec.d; ++i) {
    if (spec.spectrum[i] == 0.0) continue;
    const double rate = 2.0 * gamma * (spec.spectrum[i] + spec.delta);
    slowest = std::min(slowest, rate);
    fastest = std::max(fastest, rate);
  }
  if (!std::isfinite(slowest) || fastest == 0.0) return 0.0;  // all-zero spectrum

  const double k0 = kernel(scaled, m, 0.0);
  double upper = 1.0 / slowest;
  while (k0 * std::exp(-slowest * upper) / slowest > 1e-12) upper *= 2.0;

  const auto f = [&](double t) { return kernel(scaled, m, t); };

  // Dyadic panels [0, L], [L, 2L], [2L, 4L], ... keep each Romberg pass on a
  // stretch where the integrand varies by a bounded factor even when the
  // spectrum spans several orders of magnitude.
  const double first = std::min(1.0 / fastest, upper);
  const double tol_scale = 1e-12 * std::max(1.0, k0 / fastest);
  double total = romberg(f, 0.0, first, tol_scale);
  double lo = first;
  while (lo < upper) {
    const double hi = std::min(2.0 * lo, upper);
    total += romberg(f, lo, hi, tol_scale);
    lo = hi;
  }
  return total;
}

double default_volterra_step(const ProblemSpec& spec) {
  const double scale = spec.gamma * (spec.operator_norm() + spec.delta);
  return scale > 0 ? std::min(0.01, 0.05 / scale) : 0.01;
}

VolterraSolution solve_volterra(const ProblemSpec& spec, const Eigen::VectorXd& x0, double T,
                                double delta_t, KernelChoice choice) {
  if (delta_t <= 0) throw std::invalid_argument("solve_volterra: delta_t must be positive");
  if (T < delta_t) throw std::invalid_argument("solve_volterra: T must be at least delta_t");

  const auto steps = static_cast<Eigen::Index>(std::llround(T / delta_t));
  const Eigen::Index points = steps + 1;

  VolterraSolution sol;
  sol.delta_t = delta_t;
  sol.kernel_choice = choice;
  sol.grid.resize(points);
  sol.psi.resize(points);
  sol.omega.resize(points);
  sol.forcing_psi.resize(points);
  sol.forcing_omega.resize(points);

  const KernelMatrix m_psi = psi_kernel_matrix(choice);
  const KernelMatrix m_omega = omega_kernel_matrix(choice);

  // Kernel and forcing values on the grid, computed once.
  Eigen::VectorXd k_psi(points), k_omega(points);
  for (Eigen::Index j = 0; j < points; ++j) {
    const double t = j * delta_t;
    sol.grid[j] = t;
    k_psi[j] = kernel(spec, m_psi, t);
    k_omega[j] = kernel(spec, m_omega, t);
    const auto [fp, fr] = forcing(spec, x0, t);
    sol.forcing_psi[j] = fp;
    sol.forcing_omega[j] = fr;
  }

  const double diag_coeff = 1.0 - 0.5 * delta_t * k_psi[0];
  if (diag_coeff <= 0) {
    throw std::runtime_error("solve_volterra: step too large, diagonal coefficient is not positive");
  }

  sol.psi[0] = sol.forcing_psi[0];
  sol.omega[0] = sol.forcing_omega[0];
  for (Eigen::Index j = 1; j < points; ++j) {
    double conv_psi = 0.5 * k_psi[j] * sol.psi[0];
    double conv_omega = 0.5 * k_omega[j] * sol.psi[0];
    for (Eigen::Index i = 1; i < j; ++i) {
      conv_psi += k_psi[j - i] * sol.psi[i];
      conv_omega += k_omega[j - i] * sol.psi[i];
    }
    sol.psi[j] = (sol.forcing_psi[j] + delta_t * conv_psi) / diag_coeff;
    // The Omega convolution integrates Psi, so its diagonal node is explicit.
    conv_omega += 0.5 * k_omega[0] * sol.psi[j];
    sol.omega[j] = sol.forcing_omega[j] + delta_t * conv_omega;
  }
  return sol;
}

double stability_threshold(const ProblemSpec& spec, KernelChoice choice) {
  const KernelMatrix m = psi_kernel_matrix(choice);
  if (spec.trace() <= 0) return std::numeric_limits<double>::infinity();

  // The closed form is linear in gamma, so gamma* = 1 / I(1); the bisection
  // below runs on the quadrature integral and must land in the same place.
  const double unit_integral = kernel_total_integral(spec, m, 1.0);
  if (unit_integral <= 0) return std::numeric_limits<double>::infinity();
  const double closed_form = 1.0 / unit_integral;

  const double quad_unit = kernel_total_integral_quadrature(spec, m, 1.0);
  if (std::abs(quad_unit - unit_integral) > 1e-8 * std::max(1.0, unit_integral)) {
    throw std::runtime_error("stability_threshold: closed form and quadrature integral disagree");
  }

  double lo = 0.0;
  double hi = 2.0 * closed_form;
  while (kernel_total_integral_quadrature(spec, m, hi) < 1.0) hi *= 2.0;
  for (int iter = 0; iter < 200 && (hi - lo) > 1e-12 * std::max(1.0, hi); ++iter) {
    const double mid = 0.5 * (lo + hi);
    (kernel_total_integral_quadrature(spec, m, mid) < 1.0 ? lo : hi) = mid;
  }
  const double bisected = 0.5 * (lo + hi);
  if (std::abs(bisected - closed_form) > 1e-8 * std::max(1.0, closed_form)) {
    throw std::runtime_error("stability_threshold: bisection and closed form disagree");
  }
  return closed_form;
}

LimitingRisk limiting_risk(const ProblemSpec& spec, double gamma, KernelChoice choice) {
  ProblemSpec probe = spec;
  probe.gamma = gamma;

  const double integral = kernel_total_integral(probe, psi_kernel_matrix(choice), gamma);
  if (integral >= 1.0) return LimitingRisk{0.0, true};

  // Gradient-flow limit point, coordinatewise in the eigenbasis.
  const Eigen::VectorXd truth = probe.truth_in_eigenbasis();
  double quad = 0.0;
  for (int i = 0; i < probe.d; ++i) {
    const double mu = probe.spectrum[i] + probe.delta;
    // v_i(inf) = -delta xt_i / mu for mu > 0; coordinates with mu = 0 do not
    // move, but they also carry zero risk weight (lambda_i = 0 there).
    if (mu > 0) {
      const double v_inf = -probe.delta * truth[i] / mu;
      quad += probe.spectrum[i] * v_inf * v_inf;
    }
  }
  const double forcing_inf = 0.5 * quad + 0.5 * probe.noise_std * probe.noise_std;
  return LimitingRisk{forcing_inf / (1.0 - integral), false};
}

KernelChoice parse_kernel_choice(const std::string& name) {
  if (name == "as_printed") return KernelChoice::as_printed;
  if (name == "swapped") return KernelChoice::swapped;
  throw std::invalid_argument("unknown kernel choice: " + name);
}

std::string kernel_choice_name(KernelChoice choice) {
  return choice == KernelChoice::as_printed ? "as_printed" : "swapped";
}

}  // namespace sgdlab
