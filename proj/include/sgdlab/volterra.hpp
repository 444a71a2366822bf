#pragma once

#include <Eigen/Core>

#include "sgdlab/problem.hpp"

namespace sgdlab {

// Which Hessian enters the convolution kernel K(t; M) = (gamma^2/d) tr(K M exp(-2 gamma t (K + delta I))).
enum class KernelMatrix {
  hess_regularized,  // M = K + delta I
  hess_population,   // M = K
};

// Pairing of kernels with the (Psi, Omega) system.  `as_printed` pairs Psi
// with hess_regularized and Omega with hess_population; `swapped` exchanges
// them.  The two coincide for delta = 0.  The default is `swapped`: it is the
// pairing whose autonomous Psi equation reproduces the diffusion's
// second-moment dynamics, and the cross-check against the diffusion at
// delta > 0 (tests/test_volterra.cpp) confirms it empirically.
enum class KernelChoice { as_printed, swapped };

inline constexpr KernelChoice kDefaultKernelChoice = KernelChoice::swapped;

KernelMatrix psi_kernel_matrix(KernelChoice choice);
KernelMatrix omega_kernel_matrix(KernelChoice choice);

// Uniform-grid solution of the risk equations: psi[j] is the expected
// population risk at grid[j], omega[j] the expected regularized risk, and the
// forcing terms are the risks along gradient flow.
struct VolterraSolution {
  Eigen::VectorXd grid;
  Eigen::VectorXd psi;
  Eigen::VectorXd omega;
  Eigen::VectorXd forcing_psi;
  Eigen::VectorXd forcing_omega;
  double delta_t = 0.0;
  KernelChoice kernel_choice = kDefaultKernelChoice;

  double psi_at(double t) const;    // linear interpolation on the grid
  double omega_at(double t) const;
};

// Closed-form gradient flow on the regularized risk, run at rate gamma for
// duration t: coordinate i of v = x - xt evolves as
//   v_i(t) = exp(-gamma t (lambda_i + delta)) v_i(0)
//            + (exp(-gamma t (lambda_i + delta)) - 1) delta xt_i / (lambda_i + delta),
// with the second term zero when lambda_i + delta = 0.  x0 and the result are
// in the standard basis.
Eigen::VectorXd gradient_flow(const ProblemSpec& spec, const Eigen::VectorXd& x0, double t);

// (population risk, regularized risk) along gradient flow at grid time t.
std::pair<double, double> forcing(const ProblemSpec& spec, const Eigen::VectorXd& x0, double t);

// K(t; M) evaluated through the spectrum: (gamma^2/d) sum_i lambda_i m_i exp(-2 gamma t (lambda_i + delta)).
double kernel(const ProblemSpec& spec, KernelMatrix m, double t);

// Closed form of int_0^infty K(t; M) dt = (gamma/(2d)) sum_i lambda_i m_i / (lambda_i + delta),
// with zero-eigenvalue terms contributing zero.
double kernel_total_integral(const ProblemSpec& spec, KernelMatrix m, double gamma);

// Same integral by adaptive trapezoidal quadrature; the two are asserted to
// agree to 1e-8 inside stability_threshold.
double kernel_total_integral_quadrature(const ProblemSpec& spec, KernelMatrix m, double gamma);

// Trapezoidal solve of the coupled system with implicit diagonal node:
//   Psi(t)   = F_Psi(t)   + int_0^t K(t - s; M_Psi)   Psi(s) ds
//   Omega(t) = F_Omega(t) + int_0^t K(t - s; M_Omega) Psi(s) ds
VolterraSolution solve_volterra(const ProblemSpec& spec, const Eigen::VectorXd& x0, double T,
                                double delta_t, KernelChoice choice = kDefaultKernelChoice);

double default_volterra_step(const ProblemSpec& spec);

// Largest gamma for which the Psi kernel has total integral below one;
// infinity when the spectrum is all zero.  Computed by bisection on the
// quadrature integral and cross-checked against the closed form.
double stability_threshold(const ProblemSpec& spec, KernelChoice choice = kDefaultKernelChoice);

struct LimitingRisk {
  double value = 0.0;
  bool diverges = false;
};

// Double scaling limit of Psi: forcing at the gradient-flow limit point over
// (1 - total kernel integral).  Returns the divergence flag at or above the
// stability threshold.
LimitingRisk limiting_risk(const ProblemSpec& spec, double gamma,
                           KernelChoice choice = kDefaultKernelChoice);

KernelChoice parse_kernel_choice(const std::string& name);
std::string kernel_choice_name(KernelChoice choice);

}  // namespace sgdlab
