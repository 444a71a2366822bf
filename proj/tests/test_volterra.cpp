#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "sgdlab/harness.hpp"
#include "sgdlab/hsgd.hpp"
#include "sgdlab/quadratic.hpp"
#include "sgdlab/volterra.hpp"

using namespace sgdlab;

namespace {

// Classic fixed-step fourth-order Runge-Kutta on dx/dt = f(t, x).
Eigen::VectorXd rk4(const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& f,
                    Eigen::VectorXd x, double t_end, double h) {
  double t = 0.0;
  while (t < t_end - 1e-15) {
    const double step = std::min(h, t_end - t);
    const Eigen::VectorXd k1 = f(t, x);
    const Eigen::VectorXd k2 = f(t + 0.5 * step, x + 0.5 * step * k1);
    const Eigen::VectorXd k3 = f(t + 0.5 * step, x + 0.5 * step * k2);
    const Eigen::VectorXd k4 = f(t + step, x + step * k3);
    x += step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    t += step;
  }
  return x;
}

// Dense matrix exponential by scaling and squaring of a Taylor series.
Eigen::MatrixXd expm(Eigen::MatrixXd a) {
  int squarings = 0;
  while (a.cwiseAbs().maxCoeff() > 0.25) {
    a *= 0.5;
    ++squarings;
  }
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= 24; ++k) {
    term = term * a / double(k);
    result += term;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

}  // namespace

TEST_CASE("gradient flow starts at x0 and decays exponentially for identity K") {
  const ProblemSpec spec = build_problem(4, SpectrumModel::identity(), 1.3, 0.0, 0.0, 1);
  RandomStream rng(3);
  const Eigen::VectorXd x0 = rng.gaussian_vector(4) * 0.3;
  CHECK((gradient_flow(spec, x0, 0.0) - x0).cwiseAbs().maxCoeff() == 0.0);

  const double t = 0.8;
  const Eigen::VectorXd v0 = x0 - spec.ground_truth;
  const Eigen::VectorXd vt = gradient_flow(spec, x0, t) - spec.ground_truth;
  CHECK(vt.norm() == doctest::Approx(std::exp(-spec.gamma * t) * v0.norm()).epsilon(1e-12));
}

TEST_CASE("gradient flow matches a fine-step Runge-Kutta reference") {
  ProblemSpec spec = build_problem(5, SpectrumModel::uniform(0.0, 2.0), 0.8, 0.4, 0.2, 7);
  RandomStream rng(5);
  const Eigen::VectorXd x0 = rng.gaussian_vector(5) * 0.2;

  const auto rhs = [&](double, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    // -gamma grad R(x) with K diagonal here.
    const Eigen::VectorXd v = x - spec.ground_truth;
    return -spec.gamma * (spec.spectrum.cwiseProduct(v) + spec.delta * x);
  };
  const Eigen::VectorXd reference = rk4(rhs, x0, 1.7, 1e-5);
  CHECK((gradient_flow(spec, x0, 1.7) - reference).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("forcing endpoints") {
  const ProblemSpec spec = build_problem(3, SpectrumModel::identity(), 1.0, 0.0, 0.0, 2);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(3);
  const auto [p0, r0] = forcing(spec, x0, 0.0);
  CHECK(p0 == population_risk(spec, x0));
  CHECK(r0 == regularized_risk(spec, x0));

  // ||v0|| = 1, so the population forcing is exp(-2 gamma t)/2; at large t both vanish.
  const auto [pt, rt] = forcing(spec, x0, 0.9);
  CHECK(pt == doctest::Approx(0.5 * std::exp(-2.0 * spec.gamma * 0.9)).epsilon(1e-12));
  const auto [pinf, rinf] = forcing(spec, x0, 60.0);
  CHECK(pinf < 1e-12);
  CHECK(rinf < 1e-12);
}

TEST_CASE("kernel closed forms for identity K") {
  const ProblemSpec spec = build_problem(7, SpectrumModel::identity(), 1.4, 0.0, 0.3, 2);
  for (double t : {0.0, 0.2, 1.1}) {
    const double expected = spec.gamma * spec.gamma * std::exp(-2.0 * spec.gamma * t);
    CHECK(kernel(spec, KernelMatrix::hess_regularized, t) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(kernel(spec, KernelMatrix::hess_population, t) == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("kernel at t = 0 is the trace formula") {
  const ProblemSpec spec = build_problem(3, SpectrumModel::explicit_list({2, 1, 0.5}), 0.7, 0.3, 0, 2);
  double tr_reg = 0.0, tr_pop = 0.0;
  for (int i = 0; i < 3; ++i) {
    tr_reg += spec.spectrum[i] * (spec.spectrum[i] + spec.delta);
    tr_pop += spec.spectrum[i] * spec.spectrum[i];
  }
  const double scale = spec.gamma * spec.gamma / spec.d;
  CHECK(kernel(spec, KernelMatrix::hess_regularized, 0.0) == doctest::Approx(scale * tr_reg).epsilon(1e-14));
  CHECK(kernel(spec, KernelMatrix::hess_population, 0.0) == doctest::Approx(scale * tr_pop).epsilon(1e-14));
}

TEST_CASE("kernel matches a dense matrix-exponential trace oracle in a rotated basis") {
  ProblemSpec spec = build_problem(2, SpectrumModel::explicit_list({2, 1}), 0.5, 0.1, 0.0, 3);
  const double c = std::cos(0.6), s = std::sin(0.6);
  spec.eigenbasis.resize(2, 2);
  spec.eigenbasis << c, -s, s, c;
  spec.validate();

  const double t = 0.3;
  const Eigen::MatrixXd K = spec.covariance();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
  const Eigen::MatrixXd decay = expm(-2.0 * spec.gamma * t * (K + spec.delta * I));
  const double want_reg = spec.gamma * spec.gamma / 2.0 * (K * (K + spec.delta * I) * decay).trace();
  const double want_pop = spec.gamma * spec.gamma / 2.0 * (K * K * decay).trace();
  CHECK(kernel(spec, KernelMatrix::hess_regularized, t) == doctest::Approx(want_reg).epsilon(1e-12));
  CHECK(kernel(spec, KernelMatrix::hess_population, t) == doctest::Approx(want_pop).epsilon(1e-12));
}

TEST_CASE("kernel is nonnegative") {
  const ProblemSpec spec = build_problem(6, SpectrumModel::uniform(0.0, 2.5), 1.2, 0.4, 0.1, 9);
  for (double t = 0.0; t < 4.0; t += 0.17) {
    CHECK(kernel(spec, KernelMatrix::hess_regularized, t) >= 0.0);
    CHECK(kernel(spec, KernelMatrix::hess_population, t) >= 0.0);
  }
}

TEST_CASE("zero forcing pins the solution at zero") {
  ProblemSpec spec = build_problem(4, SpectrumModel::identity(), 1.0, 0.0, 0.0, 11);
  const VolterraSolution sol = solve_volterra(spec, spec.ground_truth, 2.0, 0.01);
  CHECK(sol.psi.cwiseAbs().maxCoeff() == 0.0);
  CHECK(sol.omega.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("initial grid values equal the initial risks exactly") {
  const ProblemSpec spec = build_problem(6, SpectrumModel::uniform(0.3, 1.9), 0.9, 0.2, 0.4, 12);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(6);
  const VolterraSolution sol = solve_volterra(spec, x0, 1.0, 0.005);
  CHECK(sol.psi[0] == population_risk(spec, x0));
  CHECK(sol.omega[0] == regularized_risk(spec, x0));
}

TEST_CASE("identity-K solution matches the re-derived scalar ODE reduction") {
  // For K = I, delta = 0 the kernel is gamma^2 exp(-2 gamma t) and
  // differentiating the convolution gives Psi' = F' - 2 gamma (Psi - F) + gamma^2 Psi.
  const double gamma = 1.2, eta = 0.3;
  const ProblemSpec spec = build_problem(5, SpectrumModel::identity(), gamma, 0.0, eta, 13);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(5);
  const double v0_sq = (x0 - spec.ground_truth).squaredNorm();

  const auto forcing_f = [&](double t) {
    return 0.5 * std::exp(-2.0 * gamma * t) * v0_sq + 0.5 * eta * eta;
  };
  const auto forcing_df = [&](double t) {
    return -gamma * std::exp(-2.0 * gamma * t) * v0_sq;
  };
  const auto rhs = [&](double t, const Eigen::VectorXd& psi) -> Eigen::VectorXd {
    Eigen::VectorXd out(1);
    out[0] = forcing_df(t) - 2.0 * gamma * (psi[0] - forcing_f(t)) + gamma * gamma * psi[0];
    return out;
  };

  const VolterraSolution sol = solve_volterra(spec, x0, 3.0, 0.002);
  Eigen::VectorXd psi0(1);
  psi0[0] = forcing_f(0.0);
  for (double t : {0.5, 1.5, 3.0}) {
    const double reference = rk4(rhs, psi0, t, 1e-4)[0];
    CHECK(sol.psi_at(t) == doctest::Approx(reference).epsilon(1e-5));
  }
}

TEST_CASE("halving the grid step cuts the error by a second-order factor") {
  const ProblemSpec spec = build_problem(6, SpectrumModel::uniform(0.4, 1.6), 1.0, 0.3, 0.4, 14);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(6);
  const double T = 2.0, dt = 0.04;
  const VolterraSolution coarse = solve_volterra(spec, x0, T, dt);
  const VolterraSolution half = solve_volterra(spec, x0, T, dt / 2);
  const VolterraSolution reference = solve_volterra(spec, x0, T, dt / 8);

  double err_coarse = 0.0, err_half = 0.0;
  for (double t = 0.2; t <= T + 1e-12; t += 0.2) {
    err_coarse = std::max(err_coarse, std::abs(coarse.psi_at(t) - reference.psi_at(t)));
    err_half = std::max(err_half, std::abs(half.psi_at(t) - reference.psi_at(t)));
  }
  const double factor = err_coarse / err_half;
  CHECK(factor >= 3.0);
  CHECK(factor <= 5.0);
}

TEST_CASE("kernel pairings coincide at delta = 0") {
  const ProblemSpec spec = build_problem(5, SpectrumModel::uniform(0.3, 1.8), 1.1, 0.0, 0.3, 15);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(5);
  const VolterraSolution printed = solve_volterra(spec, x0, 2.0, 0.01, KernelChoice::as_printed);
  const VolterraSolution swapped = solve_volterra(spec, x0, 2.0, 0.01, KernelChoice::swapped);
  CHECK((printed.psi - swapped.psi).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((printed.omega - swapped.omega).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("the diffusion decides the kernel pairing at delta > 0") {
  // The printed system pairs Psi with the regularized Hessian; the swapped
  // pairing is what the diffusion's second moments actually satisfy.  Compare
  // both against a Monte Carlo mean over diffusion paths.
  const ProblemSpec spec = build_problem(60, SpectrumModel::uniform(0.5, 2.0), 0.6, 0.5, 0.4, 16);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(60);
  const double T = 3.0;

  const int replicas = 400;
  HsgdConfig config;
  config.step_h = 0.004;
  config.horizon_T = T;
  config.record_stride = 50;  // grid of 0.2
  const auto stats = builtin_statistics(spec, {"population_risk", "regularized_risk"});

  std::vector<Trajectory> runs(replicas);
  parallel_for_replicas(replicas, 2, [&](int r) {
    RandomStream rng = derive_stream(77, "kernel-decision", r);
    HsgdConfig cfg = config;
    cfg.replica = r;
    runs[r] = run_hsgd(spec, x0, cfg, stats, rng);
  });
  const Trajectory mean = mean_trajectory(runs);

  const VolterraSolution printed = solve_volterra(spec, x0, T, 0.002, KernelChoice::as_printed);
  const VolterraSolution swapped = solve_volterra(spec, x0, T, 0.002, KernelChoice::swapped);

  const double err_printed = compare_trajectories(mean, printed, "population_risk").sup_error;
  const double err_swapped = compare_trajectories(mean, swapped, "population_risk").sup_error;
  CHECK(err_swapped < err_printed);
  CHECK(err_swapped < 0.01);
  CHECK(err_printed > 3.0 * err_swapped);

  const double omega_swapped = compare_trajectories(mean, swapped, "regularized_risk").sup_error;
  CHECK(omega_swapped < 0.01);
}

TEST_CASE("monotone dependence on the noise level") {
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(5);
  ProblemSpec lo = build_problem(5, SpectrumModel::uniform(0.4, 1.5), 1.0, 0.1, 0.2, 17);
  ProblemSpec hi = lo;
  hi.noise_std = 0.4;
  const VolterraSolution sol_lo = solve_volterra(lo, x0, 3.0, 0.01);
  const VolterraSolution sol_hi = solve_volterra(hi, x0, 3.0, 0.01);
  for (Eigen::Index j = 0; j < sol_lo.grid.size(); ++j) {
    CHECK(sol_hi.psi[j] >= sol_lo.psi[j]);
  }
}

TEST_CASE("too large a step is rejected") {
  const ProblemSpec spec = build_problem(2, SpectrumModel::explicit_list({30, 20}), 5.0, 0.0, 0.0, 18);
  // K(0) = gamma^2 tr(K^2)/d = 25 * 650 = huge, so the diagonal coefficient flips sign.
  CHECK_THROWS_AS(solve_volterra(spec, Eigen::VectorXd::Zero(2), 1.0, 0.1), std::runtime_error);
}

TEST_CASE("stability threshold closed forms") {
  const ProblemSpec identity = build_problem(6, SpectrumModel::identity(), 1.0, 0.0, 0.3, 19);
  CHECK(stability_threshold(identity) == doctest::Approx(2.0).epsilon(1e-9));

  // Scaling every eigenvalue by c scales gamma* by 1/c at delta = 0.
  const ProblemSpec base = build_problem(4, SpectrumModel::uniform(0.5, 1.5), 1.0, 0.0, 0.0, 19);
  const ProblemSpec scaled =
      build_problem(4, SpectrumModel::uniform(1.5, 4.5), 1.0, 0.0, 0.0, 19);
  CHECK(stability_threshold(scaled) ==
        doctest::Approx(stability_threshold(base) / 3.0).epsilon(1e-9));

  const ProblemSpec single = build_problem(1, SpectrumModel::explicit_list({0.5}), 1.0, 0.0, 0.0, 19);
  CHECK(stability_threshold(single) == doctest::Approx(4.0).epsilon(1e-9));

  ProblemSpec zero = build_problem(3, SpectrumModel::explicit_list({0, 0, 0}), 1.0, 0.0, 0.0, 19);
  CHECK(std::isinf(stability_threshold(zero)));
}

TEST_CASE("quadrature and closed-form kernel integrals agree") {
  const ProblemSpec spec = build_problem(30, SpectrumModel::power_law(1.0, 2.0), 1.0, 0.2, 0.0, 20);
  for (const auto m : {KernelMatrix::hess_regularized, KernelMatrix::hess_population}) {
    for (const double gamma : {0.3, 1.0, 2.7}) {
      const double closed = kernel_total_integral(spec, m, gamma);
      const double quad = kernel_total_integral_quadrature(spec, m, gamma);
      CHECK(quad == doctest::Approx(closed).epsilon(1e-9));
    }
  }
}

TEST_CASE("limiting risk closed form and solver agreement") {
  const ProblemSpec noiseless = build_problem(4, SpectrumModel::identity(), 1.0, 0.0, 0.0, 21);
  const LimitingRisk zero = limiting_risk(noiseless, 1.0);
  CHECK(!zero.diverges);
  CHECK(zero.value == doctest::Approx(0.0));

  const ProblemSpec spec = build_problem(4, SpectrumModel::identity(), 1.0, 0.0, 0.5, 21);
  const LimitingRisk limit = limiting_risk(spec, 1.0);
  CHECK(!limit.diverges);
  CHECK(limit.value == doctest::Approx(0.25).epsilon(1e-12));

  const VolterraSolution sol = solve_volterra(spec, Eigen::VectorXd::Zero(4), 50.0, 0.01);
  CHECK(std::abs(sol.psi[sol.psi.size() - 1] - limit.value) < 1e-4);
}

TEST_CASE("above the threshold the risk diverges") {
  const ProblemSpec spec = build_problem(4, SpectrumModel::identity(), 1.0, 0.0, 0.3, 22);
  const double gamma_star = stability_threshold(spec);
  const LimitingRisk flagged = limiting_risk(spec, 1.1 * gamma_star);
  CHECK(flagged.diverges);

  ProblemSpec unstable = spec;
  unstable.gamma = 1.1 * gamma_star;
  const VolterraSolution sol = solve_volterra(unstable, Eigen::VectorXd::Zero(4), 30.0, 0.005);
  // Monotone growth beyond T = 20.
  double prev = 0.0;
  bool monotone = true;
  for (Eigen::Index j = 0; j < sol.grid.size(); ++j) {
    if (sol.grid[j] < 20.0) continue;
    if (sol.psi[j] <= prev) monotone = false;
    prev = sol.psi[j];
  }
  CHECK(monotone);
  CHECK(sol.psi[sol.psi.size() - 1] > 10.0 * sol.psi[0]);
}

TEST_CASE("default volterra step respects the problem scales") {
  const ProblemSpec spec = build_problem(4, SpectrumModel::explicit_list({4, 2, 1, 1}), 2.0, 1.0, 0, 23);
  CHECK(default_volterra_step(spec) == doctest::Approx(0.05 / (2.0 * 5.0)));
  const ProblemSpec mild = build_problem(4, SpectrumModel::identity(), 0.1, 0.0, 0, 23);
  CHECK(default_volterra_step(mild) == doctest::Approx(0.01));
}
