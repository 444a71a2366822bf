// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line with the measured quantities.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "sgdlab/harness.hpp"

using namespace sgdlab;

namespace {

void report(int criterion, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s (%s)\n", ok ? "PASS" : "FAIL", criterion, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  CHECK_MESSAGE(ok, "criterion ", criterion, ": ", name, " -- ", detail);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("sgdlab_acceptance_" + tag);
  std::filesystem::remove_all(dir);
  return dir.string();
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace

TEST_CASE("criterion 1: oracle equivalence of risks") {
  const Stopwatch timer;
  struct Pair {
    int d;
    SpectrumModel spectrum;
    double noise;
  };
  std::vector<Pair> pairs;
  const SpectrumModel spectra[3] = {SpectrumModel::identity(), SpectrumModel::uniform(0.3, 1.8),
                                    SpectrumModel::power_law(0.8, 1.5)};
  const double noises[3] = {0.0, 0.25, 0.6};
  for (int i = 0; i < 10; ++i) {
    pairs.push_back({4, spectra[i % 3], noises[(i / 3) % 3]});
    pairs.push_back({64, spectra[(i + 1) % 3], noises[i % 3]});
  }

  std::vector<int> ok(pairs.size(), 0);
  parallel_for_replicas(static_cast<int>(pairs.size()), 2, [&](int i) {
    const Pair& pair = pairs[i];
    const ProblemSpec spec = build_problem(pair.d, pair.spectrum, 1.0, 0.0, pair.noise, 100 + i);
    RandomStream x_rng = derive_stream(100, "acc1-state", i);
    Eigen::VectorXd x = x_rng.gaussian_vector(pair.d);
    x *= (0.5 + 0.1 * (i % 7)) / x.norm();
    RandomStream rng = derive_stream(100, "acc1-oracle", i);
    const MonteCarloEstimate est = monte_carlo_risk_oracle(spec, x, 1000000, rng);
    const double diff = std::abs(est.estimate - population_risk(spec, x));
    ok[i] = diff <= 4.0 * est.standard_error + 1e-15;
  });
  int passed = 0;
  for (const int v : ok) passed += v;
  const double elapsed = timer.seconds();
  std::ostringstream detail;
  detail << passed << "/20 pairs within 4 SE at 1e6 samples, " << elapsed << " s";
  report(1, "oracle equivalence of risks", passed == 20 && elapsed < 60.0, detail.str());
}

TEST_CASE("criterion 2: HSGD-Volterra agreement") {
  const Stopwatch timer;
  const int d = 500, replicas = 200;
  const ProblemSpec spec = build_problem(d, SpectrumModel::identity(), 1.0, 0.0, 0.3, 200);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(d);
  const auto stats = builtin_statistics(spec, {"population_risk"});

  std::vector<Trajectory> runs(replicas);
  parallel_for_replicas(replicas, 2, [&](int r) {
    HsgdConfig config;
    config.step_h = 0.005;
    config.horizon_T = 5.0;
    config.record_stride = 20;  // grid step 0.1
    config.replica = r;
    RandomStream rng = derive_stream(200, "acc2", r);
    runs[r] = run_hsgd(spec, x0, config, stats, rng);
  });

  const VolterraSolution reference = solve_volterra(spec, x0, 5.0, 0.0025);
  const std::size_t points = runs[0].times.size();
  double worst_excess = -1e9;
  bool all_ok = true;
  for (std::size_t j = 0; j < points; ++j) {
    double sum = 0.0, sum_sq = 0.0;
    for (int r = 0; r < replicas; ++r) {
      const double v = runs[r].series("population_risk")[j];
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / replicas;
    const double var = std::max(0.0, sum_sq / replicas - mean * mean);
    const double se = std::sqrt(var / replicas);
    const double err = std::abs(mean - reference.psi_at(runs[0].times[j]));
    const double tol = std::max(3.0 * se, 0.01);
    worst_excess = std::max(worst_excess, err - tol);
    if (err > tol) all_ok = false;
  }
  const double elapsed = timer.seconds();
  std::ostringstream detail;
  detail << "max(err - tol) = " << worst_excess << " over " << points << " grid points, "
         << elapsed << " s";
  report(2, "HSGD-Volterra agreement (d=500, 200 replicas)", all_ok && elapsed < 120.0,
         detail.str());
}

TEST_CASE("criterion 3: SGD-Volterra agreement at desk scale") {
  const Stopwatch timer;
  const int d = 1000, seeds = 100;
  const long n = 2000;
  const ProblemSpec spec = build_problem(d, SpectrumModel::identity(), 1.0, 0.0, 0.3, 300);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(d);
  const auto stats = builtin_statistics(spec, {"population_risk"});
  const VolterraSolution reference = solve_volterra(spec, x0, 2.0, 0.0025);

  std::vector<int> ok(seeds, 0);
  parallel_for_replicas(seeds, 2, [&](int s) {
    SgdRunOptions options;
    options.strategy = IndexStrategy::one_pass;
    options.total_steps = n;
    options.replica = s;
    RandomStream rng = derive_stream(300, "acc3", s);
    const Trajectory traj = run_sgd(spec, nullptr, options, x0, stats, rng);
    const double sup = compare_trajectories(traj, reference, "population_risk").sup_error;
    ok[s] = sup <= 0.05;
  });
  int passed = 0;
  for (const int v : ok) passed += v;
  const double elapsed = timer.seconds();
  std::ostringstream detail;
  detail << passed << "/100 seeds with sup error <= 0.05, " << elapsed << " s";
  report(3, "SGD-Volterra agreement (d=1000, n=2000)", passed >= 95 && elapsed < 120.0,
         detail.str());
}

TEST_CASE("criterion 4: scaling exponent of the sup error") {
  const Stopwatch timer;
  ScalingStudyConfig config;
  config.dims = {250, 500, 1000, 2000};
  config.spectrum = SpectrumModel::identity();
  config.gamma = 1.0;
  config.noise_std = 0.3;
  config.horizon_t = 2.0;
  config.replicas = 20;
  config.master_seed = 400;
  config.threads = 2;
  const ScalingStudyResult result = scaling_study(config);
  const double elapsed = timer.seconds();
  const bool ok = result.exponent >= -0.75 && result.exponent <= -0.25 && elapsed < 600.0;
  std::ostringstream detail;
  detail << "fitted exponent " << result.exponent << ", medians";
  for (const double med : result.median_sup_errors) detail << " " << med;
  detail << ", " << elapsed << " s";
  report(4, "scaling exponent in [-0.75, -0.25]", ok, detail.str());
}

TEST_CASE("criterion 5: stability threshold and the divergence boundary") {
  const int d = 500;
  const ProblemSpec base = build_problem(d, SpectrumModel::identity(), 1.0, 0.0, 0.3, 500);
  const double gamma_star = stability_threshold(base);
  const bool threshold_ok = std::abs(gamma_star - 2.0) <= 0.001;

  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(d);
  const long steps = 20 * d;  // t up to 20
  const int seeds = 100;

  const auto run_and_classify = [&](double gamma, std::vector<int>& exceeded) {
    ProblemSpec spec = base;
    spec.gamma = gamma;
    const auto stats = builtin_statistics(spec, {"population_risk"});
    const double initial = population_risk(spec, x0);
    parallel_for_replicas(seeds, 2, [&](int s) {
      SgdRunOptions options;
      options.strategy = IndexStrategy::one_pass;
      options.total_steps = steps;
      options.replica = s;
      RandomStream rng = derive_stream(500, "acc5-" + std::to_string(gamma), s);
      const Trajectory traj = run_sgd(spec, nullptr, options, x0, stats, rng);
      double max_risk = 0.0;
      for (const double v : traj.series("population_risk")) max_risk = std::max(max_risk, v);
      exceeded[s] = max_risk > 10.0 * initial;
    });
  };

  std::vector<int> stable_exceeded(seeds, 0), unstable_exceeded(seeds, 0);
  run_and_classify(1.8, stable_exceeded);
  run_and_classify(2.2, unstable_exceeded);
  int stable_ok = 0, unstable_ok = 0;
  for (int s = 0; s < seeds; ++s) {
    stable_ok += 1 - stable_exceeded[s];
    unstable_ok += unstable_exceeded[s];
  }
  const bool ok = threshold_ok && stable_ok >= 95 && unstable_ok >= 95;
  std::ostringstream detail;
  detail << "gamma* = " << gamma_star << ", bounded at 1.8 in " << stable_ok
         << "/100, diverged at 2.2 in " << unstable_ok << "/100";
  report(5, "stability threshold gamma* = 2 with matching simulations", ok, detail.str());
}

TEST_CASE("criterion 6: limiting risk closed form") {
  const ProblemSpec spec = build_problem(100, SpectrumModel::identity(), 1.0, 0.0, 0.5, 600);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(100);
  const VolterraSolution sol = solve_volterra(spec, x0, 50.0, 0.01);
  const double tail = sol.psi[sol.psi.size() - 1];
  const LimitingRisk limit = limiting_risk(spec, 1.0);
  const bool ok = std::abs(tail - 0.25) <= 1e-3 && !limit.diverges &&
                  std::abs(limit.value - 0.25) <= 1e-4;
  std::ostringstream detail;
  detail << "Psi(50) = " << tail << ", limiting_risk = " << limit.value << " vs 0.25";
  report(6, "limiting risk (eta^2/2)/(1 - gamma/2)", ok, detail.str());
}

TEST_CASE("criterion 7: quadrature order of the Volterra solver") {
  struct Bench {
    ProblemSpec spec;
    double T;
  };
  const std::vector<Bench> benches = {
      {build_problem(20, SpectrumModel::identity(), 1.2, 0.0, 0.3, 700), 2.0},
      {build_problem(20, SpectrumModel::uniform(0.4, 1.6), 1.0, 0.3, 0.4, 701), 2.0},
      {build_problem(50, SpectrumModel::power_law(1.0, 2.0), 0.8, 0.1, 0.2, 702), 2.0},
  };
  bool all_ok = true;
  std::ostringstream detail;
  detail << "factors:";
  for (const Bench& bench : benches) {
    const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(bench.spec.d);
    const double dt = 0.04;
    const VolterraSolution coarse = solve_volterra(bench.spec, x0, bench.T, dt);
    const VolterraSolution half = solve_volterra(bench.spec, x0, bench.T, dt / 2);
    const VolterraSolution reference = solve_volterra(bench.spec, x0, bench.T, dt / 8);
    double err_coarse = 0.0, err_half = 0.0;
    for (double t = 0.2; t <= bench.T + 1e-12; t += 0.2) {
      err_coarse = std::max(err_coarse, std::abs(coarse.psi_at(t) - reference.psi_at(t)));
      err_half = std::max(err_half, std::abs(half.psi_at(t) - reference.psi_at(t)));
    }
    const double factor = err_coarse / err_half;
    detail << " " << factor;
    if (factor < 3.0 || factor > 5.0) all_ok = false;
  }
  report(7, "halving the grid step cuts the error by a factor in [3,5]", all_ok, detail.str());
}

TEST_CASE("criterion 8: gradient-flow limit of small step sizes") {
  const int d = 500, replicas = 20;
  const ProblemSpec spec = build_problem(d, SpectrumModel::identity(), 0.01, 0.0, 0.3, 800);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(d);
  const auto stats = builtin_statistics(spec, {"population_risk"});

  std::vector<Trajectory> runs(replicas);
  parallel_for_replicas(replicas, 2, [&](int r) {
    SgdRunOptions options;
    options.strategy = IndexStrategy::one_pass;
    options.total_steps = d;  // t up to 1
    options.replica = r;
    RandomStream rng = derive_stream(800, "acc8", r);
    runs[r] = run_sgd(spec, nullptr, options, x0, stats, rng);
  });
  const Trajectory mean = mean_trajectory(runs);
  double sup = 0.0;
  for (std::size_t i = 0; i < mean.times.size(); ++i) {
    const auto [flow_risk, flow_reg] = forcing(spec, x0, mean.times[i]);
    sup = std::max(sup, std::abs(mean.series("population_risk")[i] - flow_risk));
  }
  std::ostringstream detail;
  detail << "sup |mean risk - gradient flow| = " << sup << " on t in [0,1]";
  report(8, "small-gamma SGD tracks gradient flow within 0.02", sup <= 0.02, detail.str());
}

TEST_CASE("criterion 9: streaming vs multi-pass orderings") {
  FigureConfig config;
  config.d = 500;
  const int seeds = 100;
  std::vector<int> small_ok(seeds, 0), large_ok(seeds, 0);
  parallel_for_replicas(seeds, 2, [&](int s) {
    const FigureOrderings orderings = figure_orderings(config, 900 + s);
    small_ok[s] = orderings.small_dataset_multipass_wins;
    large_ok[s] = orderings.large_dataset_streaming_wins;
  });
  int small_total = 0, large_total = 0;
  for (int s = 0; s < seeds; ++s) {
    small_total += small_ok[s];
    large_total += large_ok[s];
  }
  const bool ok = small_total >= 90 && large_total >= 90;
  std::ostringstream detail;
  detail << "multi-pass wins at n=d/2 in " << small_total
         << "/100, streaming wins at n=8d in " << large_total << "/100";
  report(9, "figure-style qualitative orderings at d=500", ok, detail.str());
}

TEST_CASE("criterion 10: packaged configs are byte-deterministic") {
  const std::vector<std::string> names = {"volterra_only", "streaming_vs_volterra", "hsgd_demo"};
  bool all_ok = true;
  std::ostringstream detail;
  for (const std::string& name : names) {
    const Config config = Config::load(std::string(SGDLAB_SOURCE_DIR) + "/configs/" + name + ".cfg");
    const std::string dir_a = temp_dir(name + "_a");
    const std::string dir_b = temp_dir(name + "_b");
    run_experiment(config, dir_a);
    run_experiment(config, dir_b);
    const bool csv_same = slurp(dir_a + "/trajectories.csv") == slurp(dir_b + "/trajectories.csv");
    const bool summary_same = slurp(dir_a + "/summary.json") == slurp(dir_b + "/summary.json");
    if (!(csv_same && summary_same)) all_ok = false;
    detail << name << (csv_same && summary_same ? " ok; " : " MISMATCH; ");
  }
  report(10, "byte-identical CSV and summary across reruns", all_ok, detail.str());
}

TEST_CASE("criterion 11: resolvent statistics against dense oracles") {
  using Complex = std::complex<double>;

  // Cauchy reconstruction at d = 8 with 64 trapezoidal nodes.
  const ProblemSpec spec8 = build_problem(8, SpectrumModel::uniform(0.2, 1.0), 1.0, 0.0, 0.0, 1100);
  const double radius = contour_radius(spec8);
  double cauchy_err = 0.0;
  for (int coord = 0; coord < 8; ++coord) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(8);
    e[coord] = 1.0;
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(8);
    for (int j = 0; j < 64; ++j) {
      const Complex zj = std::polar(radius, 2.0 * M_PI * j / 64);
      acc += resolvent_apply(spec8, zj, e) * (zj * Complex(0.0, 1.0));
    }
    acc *= Complex(0.0, 1.0) / 64.0;  // -(2 pi i)^-1 times the angular weight
    acc[coord] -= 1.0;
    cauchy_err = std::max(cauchy_err, acc.cwiseAbs().maxCoeff());
  }

  // Every statistic family against dense assembly at d = 16.
  const int d = 16;
  const ProblemSpec spec = build_problem(d, SpectrumModel::uniform(0.1, 1.7), 1.0, 0.0, 0.2, 1101);
  RandomStream rng(1102);
  Eigen::MatrixXd H(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j) H(i, j) = H(j, i) = rng.gaussian();
  }
  const QuadraticD q = QuadraticD::dense(H, rng.gaussian_vector(d), 0.4, "q");
  const Eigen::MatrixXcd K = spec.spectrum.asDiagonal().toDenseMatrix().cast<Complex>();
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(d, d);
  const Eigen::VectorXcd truth = spec.truth_in_eigenbasis().cast<Complex>();

  double family_err = 0.0;
  for (int trial = 0; trial < 12; ++trial) {
    const ContourPoint y = contour_point(spec, 0.3 + 0.5 * trial);
    const ContourPoint z = contour_point(spec, 1.7 + 0.4 * trial);
    const Eigen::MatrixXcd Ry = (K - y.value * I).inverse();
    const Eigen::MatrixXcd Rz = (K - z.value * I).inverse();
    const Eigen::VectorXd xr = rng.gaussian_vector(d);
    const Eigen::VectorXcd x = xr.cast<Complex>();
    const Eigen::VectorXcd grad = (H * xr + q.linear()).cast<Complex>();

    const Complex wants[4] = {
        grad.transpose() * Rz * x,
        grad.transpose() * Rz * truth,
        x.transpose() * Ry * H.cast<Complex>() * Rz * x,
        x.transpose() * Ry * H.cast<Complex>() * Rz * truth,
    };
    const ResolventKind kinds[4] = {ResolventKind::grad_x, ResolventKind::grad_xtilde,
                                    ResolventKind::hess_xx, ResolventKind::hess_xxtilde};
    for (int k = 0; k < 4; ++k) {
      const QuadraticC stat = make_resolvent_statistic(q, spec, kinds[k], y, z);
      family_err = std::max(family_err, std::abs(eval_at(stat, xr) - wants[k]));
    }
  }

  const bool ok = cauchy_err <= 1e-6 && family_err <= 1e-10;
  std::ostringstream detail;
  detail << "Cauchy error " << cauchy_err << ", family error " << family_err;
  report(11, "Cauchy reconstruction and dense-assembly agreement", ok, detail.str());
}
