#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sgdlab/config.hpp"
#include "sgdlab/hsgd.hpp"
#include "sgdlab/problem.hpp"
#include "sgdlab/sgd.hpp"
#include "sgdlab/trajectory.hpp"
#include "sgdlab/volterra.hpp"

namespace sgdlab {

// --- Monte Carlo risk oracle (test-side brute force, never used by engines) ---

struct MonteCarloEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
};

// Fresh-sample average of 1/2 (a . x - b)^2 with its standard error.
MonteCarloEstimate monte_carlo_risk_oracle(const ProblemSpec& spec, const Eigen::VectorXd& x,
                                           long samples, RandomStream& rng);

// --- Trajectory comparison ---

struct ComparisonReport {
  double sup_error = 0.0;
  std::vector<double> times;
  std::vector<double> errors;
  std::optional<double> fitted_exponent;
  std::vector<std::uint64_t> seeds;
};

// Per-time and sup absolute differences of the named statistic; b is
// interpolated linearly onto a's times over the overlapping range.
ComparisonReport compare_trajectories(const Trajectory& a, const Trajectory& b,
                                      const std::string& statistic);
// Volterra reference: psi backs population_risk, omega backs regularized_risk.
ComparisonReport compare_trajectories(const Trajectory& a, const VolterraSolution& b,
                                      const std::string& statistic);

// Mean of several replica trajectories sharing a common time grid.
Trajectory mean_trajectory(const std::vector<Trajectory>& replicas);

// --- Scaling study ---

struct ScalingStudyConfig {
  std::vector<int> dims;
  SpectrumModel spectrum;
  double gamma = 1.0;
  double delta = 0.0;
  double noise_std = 0.3;
  double horizon_t = 2.0;  // steps per run = horizon_t * d
  int replicas = 20;
  std::uint64_t master_seed = 1;
  int threads = 1;
  KernelChoice kernel_choice = kDefaultKernelChoice;
};

struct ScalingStudyResult {
  std::vector<int> dims;
  std::vector<double> median_sup_errors;
  double exponent = 0.0;
  std::vector<std::uint64_t> seeds;
};

// Least-squares slope of log(median sup error) against log d for one-pass SGD
// against the Volterra curve.  Refuses to run above the stability threshold.
ScalingStudyResult scaling_study(const ScalingStudyConfig& config);

// Least-squares slope of log y against log x (shared by the study and tests).
double fit_log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

// --- Replica parallelism ---

// Runs fn(0..count-1) on up to `threads` workers.  Tasks derive their own
// random streams, so scheduling order cannot affect results.
void parallel_for_replicas(int count, int threads, const std::function<void(int)>& fn);

// --- Experiment orchestration ---

struct ExperimentResult {
  std::vector<Trajectory> trajectories;
  std::optional<VolterraSolution> volterra;
  std::optional<double> sup_error;
  std::optional<double> exponent;
  double threshold = 0.0;
  std::uint64_t config_hash = 0;
  std::uint64_t spec_hash = 0;  // problem hash as built; recorded so outputs can be traced
  double runtime_seconds = 0.0;
};

// Executes the run blocks of a flat-key experiment config (see README for the
// schema), writes trajectories.csv and summary.json to out_dir, and returns
// the in-memory results.  Outputs are byte-deterministic for a fixed config.
ExperimentResult run_experiment(const Config& config, const std::string& out_dir);

// --- Output files ---

void write_trajectories_csv(const std::string& path, const std::vector<Trajectory>& trajectories);
void write_volterra_csv(const std::string& path, const VolterraSolution& solution);
void write_summary_json(const std::string& path, const ExperimentResult& result,
                        const Config& config);

// --- Figure-style streaming vs multi-pass comparison ---

// Defaults document the packaged reproduction: identity-like spectrum,
// moderate noise, and a step size comfortably below threshold so the
// large-dataset plateau separation is visible above seed noise.
struct FigureConfig {
  int d = 2000;
  double gamma = 0.4;
  double delta = 0.0;
  double noise_std = 0.1;
  long small_n = 0;          // 0 picks d/2
  long large_n = 0;          // 0 picks 8d
  double horizon_small = 10.0;  // multi-pass budget, continuum time
  double horizon_large = 25.0;
  int replicas = 4;          // per curve family, for the plotted means
  std::uint64_t master_seed = 1;
  int threads = 1;
  KernelChoice kernel_choice = kDefaultKernelChoice;
};

struct FigureOrderings {
  double multipass_small_final = 0.0;
  double streaming_small_level = 0.0;
  double multipass_large_final = 0.0;
  double streaming_large_at_equal_steps = 0.0;
  bool small_dataset_multipass_wins = false;
  bool large_dataset_streaming_wins = false;
};

// One seed's worth of the qualitative comparison: multi-pass on a small
// dataset (run past many epochs) against the streaming level at the matching
// dataset size, and multi-pass on a large dataset against streaming at the
// same step count.
FigureOrderings figure_orderings(const FigureConfig& config, std::uint64_t seed);

// Full curve families for plotting: multi-pass SGD, its homogenized (expected
// empirical-risk diffusion) mean, streaming SGD, the streaming Volterra curve,
// and streaming risk levels at a range of dataset sizes.  Writes one CSV per
// family plus summary.json under out_dir.
void run_figure(const FigureConfig& config, const std::string& out_dir);

}  // namespace sgdlab
