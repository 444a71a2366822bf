#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sgdlab/harness.hpp"

namespace {

using sgdlab::Config;

struct CommonFlags {
  std::string config_path;
  std::string out_dir = "out";
  long seed = -1;
  int threads = 1;
  std::string kernel_choice;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "flat key-value config file");
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_option("--seed", flags.seed, "master seed (overrides config)");
  cmd->add_option("--threads", flags.threads, "replica worker threads");
  cmd->add_option("--kernel-choice", flags.kernel_choice, "as_printed or swapped")
      ->check(CLI::IsMember({"as_printed", "swapped"}));
}

Config load_config(const CommonFlags& flags) {
  Config config = flags.config_path.empty() ? Config{} : Config::load(flags.config_path);
  if (flags.seed >= 0) config.set("seed", std::to_string(flags.seed));
  if (flags.threads > 1) config.set("threads", std::to_string(flags.threads));
  if (!flags.kernel_choice.empty()) config.set("kernel_choice", flags.kernel_choice);
  return config;
}

void report(const sgdlab::ExperimentResult& result, const std::string& out_dir) {
  std::printf("wrote %s/trajectories.csv and %s/summary.json\n", out_dir.c_str(), out_dir.c_str());
  std::printf("stability threshold gamma* = %.6g\n", result.threshold);
  if (result.sup_error) std::printf("sup_error = %.6g\n", *result.sup_error);
  std::printf("runtime = %.3f s\n", result.runtime_seconds);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator and risk-curve solver for high-dimensional least-squares SGD"};
  app.require_subcommand(1);

  CommonFlags sgd_flags, hsgd_flags, volterra_flags, compare_flags, scaling_flags, figure_flags;

  // simulate-sgd
  auto* sgd_cmd = app.add_subcommand("simulate-sgd", "run the exact SGD recurrence");
  add_common(sgd_cmd, sgd_flags);
  long sgd_steps = 0;
  long sgd_dataset_n = 0;
  int sgd_replicas = 1;
  std::string sgd_strategy;
  sgd_cmd->add_option("--steps", sgd_steps, "number of steps (default: from config)");
  sgd_cmd->add_option("--dataset-n", sgd_dataset_n, "dataset size; 0 streams fresh samples");
  sgd_cmd->add_option("--replicas", sgd_replicas, "independent replicas");
  sgd_cmd->add_option("--strategy", sgd_strategy,
                      "one_pass, with_replacement, single_shuffle, random_shuffle");

  // simulate-hsgd
  auto* hsgd_cmd = app.add_subcommand("simulate-hsgd", "integrate the homogenized SGD diffusion");
  add_common(hsgd_cmd, hsgd_flags);
  std::string hsgd_mode;
  double hsgd_h = 0.0, hsgd_T = 0.0;
  int hsgd_replicas = 1;
  long hsgd_dataset_n = 0;
  hsgd_cmd->add_option("--mode", hsgd_mode, "population or empirical");
  hsgd_cmd->add_option("--step-h", hsgd_h, "integrator step");
  hsgd_cmd->add_option("--T", hsgd_T, "horizon in continuum time");
  hsgd_cmd->add_option("--replicas", hsgd_replicas, "independent replicas");
  hsgd_cmd->add_option("--dataset-n", hsgd_dataset_n, "dataset size for empirical mode");

  // solve-volterra
  auto* volterra_cmd = app.add_subcommand("solve-volterra", "solve the deterministic risk equations");
  add_common(volterra_cmd, volterra_flags);
  double volterra_T = 0.0, volterra_dt = 0.0;
  volterra_cmd->add_option("--T", volterra_T, "horizon");
  volterra_cmd->add_option("--dt", volterra_dt, "grid step (default: spec-derived)");

  // compare
  auto* compare_cmd = app.add_subcommand("compare", "run sources from config and compare two of them");
  add_common(compare_cmd, compare_flags);
  std::string compare_a, compare_b, compare_stat;
  compare_cmd->add_option("--a", compare_a, "first source (mean over replicas)");
  compare_cmd->add_option("--b", compare_b, "reference source");
  compare_cmd->add_option("--statistic", compare_stat, "statistic label to compare");

  // scaling-study
  auto* scaling_cmd = app.add_subcommand("scaling-study", "fit the sup-error exponent against d");
  add_common(scaling_cmd, scaling_flags);
  std::string scaling_dims;
  int scaling_replicas = 0;
  double scaling_horizon = 0.0;
  scaling_cmd->add_option("--dims", scaling_dims, "comma-separated dimensions (>= 3)");
  scaling_cmd->add_option("--replicas", scaling_replicas, "seeds per dimension");
  scaling_cmd->add_option("--horizon", scaling_horizon, "continuum horizon t");

  // figure1
  auto* figure_cmd = app.add_subcommand(
      "figure1", "streaming vs multi-pass risk-curve comparison (packaged reproduction)");
  add_common(figure_cmd, figure_flags);
  int figure_d = 2000;
  int figure_replicas = 4;
  long figure_small_n = 0, figure_large_n = 0;
  double figure_noise = 0.1, figure_gamma = 0.4;
  figure_cmd->add_option("--d", figure_d, "dimension (default 2000)");
  figure_cmd->add_option("--replicas", figure_replicas, "replicas per plotted mean");
  figure_cmd->add_option("--small-n", figure_small_n, "small dataset size (default d/2)");
  figure_cmd->add_option("--large-n", figure_large_n, "large dataset size (default 8d)");
  figure_cmd->add_option("--noise-std", figure_noise, "label noise std");
  figure_cmd->add_option("--gamma", figure_gamma, "step-size constant");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sgd_cmd->parsed()) {
      Config config = load_config(sgd_flags);
      config.set("sgd.enabled", "true");
      if (sgd_steps > 0) config.set("sgd.steps", std::to_string(sgd_steps));
      if (sgd_dataset_n > 0) config.set("sgd.dataset_n", std::to_string(sgd_dataset_n));
      if (sgd_replicas > 1) config.set("sgd.replicas", std::to_string(sgd_replicas));
      if (!sgd_strategy.empty()) config.set("sgd.strategy", sgd_strategy);
      report(sgdlab::run_experiment(config, sgd_flags.out_dir), sgd_flags.out_dir);
    } else if (hsgd_cmd->parsed()) {
      Config config = load_config(hsgd_flags);
      config.set("hsgd.enabled", "true");
      if (!hsgd_mode.empty()) config.set("hsgd.mode", hsgd_mode);
      if (hsgd_h > 0) config.set("hsgd.step_h", std::to_string(hsgd_h));
      if (hsgd_T > 0) config.set("hsgd.horizon", std::to_string(hsgd_T));
      if (hsgd_replicas > 1) config.set("hsgd.replicas", std::to_string(hsgd_replicas));
      if (hsgd_dataset_n > 0) config.set("hsgd.dataset_n", std::to_string(hsgd_dataset_n));
      report(sgdlab::run_experiment(config, hsgd_flags.out_dir), hsgd_flags.out_dir);
    } else if (volterra_cmd->parsed()) {
      Config config = load_config(volterra_flags);
      config.set("volterra.enabled", "true");
      if (volterra_T > 0) config.set("volterra.horizon", std::to_string(volterra_T));
      if (volterra_dt > 0) config.set("volterra.delta_t", std::to_string(volterra_dt));
      report(sgdlab::run_experiment(config, volterra_flags.out_dir), volterra_flags.out_dir);
    } else if (compare_cmd->parsed()) {
      Config config = load_config(compare_flags);
      config.set("compare.enabled", "true");
      if (!compare_a.empty()) config.set("compare.a", compare_a);
      if (!compare_b.empty()) config.set("compare.b", compare_b);
      if (!compare_stat.empty()) config.set("compare.statistic", compare_stat);
      report(sgdlab::run_experiment(config, compare_flags.out_dir), compare_flags.out_dir);
    } else if (scaling_cmd->parsed()) {
      Config config = load_config(scaling_flags);
      if (!scaling_dims.empty()) config.set("scaling.dims", scaling_dims);
      if (scaling_replicas > 0) config.set("scaling.replicas", std::to_string(scaling_replicas));
      if (scaling_horizon > 0) config.set("scaling.horizon", std::to_string(scaling_horizon));

      sgdlab::ScalingStudyConfig study;
      for (const double v : config.get_doubles("scaling.dims")) study.dims.push_back(static_cast<int>(v));
      std::vector<double> params;
      if (config.has("spectrum.params")) params = config.get_doubles("spectrum.params");
      study.spectrum = sgdlab::SpectrumModel::parse(config.get_string("spectrum.kind", "identity"), params);
      study.gamma = config.get_double("gamma", 1.0);
      study.delta = config.get_double("delta", 0.0);
      study.noise_std = config.get_double("noise_std", 0.3);
      study.horizon_t = config.get_double("scaling.horizon", 2.0);
      study.replicas = static_cast<int>(config.get_int("scaling.replicas", 20));
      study.master_seed = static_cast<std::uint64_t>(config.get_int("seed", 0));
      study.threads = static_cast<int>(config.get_int("threads", 1));
      study.kernel_choice = sgdlab::parse_kernel_choice(
          config.get_string("kernel_choice", sgdlab::kernel_choice_name(sgdlab::kDefaultKernelChoice)));

      const sgdlab::ScalingStudyResult result = sgdlab::scaling_study(study);
      std::printf("d, median_sup_error\n");
      for (std::size_t i = 0; i < result.dims.size(); ++i) {
        std::printf("%d, %.6g\n", result.dims[i], result.median_sup_errors[i]);
      }
      std::printf("fitted exponent = %.4f\n", result.exponent);
    } else if (figure_cmd->parsed()) {
      Config config = load_config(figure_flags);
      sgdlab::FigureConfig figure;
      figure.d = figure_d;
      figure.replicas = figure_replicas;
      figure.small_n = figure_small_n;
      figure.large_n = figure_large_n;
      figure.noise_std = figure_noise;
      figure.gamma = figure_gamma;
      figure.master_seed = static_cast<std::uint64_t>(config.get_int("seed", 1));
      figure.threads = static_cast<int>(config.get_int("threads", 1));
      if (config.has("kernel_choice")) {
        figure.kernel_choice = sgdlab::parse_kernel_choice(config.get_string("kernel_choice"));
      }
      sgdlab::run_figure(figure, figure_flags.out_dir);
      std::printf("wrote figure curve families under %s\n", figure_flags.out_dir.c_str());
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
