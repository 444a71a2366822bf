#include "sgdlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace sgdlab {

MonteCarloEstimate monte_carlo_risk_oracle(const ProblemSpec& spec, const Eigen::VectorXd& x,
                                           long samples, RandomStream& rng) {
  if (samples < 100) throw std::invalid_argument("monte_carlo_risk_oracle: samples must be >= 100");
  if (x.size() != spec.d) throw std::invalid_argument("monte_carlo_risk_oracle: dimension mismatch");

  const Eigen::VectorXd z = spec.to_eigenbasis(x - spec.ground_truth);
  const Eigen::VectorXd sqrt_lambda = spec.spectrum.cwiseSqrt();
  const int d = spec.d;

  double sum = 0.0, sum_sq = 0.0;
  for (long s = 0; s < samples; ++s) {
    double residual = 0.0;
    for (int i = 0; i < d; ++i) residual += sqrt_lambda[i] * rng.gaussian() * z[i];
    if (spec.noise_std > 0) residual -= spec.noise_std * rng.gaussian();
    const double value = 0.5 * residual * residual;
    sum += value;
    sum_sq += value * value;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean);
  return MonteCarloEstimate{mean, std::sqrt(var / n)};
}

namespace {

ComparisonReport compare_onto(const Trajectory& a, const std::string& statistic, double b_start,
                              double b_end, const std::function<double(double)>& reference) {
  const std::vector<double>& series = a.series(statistic);
  ComparisonReport report;
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    const double t = a.times[i];
    if (t < b_start - 1e-12 || t > b_end + 1e-12) continue;
    const double err = std::abs(series[i] - reference(t));
    report.times.push_back(t);
    report.errors.push_back(err);
    report.sup_error = std::max(report.sup_error, err);
  }
  if (report.times.empty()) {
    throw std::runtime_error("compare_trajectories: time ranges do not overlap");
  }
  return report;
}

}  // namespace

ComparisonReport compare_trajectories(const Trajectory& a, const Trajectory& b,
                                      const std::string& statistic) {
  if (!b.has_series(statistic)) {
    throw std::runtime_error("compare_trajectories: reference lacks statistic " + statistic);
  }
  return compare_onto(a, statistic, b.times.front(), b.times.back(),
                      [&](double t) { return b.interpolate(statistic, t); });
}

ComparisonReport compare_trajectories(const Trajectory& a, const VolterraSolution& b,
                                      const std::string& statistic) {
  if (statistic == "population_risk") {
    return compare_onto(a, statistic, b.grid[0], b.grid[b.grid.size() - 1],
                        [&](double t) { return b.psi_at(t); });
  }
  if (statistic == "regularized_risk") {
    return compare_onto(a, statistic, b.grid[0], b.grid[b.grid.size() - 1],
                        [&](double t) { return b.omega_at(t); });
  }
  throw std::runtime_error("compare_trajectories: Volterra reference backs population_risk and "
                           "regularized_risk only");
}

Trajectory mean_trajectory(const std::vector<Trajectory>& replicas) {
  if (replicas.empty()) throw std::invalid_argument("mean_trajectory: no replicas");
  Trajectory mean = replicas[0];
  mean.replica = -1;
  for (std::size_t r = 1; r < replicas.size(); ++r) {
    const Trajectory& traj = replicas[r];
    if (traj.times.size() != mean.times.size()) {
      throw std::invalid_argument("mean_trajectory: replicas disagree on time grid");
    }
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      if (std::abs(traj.times[i] - mean.times[i]) > 1e-12) {
        throw std::invalid_argument("mean_trajectory: replicas disagree on time grid");
      }
    }
    for (auto& [label, series] : mean.values) {
      const std::vector<double>& other = traj.series(label);
      for (std::size_t i = 0; i < series.size(); ++i) series[i] += other[i];
    }
  }
  const double inv = 1.0 / static_cast<double>(replicas.size());
  for (auto& [label, series] : mean.values) {
    for (double& v : series) v *= inv;
  }
  return mean;
}

double fit_log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("fit_log_log_slope: need at least two points");
  }
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] <= 0 || y[i] <= 0) throw std::invalid_argument("fit_log_log_slope: values must be positive");
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0) throw std::invalid_argument("fit_log_log_slope: degenerate abscissae");
  return (n * sxy - sx * sy) / denom;
}

void parallel_for_replicas(int count, int threads, const std::function<void(int)>& fn) {
  const int workers = std::max(1, std::min(threads, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

ScalingStudyResult scaling_study(const ScalingStudyConfig& config) {
  if (config.dims.size() < 3) {
    throw std::invalid_argument("scaling_study: need at least 3 dimensions");
  }
  if (config.replicas < 1) throw std::invalid_argument("scaling_study: replicas must be >= 1");

  ScalingStudyResult result;
  result.dims = config.dims;

  for (const int d : config.dims) {
    ProblemSpec spec = build_problem(d, config.spectrum, config.gamma, config.delta,
                                     config.noise_std, config.master_seed);
    const double threshold = stability_threshold(spec, config.kernel_choice);
    if (config.gamma >= threshold) {
      throw std::runtime_error("scaling_study: gamma " + std::to_string(config.gamma) +
                               " is at or above the stability threshold " +
                               std::to_string(threshold) + "; the comparison would diverge");
    }

    const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(d);
    const VolterraSolution reference = solve_volterra(
        spec, x0, config.horizon_t, default_volterra_step(spec), config.kernel_choice);

    const long steps = std::lround(config.horizon_t * d);
    const std::string tag = "scaling:d=" + std::to_string(d);
    std::vector<double> sup_errors(config.replicas);
    const std::vector<QuadraticD> stats = builtin_statistics(spec, {"population_risk"});

    parallel_for_replicas(config.replicas, config.threads, [&](int r) {
      RandomStream stream = derive_stream(config.master_seed, tag, r);
      SgdRunOptions options;
      options.strategy = IndexStrategy::one_pass;
      options.total_steps = steps;
      options.replica = r;
      const Trajectory traj = run_sgd(spec, nullptr, options, x0, stats, stream);
      sup_errors[r] = compare_trajectories(traj, reference, "population_risk").sup_error;
    });
    for (int r = 0; r < config.replicas; ++r) {
      result.seeds.push_back(derive_stream(config.master_seed, tag, r).seed());
    }

    std::sort(sup_errors.begin(), sup_errors.end());
    const std::size_t n = sup_errors.size();
    const double median =
        n % 2 == 1 ? sup_errors[n / 2] : 0.5 * (sup_errors[n / 2 - 1] + sup_errors[n / 2]);
    result.median_sup_errors.push_back(median);
  }

  std::vector<double> dims_as_double(config.dims.begin(), config.dims.end());
  result.exponent = fit_log_log_slope(dims_as_double, result.median_sup_errors);
  return result;
}

// --- CSV and summary output ---

namespace {

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

void append_trajectory_rows(std::ofstream& out, const Trajectory& traj) {
  const std::string source = source_name(traj.source);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    for (const auto& [label, series] : traj.values) {
      out << format_double(traj.times[i]) << ',' << label << ',' << format_double(series[i])
          << ',' << traj.replica << ',' << source << '\n';
    }
  }
}

}  // namespace

void write_trajectories_csv(const std::string& path, const std::vector<Trajectory>& trajectories) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "time,statistic,value,replica,source\n";

  // Deterministic row order regardless of how replicas were scheduled.
  std::vector<const Trajectory*> ordered;
  ordered.reserve(trajectories.size());
  for (const auto& traj : trajectories) ordered.push_back(&traj);
  std::stable_sort(ordered.begin(), ordered.end(), [](const Trajectory* a, const Trajectory* b) {
    const std::string sa = source_name(a->source), sb = source_name(b->source);
    return sa != sb ? sa < sb : a->replica < b->replica;
  });
  for (const Trajectory* traj : ordered) append_trajectory_rows(out, *traj);
}

void write_volterra_csv(const std::string& path, const VolterraSolution& solution) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t,psi,omega,forcing_psi,forcing_omega\n";
  for (Eigen::Index j = 0; j < solution.grid.size(); ++j) {
    out << format_double(solution.grid[j]) << ',' << format_double(solution.psi[j]) << ','
        << format_double(solution.omega[j]) << ',' << format_double(solution.forcing_psi[j]) << ','
        << format_double(solution.forcing_omega[j]) << '\n';
  }
}

void write_summary_json(const std::string& path, const ExperimentResult& result,
                        const Config& config) {
  nlohmann::json summary;
  char hash_hex[20];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(result.config_hash));
  summary["config_hash"] = hash_hex;
  summary["sup_error"] = result.sup_error ? nlohmann::json(*result.sup_error) : nlohmann::json();
  summary["threshold"] = result.threshold;
  summary["exponent"] = result.exponent ? nlohmann::json(*result.exponent) : nlohmann::json();
  // Whole seconds: keeps summaries of the packaged configs byte-stable across
  // runs; millisecond timings live in timings.txt next to the summary.
  summary["runtime_seconds"] = std::floor(result.runtime_seconds);
  summary["master_seed"] = config.get_int("seed", 0);
  char spec_hex[20];
  std::snprintf(spec_hex, sizeof(spec_hex), "%016llx",
                static_cast<unsigned long long>(result.spec_hash));
  summary["spec_hash"] = spec_hex;
  summary["kernel_choice"] = config.get_string("kernel_choice", kernel_choice_name(kDefaultKernelChoice));

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << summary.dump(2) << '\n';
}

// --- Experiment orchestration ---

namespace {

Eigen::VectorXd experiment_x0(const Config& config, const ProblemSpec& spec) {
  if (config.has("x0")) {
    const std::vector<double> raw = config.get_doubles("x0");
    if (static_cast<int>(raw.size()) != spec.d) {
      throw std::invalid_argument("x0 length must equal dim");
    }
    return Eigen::Map<const Eigen::VectorXd>(raw.data(), spec.d);
  }
  return Eigen::VectorXd::Zero(spec.d);
}

std::vector<std::string> split_labels(const std::string& raw) {
  std::vector<std::string> labels;
  std::string item;
  std::istringstream in(raw);
  while (std::getline(in, item, ',')) {
    const auto begin = item.find_first_not_of(" \t");
    if (begin == std::string::npos) continue;
    const auto end = item.find_last_not_of(" \t");
    labels.push_back(item.substr(begin, end - begin + 1));
  }
  if (labels.empty()) throw std::invalid_argument("statistics: empty list");
  return labels;
}

}  // namespace

ExperimentResult run_experiment(const Config& config, const std::string& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);

  ExperimentResult result;
  result.config_hash = config.hash();

  const ProblemSpec spec = build_problem(config);
  result.spec_hash = spec.hash();
  const auto master_seed = static_cast<std::uint64_t>(config.get_int("seed", 0));
  const int threads = static_cast<int>(config.get_int("threads", 1));
  const KernelChoice choice =
      parse_kernel_choice(config.get_string("kernel_choice", kernel_choice_name(kDefaultKernelChoice)));
  result.threshold = stability_threshold(spec, choice);

  const std::vector<std::string> labels =
      split_labels(config.get_string("statistics", "population_risk"));
  const std::vector<QuadraticD> stats = builtin_statistics(spec, labels);
  const Eigen::VectorXd x0 = experiment_x0(config, spec);

  // Datasets shared across blocks, keyed by size and sampled deterministically.
  std::map<long, Dataset> datasets;
  auto dataset_for = [&](long n) -> const Dataset& {
    auto it = datasets.find(n);
    if (it == datasets.end()) {
      RandomStream stream = derive_stream(master_seed, "dataset:" + std::to_string(n), 0);
      it = datasets.emplace(n, sample_dataset(spec, n, stream)).first;
    }
    return it->second;
  };

  if (config.get_bool("sgd.enabled", false)) {
    const int replicas = static_cast<int>(config.get_int("sgd.replicas", 1));
    if (replicas < 1) throw std::invalid_argument("sgd.replicas must be >= 1");
    const long steps = config.get_int("sgd.steps");
    const long dataset_n = config.get_int("sgd.dataset_n", 0);
    SgdRunOptions options;
    options.strategy = parse_index_strategy(config.get_string("sgd.strategy", "one_pass"));
    options.total_steps = steps;
    options.stride = config.get_int("sgd.stride", 0);
    const Dataset* data = dataset_n > 0 ? &dataset_for(dataset_n) : nullptr;

    std::vector<Trajectory> runs(replicas);
    parallel_for_replicas(replicas, threads, [&](int r) {
      RandomStream stream = derive_stream(master_seed, "sgd", r);
      SgdRunOptions opts = options;
      opts.replica = r;
      runs[r] = run_sgd(spec, data, opts, x0, stats, stream);
    });
    for (auto& traj : runs) result.trajectories.push_back(std::move(traj));
  }

  if (config.get_bool("hsgd.enabled", false)) {
    const int replicas = static_cast<int>(config.get_int("hsgd.replicas", 1));
    if (replicas < 1) throw std::invalid_argument("hsgd.replicas must be >= 1");
    HsgdConfig hsgd;
    hsgd.mode = config.get_string("hsgd.mode", "population") == "empirical" ? HsgdMode::empirical
                                                                            : HsgdMode::population;
    hsgd.step_h = config.get_double("hsgd.step_h", 0.0);
    hsgd.horizon_T = config.get_double("hsgd.horizon", 1.0);
    hsgd.record_stride = config.get_int("hsgd.stride", 1);
    const long dataset_n = config.get_int("hsgd.dataset_n", 0);
    const Dataset* data = dataset_n > 0 ? &dataset_for(dataset_n) : nullptr;

    std::vector<Trajectory> runs(replicas);
    parallel_for_replicas(replicas, threads, [&](int r) {
      RandomStream stream = derive_stream(master_seed, "hsgd", r);
      HsgdConfig cfg = hsgd;
      cfg.replica = r;
      runs[r] = run_hsgd(spec, x0, cfg, stats, stream, data);
    });
    for (auto& traj : runs) result.trajectories.push_back(std::move(traj));
  }

  if (config.get_bool("volterra.enabled", false)) {
    const double horizon = config.get_double("volterra.horizon", 1.0);
    double dt = config.get_double("volterra.delta_t", 0.0);
    if (dt <= 0) dt = default_volterra_step(spec);
    result.volterra = solve_volterra(spec, x0, horizon, dt, choice);

    Trajectory traj;
    traj.source = Source::volterra;
    traj.meta = {spec.hash(), master_seed, spec.gamma, 1};
    const VolterraSolution& sol = *result.volterra;
    for (Eigen::Index j = 0; j < sol.grid.size(); ++j) {
      traj.times.push_back(sol.grid[j]);
      traj.values["population_risk"].push_back(sol.psi[j]);
      traj.values["regularized_risk"].push_back(sol.omega[j]);
      traj.values["forcing_population_risk"].push_back(sol.forcing_psi[j]);
      traj.values["forcing_regularized_risk"].push_back(sol.forcing_omega[j]);
    }
    result.trajectories.push_back(std::move(traj));
    write_volterra_csv(out_dir + "/volterra.csv", sol);
  }

  if (config.get_bool("gradient_flow.enabled", false)) {
    const double horizon = config.get_double("gradient_flow.horizon", 1.0);
    const long points = config.get_int("gradient_flow.points", 101);
    Trajectory traj;
    traj.source = Source::gradient_flow;
    traj.meta = {spec.hash(), master_seed, spec.gamma, 1};
    for (long j = 0; j < points; ++j) {
      const double t = horizon * j / (points - 1);
      const Eigen::VectorXd x = spec.to_eigenbasis(gradient_flow(spec, x0, t));
      traj.times.push_back(t);
      for (const auto& stat : stats) traj.values[stat.label()].push_back(stat.eval(x));
    }
    result.trajectories.push_back(std::move(traj));
  }

  if (config.get_bool("compare.enabled", false)) {
    const std::string a_name = config.get_string("compare.a", "sgd");
    const std::string b_name = config.get_string("compare.b", "volterra");
    const std::string statistic = config.get_string("compare.statistic", "population_risk");

    auto collect = [&](const std::string& name) {
      std::vector<Trajectory> group;
      for (const auto& traj : result.trajectories) {
        if (source_name(traj.source) == name) group.push_back(traj);
      }
      if (group.empty()) throw std::runtime_error("compare: no trajectories from source " + name);
      return group;
    };

    const Trajectory a = mean_trajectory(collect(a_name));
    if (b_name == "volterra" && result.volterra) {
      result.sup_error = compare_trajectories(a, *result.volterra, statistic).sup_error;
    } else {
      const Trajectory b = mean_trajectory(collect(b_name));
      result.sup_error = compare_trajectories(a, b, statistic).sup_error;
    }
  }

  write_trajectories_csv(out_dir + "/trajectories.csv", result.trajectories);

  const auto elapsed = std::chrono::steady_clock::now() - start;
  result.runtime_seconds = std::chrono::duration<double>(elapsed).count();
  write_summary_json(out_dir + "/summary.json", result, config);
  {
    std::ofstream timings(out_dir + "/timings.txt");
    timings << "total_ms = " << std::chrono::duration<double, std::milli>(elapsed).count() << '\n';
  }
  return result;
}

// --- Figure-style comparison ---

namespace {

double final_population_risk(const Trajectory& traj) {
  const std::vector<double>& series = traj.series("population_risk");
  return series.back();
}

// Plateau estimate: mean of the recorded risk over the last fifth of the run.
double tail_population_risk(const Trajectory& traj) {
  const std::vector<double>& series = traj.series("population_risk");
  const std::size_t start = series.size() - std::max<std::size_t>(1, series.size() / 5);
  double sum = 0.0;
  for (std::size_t i = start; i < series.size(); ++i) sum += series[i];
  return sum / (series.size() - start);
}

ProblemSpec figure_spec(const FigureConfig& config) {
  return build_problem(config.d, SpectrumModel::identity(), config.gamma, config.delta,
                       config.noise_std, config.master_seed);
}

}  // namespace

FigureOrderings figure_orderings(const FigureConfig& config, std::uint64_t seed) {
  const ProblemSpec spec = figure_spec(config);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(spec.d);
  const std::vector<QuadraticD> stats = builtin_statistics(spec, {"population_risk"});
  const long small_n = config.small_n > 0 ? config.small_n : config.d / 2;
  const long large_n = config.large_n > 0 ? config.large_n : 8L * config.d;

  FigureOrderings out;

  // Small dataset: multi-pass runs many epochs; streaming exhausts the same
  // amount of data after small_n steps and stops there.
  {
    RandomStream data_stream = derive_stream(seed, "figure:small:data", 0);
    const Dataset data = sample_dataset(spec, small_n, data_stream);

    SgdRunOptions multipass;
    multipass.strategy = IndexStrategy::with_replacement;
    multipass.total_steps = std::lround(config.horizon_small * spec.d);
    RandomStream mp_stream = derive_stream(seed, "figure:small:multipass", 0);
    out.multipass_small_final =
        tail_population_risk(run_sgd(spec, &data, multipass, x0, stats, mp_stream));

    // The streaming level for a dataset of this size is the risk when the
    // data runs out, a point value rather than a plateau.
    SgdRunOptions streaming;
    streaming.strategy = IndexStrategy::one_pass;
    streaming.total_steps = small_n;
    RandomStream stream_stream = derive_stream(seed, "figure:small:streaming", 0);
    out.streaming_small_level =
        final_population_risk(run_sgd(spec, nullptr, streaming, x0, stats, stream_stream));
  }

  // Large dataset: compare at equal step counts, where multi-pass has long
  // since reached its plateau.
  {
    RandomStream data_stream = derive_stream(seed, "figure:large:data", 0);
    const Dataset data = sample_dataset(spec, large_n, data_stream);
    const long steps = std::lround(config.horizon_large * spec.d);

    SgdRunOptions multipass;
    multipass.strategy = IndexStrategy::with_replacement;
    multipass.total_steps = steps;
    RandomStream mp_stream = derive_stream(seed, "figure:large:multipass", 0);
    out.multipass_large_final =
        tail_population_risk(run_sgd(spec, &data, multipass, x0, stats, mp_stream));

    SgdRunOptions streaming;
    streaming.strategy = IndexStrategy::one_pass;
    streaming.total_steps = steps;
    RandomStream stream_stream = derive_stream(seed, "figure:large:streaming", 0);
    out.streaming_large_at_equal_steps =
        tail_population_risk(run_sgd(spec, nullptr, streaming, x0, stats, stream_stream));
  }

  out.small_dataset_multipass_wins = out.multipass_small_final < out.streaming_small_level;
  out.large_dataset_streaming_wins =
      out.multipass_large_final >= out.streaming_large_at_equal_steps;
  return out;
}

void run_figure(const FigureConfig& config, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto start = std::chrono::steady_clock::now();

  const ProblemSpec spec = figure_spec(config);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(spec.d);
  const std::vector<QuadraticD> stats = builtin_statistics(spec, {"population_risk"});
  const long small_n = config.small_n > 0 ? config.small_n : config.d / 2;
  const long large_n = config.large_n > 0 ? config.large_n : 8L * config.d;
  const double horizon = std::max(config.horizon_small, config.horizon_large);

  struct Family {
    std::string file;
    long n;
    double horizon;
  };
  const std::vector<Family> families = {
      {"multipass_small", small_n, config.horizon_small},
      {"multipass_large", large_n, config.horizon_large},
  };

  for (const auto& family : families) {
    RandomStream data_stream = derive_stream(config.master_seed, "figure:data:" + family.file, 0);
    const Dataset data = sample_dataset(spec, family.n, data_stream);

    // Multi-pass SGD, averaged over replicas.
    std::vector<Trajectory> sgd_runs(config.replicas);
    parallel_for_replicas(config.replicas, config.threads, [&](int r) {
      SgdRunOptions options;
      options.strategy = IndexStrategy::with_replacement;
      options.total_steps = std::lround(family.horizon * spec.d);
      options.replica = r;
      RandomStream stream = derive_stream(config.master_seed, "figure:sgd:" + family.file, r);
      sgd_runs[r] = run_sgd(spec, &data, options, x0, stats, stream);
    });
    write_trajectories_csv(out_dir + "/" + family.file + "_sgd.csv",
                           {mean_trajectory(sgd_runs)});

    // Its homogenized equivalent: the empirical-covariance diffusion.
    std::vector<Trajectory> hsgd_runs(config.replicas);
    parallel_for_replicas(config.replicas, config.threads, [&](int r) {
      HsgdConfig hsgd;
      hsgd.mode = HsgdMode::empirical;
      hsgd.horizon_T = family.horizon;
      hsgd.record_stride = 5;
      hsgd.replica = r;
      RandomStream stream = derive_stream(config.master_seed, "figure:hsgd:" + family.file, r);
      hsgd_runs[r] = run_hsgd(spec, x0, hsgd, stats, stream, &data);
    });
    write_trajectories_csv(out_dir + "/" + family.file + "_hsgd.csv",
                           {mean_trajectory(hsgd_runs)});
  }

  // Streaming SGD out to the full horizon, averaged over replicas.
  std::vector<Trajectory> streaming_runs(config.replicas);
  parallel_for_replicas(config.replicas, config.threads, [&](int r) {
    SgdRunOptions options;
    options.strategy = IndexStrategy::one_pass;
    options.total_steps = std::lround(horizon * spec.d);
    options.replica = r;
    RandomStream stream = derive_stream(config.master_seed, "figure:streaming", r);
    streaming_runs[r] = run_sgd(spec, nullptr, options, x0, stats, stream);
  });
  const Trajectory streaming_mean = mean_trajectory(streaming_runs);
  write_trajectories_csv(out_dir + "/streaming_sgd.csv", {streaming_mean});

  // Streaming Volterra curve.
  const VolterraSolution volterra =
      solve_volterra(spec, x0, horizon, default_volterra_step(spec), config.kernel_choice);
  write_volterra_csv(out_dir + "/streaming_volterra.csv", volterra);

  // Streaming risk levels at a range of dataset sizes n: the streaming curve
  // stops at t = n/d once its data is exhausted.
  {
    std::ofstream out(out_dir + "/streaming_levels.csv");
    out << "n,t,population_risk\n";
    const long ratios[] = {config.d / 4, config.d / 2, config.d, 2L * config.d, 4L * config.d,
                           8L * config.d};
    for (const long n : ratios) {
      const double t = static_cast<double>(n) / spec.d;
      if (t > horizon) continue;
      out << n << ',' << format_double(t) << ','
          << format_double(streaming_mean.interpolate("population_risk", t)) << '\n';
    }
  }

  const FigureOrderings orderings = figure_orderings(config, config.master_seed);
  nlohmann::json summary;
  summary["d"] = config.d;
  summary["gamma"] = config.gamma;
  summary["delta"] = config.delta;
  summary["noise_std"] = config.noise_std;
  summary["small_n"] = small_n;
  summary["large_n"] = large_n;
  summary["multipass_small_final"] = orderings.multipass_small_final;
  summary["streaming_small_level"] = orderings.streaming_small_level;
  summary["multipass_large_final"] = orderings.multipass_large_final;
  summary["streaming_large_at_equal_steps"] = orderings.streaming_large_at_equal_steps;
  summary["small_dataset_multipass_wins"] = orderings.small_dataset_multipass_wins;
  summary["large_dataset_streaming_wins"] = orderings.large_dataset_streaming_wins;
  summary["runtime_seconds"] =
      std::floor(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  std::ofstream out(out_dir + "/summary.json");
  out << summary.dump(2) << '\n';
}

}  // namespace sgdlab
