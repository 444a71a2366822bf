#include "sgdlab/sgd.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace sgdlab {

IndexStrategy parse_index_strategy(const std::string& name) {
  if (name == "one_pass") return IndexStrategy::one_pass;
  if (name == "with_replacement") return IndexStrategy::with_replacement;
  if (name == "single_shuffle") return IndexStrategy::single_shuffle;
  if (name == "random_shuffle") return IndexStrategy::random_shuffle;
  throw std::invalid_argument("unknown index strategy: " + name);
}

std::string index_strategy_name(IndexStrategy strategy) {
  switch (strategy) {
    case IndexStrategy::one_pass: return "one_pass";
    case IndexStrategy::with_replacement: return "with_replacement";
    case IndexStrategy::single_shuffle: return "single_shuffle";
    case IndexStrategy::random_shuffle: return "random_shuffle";
  }
  return "unknown";
}

IndexSchedule::IndexSchedule(IndexStrategy strategy, Eigen::Index n, long total_steps,
                             RandomStream* rng)
    : strategy_(strategy), n_(n), total_steps_(total_steps), rng_(rng) {
  if (n < 1) throw std::invalid_argument("index_schedule: n must be >= 1");
  if (total_steps < 0) throw std::invalid_argument("index_schedule: total_steps must be >= 0");
  if (strategy == IndexStrategy::one_pass && total_steps > n) {
    throw std::invalid_argument("index_schedule: one_pass requires total_steps <= n");
  }
  const bool needs_rng =
      strategy == IndexStrategy::with_replacement || strategy == IndexStrategy::random_shuffle;
  if (needs_rng && rng == nullptr) {
    throw std::invalid_argument("index_schedule: strategy requires a random stream");
  }
  if (strategy == IndexStrategy::random_shuffle) permutation_.resize(n);
}

void IndexSchedule::reshuffle() {
  std::iota(permutation_.begin(), permutation_.end(), Eigen::Index{0});
  for (Eigen::Index i = n_ - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(rng_->uniform_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(permutation_[i], permutation_[j]);
  }
}

Eigen::Index IndexSchedule::next() {
  if (step_ >= total_steps_) throw std::logic_error("index_schedule: exhausted");
  const long k = step_++;
  switch (strategy_) {
    case IndexStrategy::one_pass:
      return static_cast<Eigen::Index>(k);
    case IndexStrategy::with_replacement:
      return static_cast<Eigen::Index>(rng_->uniform_below(static_cast<std::uint64_t>(n_)));
    case IndexStrategy::single_shuffle:
      return static_cast<Eigen::Index>(k % n_);
    case IndexStrategy::random_shuffle: {
      const Eigen::Index pos = static_cast<Eigen::Index>(k % n_);
      if (pos == 0) reshuffle();
      return permutation_[pos];
    }
  }
  throw std::logic_error("index_schedule: bad strategy");
}

Eigen::VectorXd sgd_step(const Eigen::VectorXd& x, const Eigen::VectorXd& m, double eta_k,
                         double gamma_step, double delta, int d, const Eigen::VectorXd& x_tilde) {
  if (gamma_step == 0.0) return x;
  const double gamma = gamma_step * d;
  const double shrink = gamma_step * delta;  // gamma delta / d
  Eigen::VectorXd v = x - x_tilde;
  const double proj = m.dot(v);
  v *= (1.0 - shrink);
  v += m * (gamma * (eta_k - proj));
  v -= shrink * x_tilde;
  return x_tilde + v;
}

long default_sgd_stride(int d) { return std::max(1L, static_cast<long>(d / 50)); }

namespace {

void record(Trajectory& traj, double t, const Eigen::VectorXd& v,
            const Eigen::VectorXd& truth_eig, const std::vector<QuadraticD>& stats) {
  traj.times.push_back(t);
  const Eigen::VectorXd x = v + truth_eig;  // eigenbasis state
  for (const auto& stat : stats) {
    traj.values[stat.label()].push_back(stat.eval(x));
  }
}

}  // namespace

Trajectory run_sgd(const ProblemSpec& spec, const Dataset* data, const SgdRunOptions& options,
                   const Eigen::VectorXd& x0, const std::vector<QuadraticD>& stats,
                   RandomStream& rng) {
  if (x0.size() != spec.d) throw std::invalid_argument("run_sgd: x0 dimension mismatch");
  if (x0.norm() > 1.0 + 1e-12) {
    if (!options.allow_large_init) {
      throw std::invalid_argument("run_sgd: ||x0|| > 1; set allow_large_init to override");
    }
    std::fprintf(stderr, "run_sgd: warning: ||x0|| = %.3g exceeds 1\n", x0.norm());
  }
  if (data == nullptr && options.strategy != IndexStrategy::one_pass) {
    throw std::invalid_argument("run_sgd: streaming mode supports one_pass only");
  }
  if (data != nullptr && data->dim() != spec.d) {
    throw std::invalid_argument("run_sgd: dataset dimension mismatch");
  }

  const int d = spec.d;
  const long steps = options.total_steps;
  const long stride = options.stride > 0 ? options.stride : default_sgd_stride(d);
  const double gamma = spec.gamma;
  const double shrink = gamma * spec.delta / d;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  const Eigen::VectorXd truth_eig = spec.truth_in_eigenbasis();
  const Eigen::VectorXd sqrt_lambda = spec.spectrum.cwiseSqrt();
  const double stop_radius_sq = std::pow(static_cast<double>(d), 2.0 * spec.epsilon);

  // Rows are used as m_i = a_i / sqrt(d) in the eigenbasis; the rotation is
  // materialized once only when the basis is nontrivial, otherwise rows are
  // scaled on the fly.
  Eigen::MatrixXd rotated_rows;
  Eigen::VectorXd scaled_noise;
  std::optional<IndexSchedule> schedule;
  const Eigen::MatrixXd* data_rows = nullptr;
  if (data != nullptr) {
    if (spec.has_nontrivial_basis()) {
      rotated_rows = data->rows * spec.eigenbasis;
      data_rows = &rotated_rows;
    } else {
      data_rows = &data->rows;
    }
    scaled_noise = data->noise * inv_sqrt_d;
    schedule.emplace(options.strategy, data->n(), steps, &rng);
  }

  Trajectory traj;
  traj.source = Source::sgd;
  traj.replica = options.replica;
  traj.meta = {spec.hash(), rng.seed(), gamma, stride};

  Eigen::VectorXd v = spec.to_eigenbasis(x0) - truth_eig;
  Eigen::VectorXd m(d);
  record(traj, 0.0, v, truth_eig, stats);

  for (long k = 1; k <= steps; ++k) {
    double eta_k;
    if (data != nullptr) {
      const Eigen::Index idx = schedule->next();
      m = data_rows->row(idx).transpose() * inv_sqrt_d;
      eta_k = scaled_noise[idx];
    } else {
      m = rng.gaussian_vector(d).cwiseProduct(sqrt_lambda) * inv_sqrt_d;
      eta_k = spec.noise_std > 0 ? spec.noise_std * rng.gaussian() * inv_sqrt_d : 0.0;
    }

    const double proj = m.dot(v);
    v *= (1.0 - shrink);
    v += m * (gamma * (eta_k - proj));
    if (shrink != 0.0) v -= shrink * truth_eig;

    const bool due = (k % stride == 0 || k == steps);
    if (due) record(traj, static_cast<double>(k) / d, v, truth_eig, stats);
    if (options.strict_stopping && v.squaredNorm() > stop_radius_sq) {
      if (!due) record(traj, static_cast<double>(k) / d, v, truth_eig, stats);
      break;
    }
  }
  return traj;
}

std::optional<double> stopping_time_monitor(const Trajectory& traj, double epsilon, int d) {
  const std::vector<double>& dist_sq = traj.series("distance_sq_to_truth");
  const double threshold = std::pow(static_cast<double>(d), 2.0 * epsilon);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    if (dist_sq[i] > threshold) return traj.times[i];
  }
  return std::nullopt;
}

}  // namespace sgdlab
