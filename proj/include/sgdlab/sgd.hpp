#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "sgdlab/problem.hpp"
#include "sgdlab/quadratic.hpp"
#include "sgdlab/trajectory.hpp"

namespace sgdlab {

enum class IndexStrategy { one_pass, with_replacement, single_shuffle, random_shuffle };

IndexStrategy parse_index_strategy(const std::string& name);
std::string index_strategy_name(IndexStrategy strategy);

// Emits the data index for each step.  one_pass emits 0,1,2,... and requires
// total_steps <= n; with_replacement emits iid uniform indices; single_shuffle
// emits k mod n; random_shuffle draws a fresh permutation every block of n.
class IndexSchedule {
 public:
  IndexSchedule(IndexStrategy strategy, Eigen::Index n, long total_steps, RandomStream* rng);

  Eigen::Index next();
  long total_steps() const { return total_steps_; }
  IndexStrategy strategy() const { return strategy_; }

 private:
  void reshuffle();

  IndexStrategy strategy_;
  Eigen::Index n_;
  long total_steps_;
  long step_ = 0;
  RandomStream* rng_;
  std::vector<Eigen::Index> permutation_;
};

// One step of the reduced recurrence
//   x_k - xt = (I (1 - gamma delta / d) - gamma m m^T)(x_{k-1} - xt)
//              - (gamma delta / d) xt + gamma m eta_k,
// with m = a/sqrt(d) and eta_k = w/sqrt(d) precomputed by the caller and
// gamma_step = gamma/d.  Algebraically identical to the plain SGD update on
// the regularized least-squares objective (exercised in tests).
Eigen::VectorXd sgd_step(const Eigen::VectorXd& x, const Eigen::VectorXd& m, double eta_k,
                         double gamma_step, double delta, int d, const Eigen::VectorXd& x_tilde);

struct SgdRunOptions {
  IndexStrategy strategy = IndexStrategy::one_pass;
  long total_steps = 0;
  long stride = 0;                // 0 picks max(1, d/50)
  bool allow_large_init = false;  // lifts the ||x0|| <= 1 precondition
  bool strict_stopping = false;   // abort the run once ||x - xt|| > d^eps
  int replica = 0;
};

long default_sgd_stride(int d);

// Runs the recurrence and records the given statistics every stride steps
// (always including step 0 and the final step) at continuum time t = k/d.
// With data == nullptr the run streams fresh samples (one_pass only) without
// materializing a dataset.  x0 and the dataset are in the standard basis;
// statistics are evaluated in the covariance eigenbasis.
Trajectory run_sgd(const ProblemSpec& spec, const Dataset* data, const SgdRunOptions& options,
                   const Eigen::VectorXd& x0, const std::vector<QuadraticD>& stats,
                   RandomStream& rng);

// First recorded time with ||x - xt|| > d^eps, from a trajectory carrying
// distance_sq_to_truth.  Diagnostic only; engines do not halt on it unless
// strict_stopping is set.
std::optional<double> stopping_time_monitor(const Trajectory& traj, double epsilon, int d);

}  // namespace sgdlab
