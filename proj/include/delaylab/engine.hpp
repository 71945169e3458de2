#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "delaylab/dataset.hpp"
#include "delaylab/problem.hpp"

namespace delaylab {

struct DelaySchedule {
  enum class Kind { Fixed, RandomBounded };
  Kind kind = Kind::Fixed;
  int tau = 0;       // fixed delay
  int tau_bar = 0;   // upper bound for random delays, tau_t ~ U{0..tau_bar}
  std::uint64_t seed = 0;

  static DelaySchedule fixed(int tau);
  static DelaySchedule random_bounded(int tau_bar, std::uint64_t seed);
  int max_delay() const { return kind == Kind::Fixed ? tau : tau_bar; }
  bool is_random() const { return kind == Kind::RandomBounded; }
};

struct RunConfig {
  double eta = 0.1;
  long iters = 0;          // T; the run produces w_0..w_T
  int batch_size = 1;
  bool full_batch = false; // deterministic gradient descent, no sampling
  Eigen::VectorXd init;    // empty -> zeros
  std::uint64_t sampler_seed = 1;
  long record_stride = 0;  // 0 -> iters/100 (min 1)
  long noise_probe_limit = 1000;
  bool store_iterates = false;
  // When nonempty, indices are consumed from here instead of the sampler
  // (exhaustive-enumeration tests); needs (T - D) * batch_size entries.
  std::vector<std::size_t> forced_indices;

  long effective_stride() const {
    if (record_stride > 0) return record_stride;
    return iters >= 100 ? iters / 100 : 1;
  }
};

struct NoiseStats {
  double mean = 0.0;       // empirical mean of ||xi_t||
  double std_error = 0.0;
  long count = 0;
};

// Probed maximum of ||A (w_{t-tau_t} - w_{t-tau_bar})||; feeds the rho
// estimate for random-delay bounds. Explicit-A regime and random schedules
// only.
struct DriftStats {
  double max_norm = 0.0;
  long count = 0;
};

struct Checkpoint {
  long t = 0;
  double train_loss = 0.0;  // full objective, ridge included
};

struct Trajectory {
  Eigen::VectorXd final_w;
  std::vector<Checkpoint> checkpoints;
  std::vector<std::pair<long, Eigen::VectorXd>> iterates;  // when store_iterates
  NoiseStats noise;
  DriftStats drift;
  std::uint64_t index_digest = 0;
  std::uint64_t delay_digest = 0;
  long updates = 0;
};

struct TwinCheckpoint {
  long t = 0;
  double e_norm = 0.0;           // ||w_t - w'_t||
  double e_weighted_norm = 0.0;  // ||sqrt(A) (w_t - w'_t)||, explicit regime only
  double s_norm = 0.0;           // ||w_t + w'_t||
};

struct TwinResult {
  Eigen::VectorXd final_w;       // trained on S
  Eigen::VectorXd final_w_twin;  // trained on S^(i)
  double loss_gap = 0.0;         // f(w'_T; z_i) - f(w_T; z_i), z_i from S
  std::vector<TwinCheckpoint> checkpoints;
  bool replaced_drawn = false;
  NoiseStats noise;              // S-side stochastic noise
  DriftStats drift;
  std::uint64_t index_digest = 0;
  std::uint64_t delay_digest = 0;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(long t, double norm)
      : std::runtime_error("iterate diverged at t=" + std::to_string(t) +
                           " (||w||=" + std::to_string(norm) + ")"),
        t_(t) {}
  long t() const { return t_; }

 private:
  long t_;
};

// Delayed SGD: w_0 = ... = w_D, then w_{t+1} = w_t - eta g(w_{t - tau_t})
// for t = D..T-1 with D the maximum delay.
Trajectory run(const QuadraticProblem& problem, const DelaySchedule& schedule,
               const RunConfig& config);

// Coupled runs on S and S^(i) sharing the index and delay sequences. The twin
// problem replaces sample `replaced_index` with `replacement`.
TwinResult twin_run(const QuadraticProblem& problem, std::size_t replaced_index,
                    const Sample& replacement, const DelaySchedule& schedule,
                    const RunConfig& config);

// Mean test data loss minus mean train data loss (ridge excluded from both).
double generalization_error(const QuadraticProblem& train_problem,
                            const Dataset& test, const Eigen::VectorXd& w);

}  // namespace delaylab
