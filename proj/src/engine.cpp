#include "delaylab/engine.hpp"

#include <cmath>
#include <memory>

#include "delaylab/common.hpp"

namespace delaylab {

namespace {

constexpr double kDivergenceNormSq = 1e24;  // ||w|| > 1e12 aborts
constexpr std::uint64_t kFnvBasis = 0xcbf29ce484222325ull;

struct IndexSource {
  std::mt19937_64 rng;
  const std::vector<std::size_t>* forced = nullptr;
  std::size_t pos = 0;
  std::size_t n = 0;
  std::uint64_t digest = kFnvBasis;

  std::size_t next() {
    const std::size_t idx =
        forced ? (*forced)[pos++] : uniform_index(rng, n);
    digest = fnv1a_u64(idx, digest);
    return idx;
  }
};

struct DelaySource {
  const DelaySchedule* schedule = nullptr;
  std::mt19937_64 rng;
  std::uint64_t digest = kFnvBasis;

  int next() {
    int d = schedule->max_delay();
    if (schedule->is_random()) {
      d = static_cast<int>(uniform_index(rng, schedule->max_delay() + 1));
    }
    digest = fnv1a_u64(static_cast<std::uint64_t>(d), digest);
    return d;
  }
};

struct Welford {
  long count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }
  NoiseStats stats() const {
    NoiseStats s;
    s.count = count;
    s.mean = mean;
    if (count > 1) s.std_error = std::sqrt(m2 / (count - 1) / count);
    return s;
  }
};

void validate(const QuadraticProblem& problem, const DelaySchedule& schedule,
              const RunConfig& config) {
  if (!(config.eta > 0)) throw std::invalid_argument("eta must be positive");
  if (config.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  const int D = schedule.max_delay();
  if (D < 0) throw std::invalid_argument("delay must be nonnegative");
  if (schedule.is_random() && schedule.tau_bar < 1) {
    throw std::invalid_argument("random delays need tau_bar >= 1");
  }
  if (config.iters <= D) {
    throw std::invalid_argument("iters must exceed the maximum delay");
  }
  if (config.init.size() != 0 && config.init.size() != problem.dim()) {
    throw std::invalid_argument("init dimension mismatch");
  }
  if (!config.forced_indices.empty() && !config.full_batch) {
    const std::size_t need = static_cast<std::size_t>(config.iters - D) *
                             static_cast<std::size_t>(config.batch_size);
    if (config.forced_indices.size() != need) {
      throw std::invalid_argument("forced_indices needs (T-D)*batch entries");
    }
  }
}

}  // namespace

DelaySchedule DelaySchedule::fixed(int tau) {
  DelaySchedule s;
  s.kind = Kind::Fixed;
  s.tau = tau;
  return s;
}

DelaySchedule DelaySchedule::random_bounded(int tau_bar, std::uint64_t seed) {
  DelaySchedule s;
  s.kind = Kind::RandomBounded;
  s.tau_bar = tau_bar;
  s.seed = seed;
  return s;
}

Trajectory run(const QuadraticProblem& problem, const DelaySchedule& schedule,
               const RunConfig& config) {
  validate(problem, schedule, config);
  const int D = schedule.max_delay();
  const long T = config.iters;
  const long stride = config.effective_stride();
  const int d = problem.dim();

  IndexSource sampler{std::mt19937_64(mix_seed(config.sampler_seed, "sampler")),
                      config.forced_indices.empty() ? nullptr
                                                    : &config.forced_indices,
                      0, problem.count()};
  DelaySource delays{&schedule, std::mt19937_64(mix_seed(schedule.seed, "delay"))};

  Eigen::VectorXd w =
      config.init.size() ? config.init : Eigen::VectorXd::Zero(d).eval();
  std::vector<Eigen::VectorXd> hist(D + 1, w);

  Trajectory traj;
  Welford noise;
  DriftStats drift;
  const long probe_every =
      config.noise_probe_limit > 0
          ? std::max<long>(1, (T - D + config.noise_probe_limit - 1) /
                                  config.noise_probe_limit)
          : 0;

  auto record = [&](long t, const Eigen::VectorXd& wt) {
    traj.checkpoints.push_back({t, problem.full_loss(wt)});
    if (config.store_iterates) traj.iterates.emplace_back(t, wt);
  };
  record(D, w);

  const bool probe_drift = schedule.is_random() && problem.explicit_regime();
  Eigen::VectorXd g(d);
  for (long t = D; t < T; ++t) {
    const int tau_t = delays.next();
    const Eigen::VectorXd& stale = hist[static_cast<std::size_t>(t - tau_t) % (D + 1)];
    if (probe_drift && probe_every > 0 && (t - D) % probe_every == 0 &&
        drift.count < config.noise_probe_limit) {
      const Eigen::VectorXd& oldest = hist[static_cast<std::size_t>(t - D) % (D + 1)];
      drift.max_norm =
          std::max(drift.max_norm, problem.apply_hessian(stale - oldest).norm());
      ++drift.count;
    }
    if (config.full_batch) {
      g = problem.full_gradient(stale);
    } else {
      g.setZero();
      for (int b = 0; b < config.batch_size; ++b) {
        problem.accumulate_sample_gradient(stale, sampler.next(), g);
      }
      g /= config.batch_size;
      if (probe_every > 0 && (t - D) % probe_every == 0 &&
          noise.count < config.noise_probe_limit) {
        noise.add((g - problem.full_gradient(stale)).norm());
      }
    }
    w -= config.eta * g;
    if (w.squaredNorm() > kDivergenceNormSq) {
      throw DivergenceError(t + 1, w.norm());
    }
    hist[static_cast<std::size_t>(t + 1) % (D + 1)] = w;
    ++traj.updates;
    const long next_t = t + 1;
    if (next_t == T || (next_t - D) % stride == 0) {
      record(next_t, w);
    }
  }

  traj.final_w = std::move(w);
  traj.noise = noise.stats();
  traj.drift = drift;
  traj.index_digest = sampler.digest;
  traj.delay_digest = delays.digest;
  return traj;
}

TwinResult twin_run(const QuadraticProblem& problem, std::size_t replaced_index,
                    const Sample& replacement, const DelaySchedule& schedule,
                    const RunConfig& config) {
  validate(problem, schedule, config);
  if (replaced_index >= problem.count()) {
    throw std::out_of_range("replaced_index out of range");
  }
  for (const auto& [idx, val] : replacement.features) {
    if (idx < 0 || idx >= problem.dim()) {
      throw std::invalid_argument("replacement sample dimension mismatch");
    }
  }

  auto twin_data = std::make_shared<Dataset>(problem.data());
  twin_data->samples[replaced_index] = replacement;
  QuadraticProblem twin(twin_data, problem.ridge());

  const int D = schedule.max_delay();
  const long T = config.iters;
  const long stride = config.effective_stride();
  const int d = problem.dim();

  IndexSource sampler{std::mt19937_64(mix_seed(config.sampler_seed, "sampler")),
                      config.forced_indices.empty() ? nullptr
                                                    : &config.forced_indices,
                      0, problem.count()};
  DelaySource delays{&schedule, std::mt19937_64(mix_seed(schedule.seed, "delay"))};

  Eigen::VectorXd w =
      config.init.size() ? config.init : Eigen::VectorXd::Zero(d).eval();
  Eigen::VectorXd wp = w;
  std::vector<Eigen::VectorXd> hist(D + 1, w);
  std::vector<Eigen::VectorXd> hist_twin(D + 1, wp);

  TwinResult result;
  Welford noise;
  DriftStats drift;
  const long probe_every =
      config.noise_probe_limit > 0
          ? std::max<long>(1, (T - D + config.noise_probe_limit - 1) /
                                  config.noise_probe_limit)
          : 0;

  auto record = [&](long t, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    TwinCheckpoint cp;
    cp.t = t;
    Eigen::VectorXd e = a - b;
    cp.e_norm = e.norm();
    cp.s_norm = (a + b).norm();
    if (problem.explicit_regime()) cp.e_weighted_norm = problem.weighted_norm(e);
    result.checkpoints.push_back(cp);
  };
  record(D, w, wp);

  const bool probe_drift = schedule.is_random() && problem.explicit_regime();
  Eigen::VectorXd g(d), gp(d);
  for (long t = D; t < T; ++t) {
    const int tau_t = delays.next();
    const std::size_t slot = static_cast<std::size_t>(t - tau_t) % (D + 1);
    const Eigen::VectorXd& stale = hist[slot];
    const Eigen::VectorXd& stale_twin = hist_twin[slot];
    if (probe_drift && probe_every > 0 && (t - D) % probe_every == 0 &&
        drift.count < config.noise_probe_limit) {
      const Eigen::VectorXd& oldest = hist[static_cast<std::size_t>(t - D) % (D + 1)];
      drift.max_norm =
          std::max(drift.max_norm, problem.apply_hessian(stale - oldest).norm());
      ++drift.count;
    }
    if (config.full_batch) {
      g = problem.full_gradient(stale);
      gp = twin.full_gradient(stale_twin);
    } else {
      g.setZero();
      gp.setZero();
      for (int b = 0; b < config.batch_size; ++b) {
        const std::size_t idx = sampler.next();  // shared coupling randomness
        if (idx == replaced_index) result.replaced_drawn = true;
        problem.accumulate_sample_gradient(stale, idx, g);
        twin.accumulate_sample_gradient(stale_twin, idx, gp);
      }
      g /= config.batch_size;
      gp /= config.batch_size;
      if (probe_every > 0 && (t - D) % probe_every == 0 &&
          noise.count < config.noise_probe_limit) {
        noise.add((g - problem.full_gradient(stale)).norm());
      }
    }
    w -= config.eta * g;
    wp -= config.eta * gp;
    if (w.squaredNorm() > kDivergenceNormSq || wp.squaredNorm() > kDivergenceNormSq) {
      throw DivergenceError(t + 1, std::max(w.norm(), wp.norm()));
    }
    hist[static_cast<std::size_t>(t + 1) % (D + 1)] = w;
    hist_twin[static_cast<std::size_t>(t + 1) % (D + 1)] = wp;
    const long next_t = t + 1;
    if (next_t == T || (next_t - D) % stride == 0) {
      record(next_t, w, wp);
    }
  }

  result.loss_gap =
      problem.sample_loss(wp, replaced_index) - problem.sample_loss(w, replaced_index);
  result.final_w = std::move(w);
  result.final_w_twin = std::move(wp);
  result.noise = noise.stats();
  result.drift = drift;
  result.index_digest = sampler.digest;
  result.delay_digest = delays.digest;
  return result;
}

double generalization_error(const QuadraticProblem& train_problem,
                            const Dataset& test, const Eigen::VectorXd& w) {
  if (test.empty()) throw std::invalid_argument("empty test set");
  if (test.dim > train_problem.dim()) {
    throw std::invalid_argument("test dimension exceeds problem dimension");
  }
  return mean_data_loss(test, w) - train_problem.mean_data_loss(w);
}

}  // namespace delaylab
