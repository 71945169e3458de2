#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "delaylab/bounds.hpp"
#include "delaylab/dataset.hpp"
#include "delaylab/engine.hpp"
#include "delaylab/genfun.hpp"
#include "delaylab/problem.hpp"

namespace delaylab {

enum class Mode { GenSweep, Stability, VerifyLemma, Bounds, ParseCheck };

std::string to_string(Mode mode);

struct SyntheticSpec {
  int d = 50;
  long n = 1000;
  long test_n = 1000;
  SpectrumSpec spectrum = SpectrumSpec::uniform(0.1, 1.0);
  double noise_std = 0.5;
  std::uint64_t seed = 42;
};

struct ExperimentConfig {
  Mode mode = Mode::GenSweep;

  // problem source: LIBSVM path + split, or synthetic
  std::string dataset_path;
  SplitSpec split;
  SyntheticSpec synthetic;
  double ridge = 0.0;

  std::vector<int> delays = {1, 4, 8, 16};
  bool random_delays = false;
  double eta = 0.01;
  long iters = 10000;
  int batch_size = 1;
  std::vector<std::uint64_t> seeds = {1};
  long record_stride = 0;
  int num_replacements = 20;

  // verify-lemma grid; learning rates are fractions of 1/(20 mu (tau+1))
  std::vector<int> tau_grid = {0, 1, 2, 4, 8, 16, 32};
  std::vector<double> eta_scales = {1.0, 0.5};
  long lemma_iters = 0;  // 0 -> 10 ceil(t0) + 1000

  BoundInputs bound_inputs;  // bounds mode

  std::string out_dir = ".";
  std::string format = "csv";

  bool use_synthetic() const { return dataset_path.empty(); }
  void validate() const;
};

std::string canonical_config_text(const ExperimentConfig& config);
std::uint64_t config_digest(const ExperimentConfig& config);

struct ResultRecord {
  std::string mode;
  std::string dataset;
  int delay = 0;
  std::uint64_t seed = 0;
  long t = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double gen_error = 0.0;
  // stability mode extras
  long replaced_index = -1;
  double loss_gap = 0.0;
  double bound_prop1 = 0.0;
  double bound_thm = 0.0;
  bool diverged = false;
};

// Train/test pair per the config (seeded split or synthetic draw; synthetic
// test data shares the generating law with the train set).
std::pair<Dataset, Dataset> make_datasets(const ExperimentConfig& config);

struct SweepDelaySummary {
  int delay = 0;
  double final_gen_mean = 0.0;
  double final_gen_std = 0.0;
  long diverged_runs = 0;
};

struct SweepResult {
  std::vector<ResultRecord> records;
  std::vector<SweepDelaySummary> summary;
};

// One engine run per (delay, seed); per-checkpoint generalization error.
// Sampler seeds are shared across delays so delay comparisons are paired.
SweepResult run_gen_sweep(const ExperimentConfig& config);

struct StabilityResult {
  std::vector<ResultRecord> records;
  double estimate = 0.0;     // |mean loss gap|
  double std_error = 0.0;    // Monte-Carlo standard error of the mean
  double signed_mean = 0.0;
  double sigma_hat = 0.0;    // pooled empirical noise level
  double r_realized = 0.0;   // ||b|| of the training set
  SpectralConstants spectral;
  std::optional<BoundReport> prop1;  // explicit-spectrum regime only
  BoundReport thm;
};

// Twin runs over sampled replacement indices x seeds; replacements come from
// the held-out set. delays[0] is the schedule under test.
StabilityResult estimate_avg_stability(const ExperimentConfig& config);

struct LemmaSweepRow {
  int tau = 0;
  double eta = 0.0;
  double t0 = 0.0;
  bool applicable = false;
  bool pass = false;
  double worst_margin = 0.0;
  long worst_t = -1;
};

struct LemmaSweepResult {
  std::vector<LemmaSweepRow> rows;
  bool all_pass = true;  // over applicable rows
};

LemmaSweepResult verify_lemma_sweep(const ExperimentConfig& config);

// Coefficient-table dump: t, norm, weighted_norm, S1, S2 and the in-regime
// coefficient bound.
void dump_coeff_table(const CoeffTable& table, double mu, std::ostream& out);

// Bound reports applicable to config.bound_inputs (thm1; thm2 when
// lambda > 0; the random-delay corollary when rho is set).
std::vector<BoundReport> evaluate_bounds(const ExperimentConfig& config);

// Writers; deterministic byte-for-byte given identical records and digest.
void write_csv(const std::vector<ResultRecord>& records, Mode mode,
               std::uint64_t digest, std::ostream& out);
void write_json(const std::vector<ResultRecord>& records,
                const ExperimentConfig& config, std::ostream& out);

// Convenience: runs the config's mode and writes <mode>.<format> under
// config.out_dir; returns the paths written.
std::vector<std::string> run_and_emit(const ExperimentConfig& config);

}  // namespace delaylab
