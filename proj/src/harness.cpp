#include "delaylab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "delaylab/common.hpp"

namespace delaylab {

using ordered_json = nlohmann::ordered_json;

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::GenSweep: return "gen-sweep";
    case Mode::Stability: return "stability";
    case Mode::VerifyLemma: return "verify-lemma";
    case Mode::Bounds: return "bounds";
    case Mode::ParseCheck: return "parse-check";
  }
  return "";
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw std::invalid_argument("at least one seed required");
  if (!(eta > 0)) throw std::invalid_argument("eta must be positive");
  if (delays.empty()) throw std::invalid_argument("at least one delay required");
  std::vector<int> sorted = delays;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("delays must be distinct");
  }
  if (format != "csv" && format != "json") {
    throw std::invalid_argument("format must be csv or json");
  }
  if (ridge < 0) throw std::invalid_argument("ridge must be nonnegative");
}

namespace {

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

std::string join_u64(const std::vector<std::uint64_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_double(v[i]);
  }
  return s;
}

}  // namespace

std::string canonical_config_text(const ExperimentConfig& c) {
  // Sorted key=value lines of every field that identifies the experiment;
  // output location and format deliberately excluded.
  std::ostringstream out;
  out << "batch_size=" << c.batch_size << '\n';
  if (c.mode == Mode::Bounds) {
    const auto& b = c.bound_inputs;
    out << "bounds.eta=" << format_double(b.eta) << '\n'
        << "bounds.lambda=" << format_double(b.lambda) << '\n'
        << "bounds.mu=" << format_double(b.mu) << '\n'
        << "bounds.n=" << format_double(b.n) << '\n'
        << "bounds.r=" << format_double(b.r) << '\n'
        << "bounds.rho=" << format_double(b.rho) << '\n'
        << "bounds.sigma=" << format_double(b.sigma) << '\n'
        << "bounds.T=" << b.T << '\n'
        << "bounds.tau=" << b.tau << '\n'
        << "bounds.w0_norm=" << format_double(b.w0_norm) << '\n';
  }
  out << "dataset=" << (c.use_synthetic() ? "synthetic" : c.dataset_path) << '\n'
      << "delays=" << join_ints(c.delays) << '\n'
      << "eta=" << format_double(c.eta) << '\n'
      << "eta_scales=" << join_doubles(c.eta_scales) << '\n'
      << "iters=" << c.iters << '\n'
      << "lemma_iters=" << c.lemma_iters << '\n'
      << "mode=" << to_string(c.mode) << '\n'
      << "num_replacements=" << c.num_replacements << '\n'
      << "random_delays=" << (c.random_delays ? 1 : 0) << '\n'
      << "record_stride=" << c.record_stride << '\n'
      << "ridge=" << format_double(c.ridge) << '\n'
      << "seeds=" << join_u64(c.seeds) << '\n';
  if (c.use_synthetic()) {
    out << "synthetic.d=" << c.synthetic.d << '\n'
        << "synthetic.n=" << c.synthetic.n << '\n'
        << "synthetic.noise_std=" << format_double(c.synthetic.noise_std) << '\n'
        << "synthetic.seed=" << c.synthetic.seed << '\n'
        << "synthetic.spectrum=" << c.synthetic.spectrum.describe() << '\n'
        << "synthetic.test_n=" << c.synthetic.test_n << '\n';
  } else {
    out << "split.seed=" << c.split.seed << '\n'
        << "split.train_fraction=" << format_double(c.split.train_fraction) << '\n';
  }
  out << "tau_grid=" << join_ints(c.tau_grid) << '\n';
  return out.str();
}

std::uint64_t config_digest(const ExperimentConfig& config) {
  return fnv1a(canonical_config_text(config));
}

std::pair<Dataset, Dataset> make_datasets(const ExperimentConfig& config) {
  if (config.use_synthetic()) {
    const auto& s = config.synthetic;
    // one draw so train and test share the generating law (Q, w*)
    Dataset full = synth_quadratic(s.d, s.n + s.test_n, s.spectrum, s.noise_std,
                                   s.seed);
    Dataset train, test;
    train.dim = test.dim = full.dim;
    train.name = full.name + ".train";
    test.name = full.name + ".test";
    train.samples.assign(full.samples.begin(), full.samples.begin() + s.n);
    test.samples.assign(full.samples.begin() + s.n, full.samples.end());
    return {std::move(train), std::move(test)};
  }
  Dataset ds = load_libsvm_file(config.dataset_path);
  return split(ds, config.split);
}

namespace {

DelaySchedule make_schedule(const ExperimentConfig& config, int delay,
                            std::uint64_t seed) {
  if (config.random_delays) {
    return DelaySchedule::random_bounded(delay, mix_seed(seed, "delay-schedule"));
  }
  return DelaySchedule::fixed(delay);
}

std::string dataset_label(const ExperimentConfig& config, const Dataset& train) {
  if (config.use_synthetic()) return train.name;
  auto slash = config.dataset_path.find_last_of('/');
  return slash == std::string::npos ? config.dataset_path
                                    : config.dataset_path.substr(slash + 1);
}

}  // namespace

SweepResult run_gen_sweep(const ExperimentConfig& config) {
  config.validate();
  auto [train, test] = make_datasets(config);
  auto problem = QuadraticProblem(
      std::make_shared<Dataset>(std::move(train)), config.ridge);
  const std::string label = dataset_label(config, problem.data());

  SweepResult result;
  for (int delay : config.delays) {
    SweepDelaySummary summary;
    summary.delay = delay;
    std::vector<double> finals;
    for (std::uint64_t seed : config.seeds) {
      RunConfig rc;
      rc.eta = config.eta;
      rc.iters = config.iters;
      rc.batch_size = config.batch_size;
      rc.sampler_seed = seed;  // shared across delays: paired comparisons
      rc.record_stride = config.record_stride;
      rc.store_iterates = true;
      rc.noise_probe_limit = 0;
      try {
        Trajectory traj = run(problem, make_schedule(config, delay, seed), rc);
        for (const auto& [t, w] : traj.iterates) {
          ResultRecord rec;
          rec.mode = to_string(config.mode);
          rec.dataset = label;
          rec.delay = delay;
          rec.seed = seed;
          rec.t = t;
          rec.train_loss = problem.mean_data_loss(w);
          rec.test_loss = mean_data_loss(test, w);
          rec.gen_error = rec.test_loss - rec.train_loss;
          result.records.push_back(std::move(rec));
        }
        finals.push_back(result.records.back().gen_error);
      } catch (const DivergenceError& e) {
        ResultRecord rec;
        rec.mode = to_string(config.mode);
        rec.dataset = label;
        rec.delay = delay;
        rec.seed = seed;
        rec.t = e.t();
        rec.train_loss = rec.test_loss = rec.gen_error =
            std::numeric_limits<double>::quiet_NaN();
        rec.diverged = true;
        ++summary.diverged_runs;
        result.records.push_back(std::move(rec));
      }
    }
    if (!finals.empty()) {
      double mean = 0;
      for (double g : finals) mean += g;
      mean /= static_cast<double>(finals.size());
      double var = 0;
      for (double g : finals) var += (g - mean) * (g - mean);
      summary.final_gen_mean = mean;
      summary.final_gen_std =
          finals.size() > 1 ? std::sqrt(var / (finals.size() - 1)) : 0.0;
    }
    result.summary.push_back(summary);
  }
  return result;
}

StabilityResult estimate_avg_stability(const ExperimentConfig& config) {
  config.validate();
  auto [train, test] = make_datasets(config);
  const long n = static_cast<long>(train.size());
  if (config.num_replacements < 1 ||
      config.num_replacements > static_cast<int>(n)) {
    throw std::invalid_argument("num_replacements must be in [1, n]");
  }
  if (test.size() < static_cast<std::size_t>(config.num_replacements)) {
    throw std::invalid_argument("held-out pool smaller than num_replacements");
  }
  auto problem = QuadraticProblem(
      std::make_shared<Dataset>(std::move(train)), config.ridge);
  const std::string label = dataset_label(config, problem.data());
  const int delay = config.delays.front();

  // replaced indices: seeded draw without replacement
  std::vector<std::size_t> all(n);
  for (long i = 0; i < n; ++i) all[i] = i;
  std::mt19937_64 idx_rng(mix_seed(config.seeds.front(), "replacement-indices"));
  fisher_yates(all, idx_rng);
  all.resize(config.num_replacements);

  StabilityResult result;
  result.spectral = problem.estimate_spectral();
  result.r_realized = problem.b_norm();

  std::vector<double> gaps;
  double noise_sum = 0.0;
  long noise_count = 0;
  double drift_max = 0.0;
  std::vector<ResultRecord> records;

  for (std::size_t k = 0; k < all.size(); ++k) {
    const std::size_t replaced = all[k];
    const Sample& replacement = test.samples[k];
    for (std::uint64_t seed : config.seeds) {
      RunConfig rc;
      rc.eta = config.eta;
      rc.iters = config.iters;
      rc.batch_size = config.batch_size;
      rc.sampler_seed = mix_seed(seed, 7700 + k);  // independent cells
      rc.record_stride = config.record_stride;
      rc.noise_probe_limit = 1000;
      TwinResult twin = twin_run(problem, replaced, replacement,
                                 make_schedule(config, delay, rc.sampler_seed), rc);
      gaps.push_back(twin.loss_gap);
      noise_sum += twin.noise.mean * twin.noise.count;
      noise_count += twin.noise.count;
      drift_max = std::max(drift_max, twin.drift.max_norm);

      ResultRecord rec;
      rec.mode = to_string(config.mode);
      rec.dataset = label;
      rec.delay = delay;
      rec.seed = seed;
      rec.t = config.iters;
      rec.train_loss = problem.mean_data_loss(twin.final_w);
      rec.test_loss = mean_data_loss(test, twin.final_w);
      rec.gen_error = rec.test_loss - rec.train_loss;
      rec.replaced_index = static_cast<long>(replaced);
      rec.loss_gap = twin.loss_gap;
      records.push_back(std::move(rec));
    }
  }

  double mean = 0;
  for (double g : gaps) mean += g;
  mean /= static_cast<double>(gaps.size());
  double var = 0;
  for (double g : gaps) var += (g - mean) * (g - mean);
  result.signed_mean = mean;
  result.estimate = std::abs(mean);
  result.std_error = gaps.size() > 1
                         ? std::sqrt(var / (gaps.size() - 1) /
                                     static_cast<double>(gaps.size()))
                         : 0.0;
  result.sigma_hat = noise_count > 0 ? noise_sum / noise_count : 0.0;

  BoundInputs inputs;
  inputs.n = static_cast<double>(n);
  inputs.T = config.iters;
  inputs.tau = delay;
  inputs.eta = config.eta;
  inputs.mu = result.spectral.mu;
  inputs.lambda = result.spectral.lambda;
  inputs.r = result.r_realized;
  inputs.r_source = "realized";
  inputs.sigma = result.sigma_hat;
  inputs.sigma_source = "empirical";
  inputs.w0_norm = 0.0;

  BoundInputs stab_inputs = inputs;
  if (config.random_delays) {
    // drift bound for the random-delay displays: probed max of
    // ||A (w_{t-tau_t} - w_{t-tau_bar})|| with a 2x safety factor
    inputs.rho = 2.0 * drift_max;
    inputs.rho_source = "estimated";
    stab_inputs.sigma = inputs.sigma + inputs.rho;
    stab_inputs.sigma_source = "empirical+rho-estimated";
  }
  if (!result.spectral.spectrum.empty()) {
    CoeffTable table = pi_coeffs(result.spectral.spectrum, config.eta, delay,
                                 config.iters);
    auto [s1, s2] = weighted_partial_sums(table, config.iters);
    result.prop1 =
        prop1_bound(stab_inputs, s1, s2, table.weighted_norms[config.iters]);
  }
  if (config.random_delays) {
    result.thm = corollary_random_bound(inputs);
  } else {
    result.thm = inputs.lambda > 0 ? thm2_bound(inputs) : thm1_bound(inputs);
  }

  for (auto& rec : records) {
    rec.bound_prop1 = result.prop1 ? result.prop1->total : 0.0;
    rec.bound_thm = result.thm.total;
  }
  result.records = std::move(records);
  return result;
}

LemmaSweepResult verify_lemma_sweep(const ExperimentConfig& config) {
  const std::vector<double> spectrum =
      config.synthetic.spectrum.values(config.synthetic.d);
  const double mu = *std::max_element(spectrum.begin(), spectrum.end());
  LemmaSweepResult result;
  for (int tau : config.tau_grid) {
    for (double scale : config.eta_scales) {
      const double eta = scale / (20.0 * mu * (tau + 1));
      const long T = config.lemma_iters > 0
                         ? config.lemma_iters
                         : 10 * static_cast<long>(std::ceil(t0_threshold(tau))) +
                               1000;
      CoeffTable table = pi_coeffs(spectrum, eta, tau, T);
      Lemma2Report report = verify_lemma2(table, mu);
      LemmaSweepRow row;
      row.tau = tau;
      row.eta = eta;
      row.t0 = table.t0;
      row.applicable = report.applicable();
      row.pass = report.pass();
      const RegimeCheck& worst =
          report.bounded_decay.applicable ? report.bounded_decay
                                          : report.unconditional;
      row.worst_margin = worst.worst_margin;
      row.worst_t = worst.worst_t;
      result.rows.push_back(row);
      if (row.applicable && !row.pass) result.all_pass = false;
    }
  }
  return result;
}

void dump_coeff_table(const CoeffTable& table, double mu, std::ostream& out) {
  const long ceil_t0 = static_cast<long>(std::ceil(table.t0));
  const double min_eig =
      *std::min_element(table.eigenvalues.begin(), table.eigenvalues.end());
  const double base = 1.0 - table.eta * min_eig;
  const bool in_regime = table.eta <= 1.0 / (20.0 * mu * (table.tau + 1));
  out << "t,norm,weighted_norm,S1,S2,bound\n";
  for (long t = 0; t <= table.T; ++t) {
    double bound = std::numeric_limits<double>::quiet_NaN();
    if (in_regime) bound = t < ceil_t0 ? 1.0 : 3.0 * std::pow(base, t + 1);
    out << t << ',' << format_double(table.norms[t]) << ','
        << format_double(table.weighted_norms[t]) << ','
        << format_double(table.s1_prefix[t]) << ','
        << format_double(table.s2_prefix[t]) << ',' << format_double(bound)
        << '\n';
  }
}

std::vector<BoundReport> evaluate_bounds(const ExperimentConfig& config) {
  const BoundInputs& in = config.bound_inputs;
  std::vector<BoundReport> reports;
  reports.push_back(thm1_bound(in));
  if (in.lambda > 0) reports.push_back(thm2_bound(in));
  if (in.rho >= 0) reports.push_back(corollary_random_bound(in));
  return reports;
}

namespace {

void append_record_csv(const ResultRecord& r, bool stability, std::ostream& out) {
  out << r.mode << ',' << r.dataset << ',' << r.delay << ',' << r.seed << ','
      << r.t << ',' << format_double(r.train_loss) << ','
      << format_double(r.test_loss) << ',' << format_double(r.gen_error);
  if (stability) {
    out << ',' << r.replaced_index << ',' << format_double(r.loss_gap) << ','
        << format_double(r.bound_prop1) << ',' << format_double(r.bound_thm);
  }
  out << '\n';
}

ordered_json record_json(const ResultRecord& r, bool stability) {
  ordered_json j;
  j["mode"] = r.mode;
  j["dataset"] = r.dataset;
  j["delay"] = r.delay;
  j["seed"] = r.seed;
  j["t"] = r.t;
  j["train_loss"] = r.train_loss;
  j["test_loss"] = r.test_loss;
  j["gen_error"] = r.gen_error;
  if (stability) {
    j["replaced_index"] = r.replaced_index;
    j["loss_gap"] = r.loss_gap;
    j["bound_prop1"] = r.bound_prop1;
    j["bound_thm"] = r.bound_thm;
  }
  if (r.diverged) j["diverged"] = true;
  return j;
}

}  // namespace

void write_csv(const std::vector<ResultRecord>& records, Mode mode,
               std::uint64_t digest, std::ostream& out) {
  const bool stability = mode == Mode::Stability;
  out << "# config_digest=" << format_hex64(digest) << '\n';
  out << "mode,dataset,delay,seed,t,train_loss,test_loss,gen_error";
  if (stability) out << ",replaced_index,loss_gap,bound_prop1,bound_thm";
  out << '\n';
  for (const auto& r : records) append_record_csv(r, stability, out);
}

void write_json(const std::vector<ResultRecord>& records,
                const ExperimentConfig& config, std::ostream& out) {
  const bool stability = config.mode == Mode::Stability;
  ordered_json j;
  j["config_digest"] = format_hex64(config_digest(config));
  j["mode"] = to_string(config.mode);
  j["records"] = ordered_json::array();
  for (const auto& r : records) j["records"].push_back(record_json(r, stability));
  out << j.dump(2) << '\n';
}

std::vector<std::string> run_and_emit(const ExperimentConfig& config) {
  config.validate();
  namespace fs = std::filesystem;
  fs::create_directories(config.out_dir);
  const std::uint64_t digest = config_digest(config);
  std::vector<std::string> written;

  auto open = [&](const std::string& name) {
    const std::string path = (fs::path(config.out_dir) / name).string();
    written.push_back(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
  };

  auto emit_records = [&](const std::vector<ResultRecord>& records) {
    if (config.format == "csv") {
      auto out = open(to_string(config.mode) + ".csv");
      write_csv(records, config.mode, digest, out);
    } else {
      auto out = open(to_string(config.mode) + ".json");
      write_json(records, config, out);
    }
  };

  switch (config.mode) {
    case Mode::GenSweep: {
      emit_records(run_gen_sweep(config).records);
      break;
    }
    case Mode::Stability: {
      StabilityResult res = estimate_avg_stability(config);
      emit_records(res.records);
      break;
    }
    case Mode::VerifyLemma: {
      LemmaSweepResult res = verify_lemma_sweep(config);
      auto out = open("verify-lemma.csv");
      out << "# config_digest=" << format_hex64(digest) << '\n';
      out << "tau,eta,t0,applicable,pass,worst_margin,worst_t\n";
      for (const auto& row : res.rows) {
        out << row.tau << ',' << format_double(row.eta) << ','
            << format_double(row.t0) << ',' << (row.applicable ? 1 : 0) << ','
            << (row.pass ? 1 : 0) << ',' << format_double(row.worst_margin)
            << ',' << row.worst_t << '\n';
      }
      break;
    }
    case Mode::Bounds: {
      auto reports = evaluate_bounds(config);
      ordered_json j;
      j["config_digest"] = format_hex64(digest);
      const auto& in = config.bound_inputs;
      j["inputs"] = {{"n", in.n},         {"T", in.T},
                     {"tau", in.tau},     {"eta", in.eta},
                     {"mu", in.mu},       {"lambda", in.lambda},
                     {"r", in.r},         {"sigma", in.sigma},
                     {"rho", in.rho},     {"w0_norm", in.w0_norm},
                     {"t0", in.t0()},     {"in_regime", in.in_regime()}};
      j["reports"] = ordered_json::array();
      for (const auto& rep : reports) {
        ordered_json terms;
        for (const auto& [name, value] : rep.terms) terms[name] = value;
        j["reports"].push_back({{"mode", rep.mode},
                                {"terms", terms},
                                {"total", rep.total},
                                {"flags", rep.flags}});
      }
      auto out = open("bounds.json");
      out << j.dump(2) << '\n';
      break;
    }
    case Mode::ParseCheck: {
      Dataset ds = load_libsvm_file(config.dataset_path);
      ordered_json j;
      j["config_digest"] = format_hex64(digest);
      j["dataset"] = ds.name;
      j["n"] = ds.size();
      j["d"] = ds.dim;
      j["round_trip_ok"] =
          serialize_libsvm(parse_libsvm(serialize_libsvm(ds), ds.name, ds.dim)) ==
          serialize_libsvm(ds);
      auto out = open("parse-check.json");
      out << j.dump(2) << '\n';
      break;
    }
  }
  return written;
}

}  // namespace delaylab
