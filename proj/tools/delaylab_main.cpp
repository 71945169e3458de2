// delaylab: delayed-SGD generalization laboratory.
//
// Subcommands:
//   parse         check a LIBSVM file and print a summary
//   sweep         generalization error vs delay
//   stability     twin-run average-stability estimate vs the closed-form bounds
//   verify-lemma  coefficient-bound verification over a (tau, eta) grid
//   bounds        evaluate the closed-form bound formulas

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "delaylab/common.hpp"
#include "delaylab/harness.hpp"

namespace {

using namespace delaylab;

SpectrumSpec parse_spectrum(const std::string& text) {
  auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  std::vector<double> args;
  if (colon != std::string::npos) {
    std::istringstream in(text.substr(colon + 1));
    std::string tok;
    while (std::getline(in, tok, ',')) args.push_back(std::stod(tok));
  }
  if (kind == "uniform" && args.size() == 2) {
    return SpectrumSpec::uniform(args[0], args[1]);
  }
  if (kind == "geometric" && args.size() == 2) {
    return SpectrumSpec::geometric(args[0], args[1]);
  }
  if (kind == "explicit" && !args.empty()) {
    return SpectrumSpec::explicit_list(args);
  }
  throw CLI::ValidationError(
      "spectrum", "expected uniform:lo,hi | geometric:max,ratio | explicit:v1,v2,...");
}

struct CommonOpts {
  std::string spectrum_text;
  std::uint64_t single_seed = 0;
  bool has_single_seed = false;
};

void add_problem_options(CLI::App* cmd, ExperimentConfig& config,
                         CommonOpts& opts) {
  cmd->add_option("--data", config.dataset_path,
                  "LIBSVM file (omit for synthetic data)");
  cmd->add_option("--train-fraction", config.split.train_fraction,
                  "train split fraction");
  cmd->add_option("--split-seed", config.split.seed, "split shuffle seed");
  cmd->add_option("--synth-d", config.synthetic.d, "synthetic dimension");
  cmd->add_option("--synth-n", config.synthetic.n, "synthetic train size");
  cmd->add_option("--synth-test-n", config.synthetic.test_n,
                  "synthetic test size");
  cmd->add_option("--spectrum", opts.spectrum_text,
                  "uniform:lo,hi | geometric:max,ratio | explicit:v1,...");
  cmd->add_option("--noise-std", config.synthetic.noise_std,
                  "synthetic label noise");
  cmd->add_option("--synth-seed", config.synthetic.seed, "synthetic data seed");
  cmd->add_option("--ridge", config.ridge, "ridge added to the quadratic");
}

void add_run_options(CLI::App* cmd, ExperimentConfig& config, CommonOpts& opts) {
  cmd->add_option("--eta", config.eta, "learning rate");
  cmd->add_option("--iters", config.iters, "iterations T");
  cmd->add_option("--batch", config.batch_size, "batch size");
  cmd->add_option("--delays", config.delays, "delay list")->delimiter(',');
  cmd->add_flag("--random-delays", config.random_delays,
                "uniform random delays in {0..tau_bar}");
  cmd->add_option("--seeds", config.seeds, "sampler seeds")->delimiter(',');
  cmd->add_option("--seed", opts.single_seed, "single sampler seed")
      ->each([&opts](const std::string&) { opts.has_single_seed = true; });
  cmd->add_option("--stride", config.record_stride,
                  "checkpoint stride (0: T/100)");
  cmd->add_option("--out", config.out_dir, "output directory");
  cmd->add_option("--format", config.format, "csv or json");
}

void finalize(ExperimentConfig& config, const CommonOpts& opts) {
  if (!opts.spectrum_text.empty()) {
    config.synthetic.spectrum = parse_spectrum(opts.spectrum_text);
  }
  if (opts.has_single_seed) config.seeds = {opts.single_seed};
}

int emit_and_report(ExperimentConfig& config, const CommonOpts& opts) {
  finalize(config, opts);
  config.validate();
  std::cout << "config digest: " << format_hex64(config_digest(config)) << '\n';
  for (const auto& path : run_and_emit(config)) {
    std::cout << "wrote " << path << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"delayed-SGD stability and generalization laboratory"};
  // config keys live in [sweep]/[stability]/... sections (or dotted keys);
  // pass --config before the subcommand
  app.set_config("--config");
  app.require_subcommand(1);

  ExperimentConfig config;
  CommonOpts opts;

  // parse
  std::string parse_path;
  int parse_dim = -1;
  auto* parse_cmd = app.add_subcommand("parse", "check a LIBSVM file");
  parse_cmd->add_option("file", parse_path, "LIBSVM file")->required();
  parse_cmd->add_option("--dim", parse_dim, "declared dimension override");

  // sweep
  auto* sweep_cmd =
      app.add_subcommand("sweep", "generalization error vs delay");
  add_problem_options(sweep_cmd, config, opts);
  add_run_options(sweep_cmd, config, opts);

  // stability
  auto* stab_cmd = app.add_subcommand(
      "stability", "twin-run average stability vs the closed-form bounds");
  add_problem_options(stab_cmd, config, opts);
  add_run_options(stab_cmd, config, opts);
  stab_cmd->add_option("--replacements", config.num_replacements,
                       "number of replaced indices");

  // verify-lemma
  auto* lemma_cmd = app.add_subcommand(
      "verify-lemma", "coefficient bounds over a (tau, eta) grid");
  bool dump_coeffs = false;
  lemma_cmd->add_option("--synth-d", config.synthetic.d, "spectrum size");
  lemma_cmd->add_option("--spectrum", opts.spectrum_text, "spectrum spec");
  lemma_cmd->add_option("--tau-grid", config.tau_grid, "delays to check")
      ->delimiter(',');
  lemma_cmd->add_option("--eta-scales", config.eta_scales,
                        "fractions of the regime cap 1/(20 mu (tau+1))")
      ->delimiter(',');
  lemma_cmd->add_option("--iters", config.lemma_iters,
                        "series length (0: 10 ceil(t0) + 1000)");
  lemma_cmd->add_option("--out", config.out_dir, "output directory");
  lemma_cmd->add_flag("--dump-coeffs", dump_coeffs,
                      "write one coefficient-table CSV per grid point");

  // bounds
  auto* bounds_cmd =
      app.add_subcommand("bounds", "evaluate the closed-form bound formulas");
  auto& bi = config.bound_inputs;
  bounds_cmd->add_option("--n", bi.n, "training set size")->required();
  bounds_cmd->add_option("--T", bi.T, "iterations")->required();
  bounds_cmd->add_option("--tau", bi.tau, "delay (or tau_bar)")->required();
  bounds_cmd->add_option("--eta", bi.eta, "learning rate")->required();
  bounds_cmd->add_option("--mu", bi.mu, "smoothness")->required();
  bounds_cmd->add_option("--lambda", bi.lambda, "strong convexity (0: convex)");
  bounds_cmd->add_option("--r", bi.r, "bound on ||b||")->required();
  bounds_cmd->add_option("--sigma", bi.sigma, "noise bound")->required();
  bounds_cmd->add_option("--rho", bi.rho, "random-delay drift bound");
  bounds_cmd->add_option("--w0-norm", bi.w0_norm, "initial point norm");
  bounds_cmd->add_option("--out", config.out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (parse_cmd->parsed()) {
      Dataset ds = load_libsvm_file(parse_path, parse_dim);
      std::cout << "dataset: " << ds.name << "\nn: " << ds.size()
                << "\nd: " << ds.dim << '\n';
      return 0;
    }
    if (sweep_cmd->parsed()) {
      config.mode = Mode::GenSweep;
      finalize(config, opts);
      config.validate();
      std::cout << "config digest: " << format_hex64(config_digest(config))
                << '\n';
      SweepResult result = run_gen_sweep(config);
      for (const auto& s : result.summary) {
        std::cout << "delay " << s.delay << ": final gen error "
                  << format_double(s.final_gen_mean) << " +- "
                  << format_double(s.final_gen_std);
        if (s.diverged_runs > 0) std::cout << " (" << s.diverged_runs << " diverged)";
        std::cout << '\n';
      }
      for (const auto& path : run_and_emit(config)) {
        std::cout << "wrote " << path << '\n';
      }
      return 0;
    }
    if (stab_cmd->parsed()) {
      config.mode = Mode::Stability;
      finalize(config, opts);
      config.validate();
      std::cout << "config digest: " << format_hex64(config_digest(config))
                << '\n';
      StabilityResult result = estimate_avg_stability(config);
      std::cout << "stability estimate: " << format_double(result.estimate)
                << " (signed " << format_double(result.signed_mean) << ", se "
                << format_double(result.std_error) << ")\n"
                << "sigma (empirical): " << format_double(result.sigma_hat)
                << ", r (realized): " << format_double(result.r_realized)
                << ", mu: " << format_double(result.spectral.mu)
                << ", lambda: " << format_double(result.spectral.lambda) << '\n';
      if (result.prop1) {
        std::cout << "prop1 bound: " << format_double(result.prop1->total) << '\n';
      }
      std::cout << result.thm.mode
                << " bound: " << format_double(result.thm.total) << '\n';
      for (const auto& path : run_and_emit(config)) {
        std::cout << "wrote " << path << '\n';
      }
      return 0;
    }
    if (lemma_cmd->parsed()) {
      config.mode = Mode::VerifyLemma;
      finalize(config, opts);
      std::cout << "config digest: " << format_hex64(config_digest(config))
                << '\n';
      LemmaSweepResult result = verify_lemma_sweep(config);
      for (const auto& row : result.rows) {
        std::cout << "tau=" << row.tau << " eta=" << format_double(row.eta)
                  << " t0=" << format_double(row.t0) << ' '
                  << (!row.applicable ? "not-applicable"
                                      : (row.pass ? "pass" : "FAIL"))
                  << " worst_margin=" << format_double(row.worst_margin) << '\n';
      }
      if (dump_coeffs) {
        const auto spectrum =
            config.synthetic.spectrum.values(config.synthetic.d);
        const double mu = *std::max_element(spectrum.begin(), spectrum.end());
        namespace fs = std::filesystem;
        fs::create_directories(config.out_dir);
        for (const auto& row : result.rows) {
          const long T = config.lemma_iters > 0
                             ? config.lemma_iters
                             : 10 * static_cast<long>(std::ceil(row.t0)) + 1000;
          CoeffTable table = pi_coeffs(spectrum, row.eta, row.tau, T);
          std::ofstream out(fs::path(config.out_dir) /
                            ("coeffs_tau" + std::to_string(row.tau) + "_eta" +
                             format_double(row.eta) + ".csv"));
          dump_coeff_table(table, mu, out);
        }
      }
      for (const auto& path : run_and_emit(config)) {
        std::cout << "wrote " << path << '\n';
      }
      return result.all_pass ? 0 : 1;
    }
    if (bounds_cmd->parsed()) {
      config.mode = Mode::Bounds;
      return emit_and_report(config, opts);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
