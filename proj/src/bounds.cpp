#include "delaylab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "delaylab/genfun.hpp"

namespace delaylab {

namespace {

void validate_common(const BoundInputs& in) {
  if (!(in.n > 0)) throw std::invalid_argument("n must be positive");
  if (!(in.eta > 0)) throw std::invalid_argument("eta must be positive");
  if (!(in.mu > 0)) throw std::invalid_argument("mu must be positive");
  if (in.T < in.tau) throw std::invalid_argument("T must be at least tau");
}

void flag_regime(const BoundInputs& in, BoundReport& report) {
  if (!in.in_regime()) report.flags.push_back("out-of-regime");
  if (in.sigma_source != "declared") report.flags.push_back("sigma:" + in.sigma_source);
  if (in.r_source != "declared") report.flags.push_back("r:" + in.r_source);
}

void finish(BoundReport& report) {
  report.total = 0;
  for (const auto& [name, value] : report.terms) report.total += value;
}

}  // namespace

double BoundInputs::t0() const { return t0_threshold(tau); }

double BoundInputs::regime_eta_cap() const { return 1.0 / (20.0 * mu * (tau + 1)); }

bool BoundInputs::in_regime() const { return eta <= regime_eta_cap(); }

double BoundReport::term(const std::string& name) const {
  for (const auto& [k, v] : terms) {
    if (k == name) return v;
  }
  throw std::out_of_range("no bound term named " + name);
}

bool BoundReport::has_flag(const std::string& name) const {
  return std::find(flags.begin(), flags.end(), name) != flags.end();
}

BoundReport prop1_bound(const BoundInputs& in, double s1, double s2,
                        double weighted_norm_at_t) {
  validate_common(in);
  BoundReport report;
  report.mode = "prop1";
  flag_regime(in, report);
  report.terms.emplace_back("noise_drift", 2.0 * in.eta * in.r * in.sigma / in.n * s1);
  report.terms.emplace_back(
      "init_coupling",
      2.0 * in.eta * in.sigma * in.w0_norm / in.n * weighted_norm_at_t * s2);
  report.terms.emplace_back(
      "noise_square",
      2.0 * in.eta * in.eta * in.sigma * (in.r + in.sigma) / in.n * s2 * s2);
  finish(report);
  return report;
}

BoundReport thm1_bound(const BoundInputs& in) {
  validate_common(in);
  BoundReport report;
  report.mode = "thm1";
  flag_regime(in, report);
  const double lead = in.sigma * (in.r + in.sigma) / (in.n * in.mu);
  const double span = static_cast<double>(in.T - in.tau);
  const double log_term = std::log(in.tau + 1.0);
  report.terms.emplace_back("sqrt_span", lead * std::sqrt(span));
  report.terms.emplace_back("init", lead * 12.0 * in.mu * in.w0_norm);
  report.terms.emplace_back("log_sq", lead * log_term * log_term);
  if (in.tau >= 1) {
    report.terms.emplace_back(
        "linear_span", in.sigma * (in.r + in.sigma) * span / (in.n * in.mu * in.tau));
  } else {
    report.flags.push_back("tau-zero-linear-term-inapplicable");
  }
  finish(report);
  return report;
}

BoundReport thm2_bound(const BoundInputs& in) {
  validate_common(in);
  if (!(in.lambda > 0)) {
    throw std::invalid_argument("thm2 requires strong convexity (lambda > 0)");
  }
  BoundReport report;
  report.mode = "thm2";
  flag_regime(in, report);
  const double t0 = in.t0();
  const double root = std::sqrt(in.mu / (std::numbers::e * in.lambda));
  const double bracket =
      1.0 + 3.0 * in.mu * in.w0_norm + in.mu * in.eta * t0 + 12.0 * root;
  report.terms.emplace_back(
      "eta_t0", 2.0 * in.sigma * (in.r + in.sigma) * in.eta * t0 / in.n * bracket);
  report.terms.emplace_back("inverse_lambda",
                            42.0 * in.sigma * (in.r + in.sigma) / (in.n * in.lambda));
  report.terms.emplace_back("init", 36.0 * in.sigma * in.w0_norm * root / in.n);
  finish(report);
  return report;
}

BoundReport corollary_random_bound(const BoundInputs& in) {
  validate_common(in);
  if (in.rho < 0) {
    throw std::invalid_argument(
        "random-delay bound needs rho (estimate or declare it)");
  }
  BoundInputs lifted = in;
  // sigma -> sigma + rho turns every sigma(r+sigma) into (sigma+rho)(r+sigma+rho)
  lifted.sigma = in.sigma + in.rho;
  BoundReport report = in.lambda > 0 ? thm2_bound(lifted) : thm1_bound(lifted);
  report.mode = "corollary-random";
  if (in.rho_source != "declared") report.flags.push_back("rho:" + in.rho_source);
  return report;
}

AppendixBounds appendix_term_bounds(const BoundInputs& in, long t) {
  validate_common(in);
  if (t <= in.tau) throw std::invalid_argument("appendix bounds need t > tau");
  const double t0 = in.t0();
  const double e = std::numbers::e;
  AppendixBounds out;
  const double span = static_cast<double>(t - in.tau);
  out.c1 = span;
  out.c2 = 3.0 / std::sqrt(2.0 * in.eta * e * (t + 1));
  out.c3 = t0 * std::sqrt(in.mu) + 6.0 * std::sqrt(span / (2.0 * e * in.eta));
  if (in.lambda > 0) {
    out.has_strongly_convex = true;
    out.sc1 = t0 + 3.0 / (in.eta * in.lambda);
    out.sc2 = 3.0 * std::sqrt(in.mu);
    out.sc3 = t0 * std::sqrt(in.mu) + 6.0 / (in.eta * std::sqrt(e * in.lambda));
  }
  return out;
}

double eta_t0_product(const BoundInputs& in) { return in.eta * in.t0(); }

double eta_t0_cap(const BoundInputs& in) {
  return std::log(2.0 * (in.tau + 1)) / (20.0 * in.mu);
}

}  // namespace delaylab
