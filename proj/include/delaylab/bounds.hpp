#pragma once

#include <string>
#include <utility>
#include <vector>

namespace delaylab {

// Constants feeding the closed-form generalization bounds. tau doubles as
// the upper bound tau_bar for random-delay schedules.
struct BoundInputs {
  double n = 0;
  long T = 0;
  int tau = 0;
  double eta = 0;
  double mu = 0;
  double lambda = 0;   // 0 when merely convex
  double r = 0;        // realized ||b|| or declared
  double sigma = 0;    // empirical noise level or declared
  double rho = -1;     // random-delay drift bound; < 0 means unset
  double w0_norm = 0;

  std::string sigma_source = "declared";
  std::string r_source = "declared";
  std::string rho_source = "declared";

  double t0() const;             // (tau+1) ln(2(tau+1))
  bool in_regime() const;        // eta <= 1/(20 mu (tau+1))
  double regime_eta_cap() const; // 1/(20 mu (tau+1))
};

struct BoundReport {
  std::string mode;
  std::vector<std::pair<std::string, double>> terms;
  double total = 0;
  std::vector<std::string> flags;

  double term(const std::string& name) const;
  bool has_flag(const std::string& name) const;
};

// Average-stability bound of delayed SGD evaluated from the generating-
// function partial sums: 2 eta r sigma / n * S1
//   + 2 eta sigma ||w0|| / n * ||sqrt(A)[x^t]pi|| * S2
//   + 2 eta^2 sigma (r+sigma) / n * S2^2.
BoundReport prop1_bound(const BoundInputs& in, double s1, double s2,
                        double weighted_norm_at_t);

// Convex-case generalization bound after T iterations:
//   sigma(r+sigma)/(n mu) [sqrt(T-tau) + 12 mu ||w0|| + ln^2(tau+1)]
//   + sigma(r+sigma)(T-tau)/(n mu tau).
// The last term is undefined at tau = 0 and reported as inapplicable.
BoundReport thm1_bound(const BoundInputs& in);

// Strongly convex case (lambda > 0):
//   2 sigma(r+sigma) eta t0 / n [1 + 3 mu ||w0|| + mu eta t0 + 12 sqrt(mu/(e lambda))]
//   + 42 sigma(r+sigma)/(n lambda) + 36 sigma ||w0|| sqrt(mu/(e lambda)) / n.
BoundReport thm2_bound(const BoundInputs& in);

// Random bounded delays: the fixed-delay displays with tau_bar in place of
// tau and (sigma+rho), (r+sigma+rho) in place of sigma, (r+sigma). Picks the
// strongly convex display when lambda > 0, the convex one otherwise.
BoundReport corollary_random_bound(const BoundInputs& in);

// The per-term bounds of the proof pipeline; dominate the computed partial
// sums when the learning rate is in regime.
struct AppendixBounds {
  double c1 = 0, c2 = 0, c3 = 0;     // convex: S1, single weighted norm, S2
  bool has_strongly_convex = false;
  double sc1 = 0, sc2 = 0, sc3 = 0;
};
AppendixBounds appendix_term_bounds(const BoundInputs& in, long t);

// eta * t0 <= ln(2(tau+1)) / (20 mu) whenever eta is in regime.
double eta_t0_product(const BoundInputs& in);
double eta_t0_cap(const BoundInputs& in);

}  // namespace delaylab
