#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace delaylab {

// Phase boundary (tau+1) * ln(2(tau+1)) after which the coefficients of
// pi(x) = (I - Ix + eta A x^{tau+1})^{-1} decay geometrically.
double t0_threshold(int tau);

// Per-eigenvalue coefficients of pi(x). A diagonalizes the recursion, so each
// eigenvalue a_j carries a scalar channel
//   c_j[t] = 1                                   for 0 <= t <= tau,
//   c_j[t] = c_j[t-1] - eta a_j c_j[t-tau-1]     for t > tau,
// and operator norms are maxima over channels.
struct CoeffTable {
  double eta = 0.0;
  int tau = 0;
  long T = 0;
  double t0 = 0.0;
  std::vector<double> eigenvalues;
  std::vector<std::vector<double>> coeffs;  // [channel][0..T]
  std::vector<double> norms;                // max_j |c_j[t]|
  std::vector<double> weighted_norms;       // max_j sqrt(a_j) |c_j[t]|
  std::vector<double> s1_prefix;            // sum of norms[0..t]
  std::vector<double> s2_prefix;            // sum of weighted_norms[0..t]
  // set when the spectrum is a top-k/bottom-k subset; norms are then lower
  // bounds on the true operator norms
  bool partial_spectrum = false;
};

CoeffTable pi_coeffs(std::span<const double> spectrum, double eta, int tau, long T,
                     bool partial_spectrum = false);

struct RegimeCheck {
  bool applicable = false;
  bool pass = true;
  double worst_margin = 0.0;  // max over t of (value - bound); <= tol passes
  long worst_t = -1;
};

struct Lemma2Report {
  double mu = 0.0;
  double t0 = 0.0;
  double tol = 0.0;
  RegimeCheck unconditional;  // eta <= 1/(mu tau), tau >= 1: norms <= 1 for all t
  RegimeCheck bounded_decay;  // eta <= 1/(20 mu (tau+1)): <=1 then 3 max (1-eta a)^'t+1'
  bool applicable() const { return unconditional.applicable || bounded_decay.applicable; }
  bool pass() const {
    return (!unconditional.applicable || unconditional.pass) &&
           (!bounded_decay.applicable || bounded_decay.pass);
  }
};

// Checks the coefficient bounds; mu must dominate the spectrum. Out-of-regime
// learning rates yield "not applicable", never a failure.
Lemma2Report verify_lemma2(const CoeffTable& table, double mu, double tol = 1e-9);

// S1 = sum_{i=0}^{t-tau-1} norms[i], S2 likewise for weighted norms
// (the partial sums of the average-stability bound). Requires tau < upto_t <= T.
std::pair<double, double> weighted_partial_sums(const CoeffTable& table, long upto_t);

}  // namespace delaylab
