#include "delaylab/genfun.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace delaylab {

double t0_threshold(int tau) {
  return (tau + 1) * std::log(2.0 * (tau + 1));
}

CoeffTable pi_coeffs(std::span<const double> spectrum, double eta, int tau, long T,
                     bool partial_spectrum) {
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  if (tau < 0) throw std::invalid_argument("tau must be nonnegative");
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  if (spectrum.empty()) throw std::invalid_argument("empty spectrum");
  for (double a : spectrum) {
    if (!(a >= 0.0)) throw std::invalid_argument("eigenvalues must be nonnegative");
  }

  CoeffTable table;
  table.eta = eta;
  table.tau = tau;
  table.T = T;
  table.t0 = t0_threshold(tau);
  table.eigenvalues.assign(spectrum.begin(), spectrum.end());
  table.partial_spectrum = partial_spectrum;
  table.norms.assign(T + 1, 0.0);
  table.weighted_norms.assign(T + 1, 0.0);

  table.coeffs.reserve(spectrum.size());
  for (double a : spectrum) {
    std::vector<double> c(T + 1, 1.0);
    const double step = eta * a;
    for (long t = tau + 1; t <= T; ++t) {
      c[t] = c[t - 1] - step * c[t - tau - 1];
    }
    const double sqrt_a = std::sqrt(a);
    for (long t = 0; t <= T; ++t) {
      const double mag = std::abs(c[t]);
      table.norms[t] = std::max(table.norms[t], mag);
      table.weighted_norms[t] = std::max(table.weighted_norms[t], sqrt_a * mag);
    }
    table.coeffs.push_back(std::move(c));
  }

  table.s1_prefix.resize(T + 1);
  table.s2_prefix.resize(T + 1);
  double s1 = 0.0, s2 = 0.0;
  for (long t = 0; t <= T; ++t) {
    s1 += table.norms[t];
    s2 += table.weighted_norms[t];
    table.s1_prefix[t] = s1;
    table.s2_prefix[t] = s2;
  }
  return table;
}

Lemma2Report verify_lemma2(const CoeffTable& table, double mu, double tol) {
  const double max_eig =
      *std::max_element(table.eigenvalues.begin(), table.eigenvalues.end());
  if (mu < max_eig) {
    throw std::invalid_argument("mu must dominate the spectrum");
  }
  Lemma2Report report;
  report.mu = mu;
  report.t0 = table.t0;
  report.tol = tol;

  auto track = [](RegimeCheck& check, double margin, long t) {
    if (check.worst_t < 0 || margin > check.worst_margin) {
      check.worst_margin = margin;
      check.worst_t = t;
    }
  };

  // eta <= 1/(mu tau): ||[x^t] pi|| <= 1 for all t. Undefined at tau = 0;
  // the 1/20 regime below covers that case.
  if (table.tau >= 1 && table.eta <= 1.0 / (mu * table.tau)) {
    auto& check = report.unconditional;
    check.applicable = true;
    for (long t = 0; t <= table.T; ++t) {
      track(check, table.norms[t] - 1.0, t);
    }
    check.pass = check.worst_margin <= tol;
  }

  if (table.eta <= 1.0 / (20.0 * mu * (table.tau + 1))) {
    auto& check = report.bounded_decay;
    check.applicable = true;
    const long ceil_t0 = static_cast<long>(std::ceil(table.t0));
    // max_j (1 - eta a_j) sits at the smallest eigenvalue
    const double min_eig =
        *std::min_element(table.eigenvalues.begin(), table.eigenvalues.end());
    const double base = 1.0 - table.eta * min_eig;
    for (long t = 0; t <= table.T; ++t) {
      const double bound = t < ceil_t0 ? 1.0 : 3.0 * std::pow(base, t + 1);
      track(check, table.norms[t] - bound, t);
    }
    check.pass = check.worst_margin <= tol;
  }
  return report;
}

std::pair<double, double> weighted_partial_sums(const CoeffTable& table,
                                                long upto_t) {
  if (upto_t <= table.tau) {
    throw std::invalid_argument("partial sums need t > tau");
  }
  if (upto_t > table.T) {
    throw std::invalid_argument("t exceeds table horizon");
  }
  const long last = upto_t - table.tau - 1;
  return {table.s1_prefix[last], table.s2_prefix[last]};
}

}  // namespace delaylab
