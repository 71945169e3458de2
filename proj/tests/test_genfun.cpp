#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "delaylab/common.hpp"
#include "delaylab/genfun.hpp"

using namespace delaylab;

namespace {

// Cauchy-product oracle: convolving the channel with the polynomial
// kappa(x) = 1 - x + eta*a x^{tau+1} must give the unit series.
double max_inversion_defect(const CoeffTable& table) {
  double worst = 0.0;
  for (std::size_t j = 0; j < table.eigenvalues.size(); ++j) {
    const auto& c = table.coeffs[j];
    const double step = table.eta * table.eigenvalues[j];
    for (long t = 0; t <= table.T; ++t) {
      double conv = c[t];
      if (t >= 1) conv -= c[t - 1];
      if (t >= table.tau + 1) conv += step * c[t - table.tau - 1];
      const double expected = t == 0 ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(conv - expected));
    }
  }
  return worst;
}

}  // namespace

TEST_SUITE("genfun") {

TEST_CASE("tau=0 is the geometric series") {
  CoeffTable t = pi_coeffs(std::vector<double>{1.0}, 0.1, 0, 10);
  CHECK(t.coeffs[0][0] == 1.0);
  CHECK(t.coeffs[0][1] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(t.coeffs[0][2] == doctest::Approx(0.81).epsilon(1e-15));
  for (long k = 0; k <= 10; ++k) {
    CHECK(t.norms[k] == doctest::Approx(std::pow(0.9, k)).epsilon(1e-13));
  }
}

TEST_CASE("tau=1 hand recurrence") {
  CoeffTable t = pi_coeffs(std::vector<double>{1.0}, 0.1, 1, 6);
  const std::vector<double> expect = {1.0, 1.0, 0.9, 0.8, 0.71, 0.63, 0.559};
  for (std::size_t k = 0; k < expect.size(); ++k) {
    CHECK(t.coeffs[0][k] == doctest::Approx(expect[k]).epsilon(1e-12));
  }
}

TEST_CASE("prefix law: coefficients are 1 up to tau") {
  std::mt19937_64 rng(11);
  for (int tau : {0, 1, 3, 7, 16}) {
    std::vector<double> spec = {uniform01(rng), uniform01(rng) * 2};
    CoeffTable t = pi_coeffs(spec, 0.01, tau, tau + 20);
    for (long k = 0; k <= tau; ++k) {
      CHECK(t.norms[k] == 1.0);
      for (const auto& c : t.coeffs) CHECK(c[k] == 1.0);
    }
  }
}

TEST_CASE("inversion identity on random spectra") {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 25; ++rep) {
    const int d = 1 + static_cast<int>(uniform_index(rng, 8));
    const int tau = static_cast<int>(uniform_index(rng, 12));
    std::vector<double> spec(d);
    double mx = 0;
    for (double& a : spec) {
      a = 2.0 * uniform01(rng);
      mx = std::max(mx, a);
    }
    const double eta = uniform01(rng) / (20.0 * std::max(mx, 0.1) * (tau + 1));
    if (eta <= 0) continue;
    CoeffTable t = pi_coeffs(spec, eta, tau, 200 + tau);
    CHECK(max_inversion_defect(t) <= 1e-12);
  }
}

TEST_CASE("t0 formula") {
  CHECK(t0_threshold(3) == doctest::Approx(4.0 * std::log(8.0)).epsilon(1e-15));
  for (int tau = 0; tau <= 32; ++tau) {
    CHECK(t0_threshold(tau) ==
          doctest::Approx((tau + 1) * std::log(2.0 * (tau + 1))).epsilon(1e-12));
  }
}

TEST_CASE("lemma2 holds at a small tau=0 rate") {
  CoeffTable t = pi_coeffs(std::vector<double>{1.0}, 0.04, 0, 500);
  Lemma2Report rep = verify_lemma2(t, 1.0);
  CHECK(!rep.unconditional.applicable);  // 1/(mu tau) undefined at tau=0
  CHECK(rep.bounded_decay.applicable);
  CHECK(rep.bounded_decay.pass);
  CHECK(rep.pass());
}

TEST_CASE("lemma2 unconditional regime at the boundary") {
  // eta = 1/(mu tau) exactly; coefficients stay within [-1, 1]
  CoeffTable t = pi_coeffs(std::vector<double>{1.0}, 1.0, 1, 1000);
  Lemma2Report rep = verify_lemma2(t, 1.0);
  CHECK(rep.unconditional.applicable);
  CHECK(rep.unconditional.pass);
}

TEST_CASE("out-of-regime rates are not applicable, not failures") {
  CoeffTable t = pi_coeffs(std::vector<double>{1.0}, 1.0, 2, 200);  // eta = 1/mu
  Lemma2Report rep = verify_lemma2(t, 1.0);
  CHECK(!rep.applicable());
  CHECK(rep.pass());
}

TEST_CASE("verify_lemma2 requires a dominating mu") {
  CoeffTable t = pi_coeffs(std::vector<double>{2.0}, 0.001, 1, 10);
  CHECK_THROWS_AS(verify_lemma2(t, 1.0), std::invalid_argument);
}

TEST_CASE("partial sums on the tau=0 example") {
  CoeffTable t = pi_coeffs(std::vector<double>{1.0}, 0.1, 0, 10);
  auto [s1, s2] = weighted_partial_sums(t, 3);
  CHECK(s1 == doctest::Approx(2.71).epsilon(1e-14));
  CHECK(s2 == doctest::Approx(2.71).epsilon(1e-14));  // sqrt(1) weight
  CHECK_THROWS_AS(weighted_partial_sums(t, 0), std::invalid_argument);
  CHECK_THROWS_AS(weighted_partial_sums(t, 11), std::invalid_argument);
}

TEST_CASE("S1 is dominated by t - tau in regime") {
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const int tau = static_cast<int>(uniform_index(rng, 10));
    const double mu = 0.5 + uniform01(rng);
    std::vector<double> spec = {mu, mu * uniform01(rng)};
    const double eta = 1.0 / (20.0 * mu * (tau + 1));
    CoeffTable t = pi_coeffs(spec, eta, tau, 400);
    for (long upto : {tau + 1L, tau + 50L, 400L}) {
      auto [s1, s2] = weighted_partial_sums(t, upto);
      CHECK(s1 <= (upto - tau) + 1e-9);
    }
  }
}

TEST_CASE("input validation") {
  std::vector<double> spec = {1.0};
  CHECK_THROWS_AS(pi_coeffs(spec, -0.1, 0, 10), std::invalid_argument);
  CHECK_THROWS_AS(pi_coeffs(spec, 0.1, -1, 10), std::invalid_argument);
  CHECK_THROWS_AS(pi_coeffs(spec, 0.1, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(pi_coeffs(std::vector<double>{-1.0}, 0.1, 0, 10),
                  std::invalid_argument);
  CHECK_THROWS_AS(pi_coeffs(std::vector<double>{}, 0.1, 0, 10),
                  std::invalid_argument);
}

}  // TEST_SUITE
