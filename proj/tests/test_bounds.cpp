#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "delaylab/bounds.hpp"
#include "delaylab/common.hpp"
#include "delaylab/genfun.hpp"

using namespace delaylab;

namespace {

BoundInputs base_inputs() {
  BoundInputs in;
  in.n = 10;
  in.T = 3;
  in.tau = 0;
  in.eta = 0.1;
  in.mu = 1.0;
  in.r = 1.0;
  in.sigma = 1.0;
  in.w0_norm = 0.0;
  return in;
}

}  // namespace

TEST_SUITE("bounds") {

TEST_CASE("prop1 on the worked tau=0 example") {
  BoundInputs in = base_inputs();
  CoeffTable table = pi_coeffs(std::vector<double>{1.0}, 0.1, 0, 3);
  auto [s1, s2] = weighted_partial_sums(table, 3);
  BoundReport rep = prop1_bound(in, s1, s2, table.weighted_norms[3]);
  // independent arithmetic: S1 = S2 = 1 + 0.9 + 0.81
  CHECK(rep.term("noise_drift") ==
        doctest::Approx(2 * 0.1 * 1.0 * 1.0 / 10 * 2.71).epsilon(1e-12));
  CHECK(rep.term("init_coupling") == 0.0);
  CHECK(rep.term("noise_square") ==
        doctest::Approx(2 * 0.01 * 1.0 * 2.0 / 10 * 2.71 * 2.71).epsilon(1e-12));
  CHECK(rep.total == doctest::Approx(0.0542 + 0.0293764).epsilon(1e-9));
}

TEST_CASE("prop1 vanishes without noise") {
  BoundInputs in = base_inputs();
  in.sigma = 0.0;
  BoundReport rep = prop1_bound(in, 100.0, 100.0, 1.0);
  CHECK(rep.total == 0.0);
}

TEST_CASE("doubling n halves every bound") {
  BoundInputs in = base_inputs();
  in.T = 500;
  in.tau = 3;
  in.eta = 1.0 / (20 * in.mu * 4);
  in.lambda = 0.2;
  in.w0_norm = 1.0;
  BoundInputs in2 = in;
  in2.n *= 2;
  BoundReport p = prop1_bound(in, 10.0, 10.0, 1.0);
  BoundReport p2 = prop1_bound(in2, 10.0, 10.0, 1.0);
  CHECK(p2.total == doctest::Approx(0.5 * p.total).epsilon(1e-12));
  CHECK(thm1_bound(in2).total ==
        doctest::Approx(0.5 * thm1_bound(in).total).epsilon(1e-12));
  CHECK(thm2_bound(in2).total ==
        doctest::Approx(0.5 * thm2_bound(in).total).epsilon(1e-12));
}

TEST_CASE("thm1 on the worked example") {
  BoundInputs in;
  in.n = 100;
  in.T = 1000;
  in.tau = 9;
  in.eta = 1.0 / (20 * 1.0 * 10);
  in.mu = 1.0;
  in.r = 1.0;
  in.sigma = 1.0;
  BoundReport rep = thm1_bound(in);
  const double lg = std::log(10.0);
  const double expect = (2.0 / 100.0) * (std::sqrt(991.0) + lg * lg) +
                        (2.0 / 900.0) * 991.0;
  CHECK(rep.total == doctest::Approx(expect).epsilon(1e-12));
  CHECK(!rep.has_flag("tau-zero-linear-term-inapplicable"));
}

TEST_CASE("thm1 at T == tau keeps only init and log terms") {
  BoundInputs in = base_inputs();
  in.tau = 4;
  in.T = 4;
  in.w0_norm = 2.0;
  BoundReport rep = thm1_bound(in);
  const double lead = in.sigma * (in.r + in.sigma) / (in.n * in.mu);
  CHECK(rep.term("sqrt_span") == 0.0);
  CHECK(rep.term("linear_span") == 0.0);
  CHECK(rep.total ==
        doctest::Approx(lead * (12 * in.mu * 2.0 +
                                std::log(5.0) * std::log(5.0))).epsilon(1e-12));
}

TEST_CASE("thm1 flags tau = 0") {
  BoundInputs in = base_inputs();
  in.T = 100;
  BoundReport rep = thm1_bound(in);
  CHECK(rep.has_flag("tau-zero-linear-term-inapplicable"));
  CHECK(rep.terms.size() == 3);  // partial report
}

TEST_CASE("thm1/thm2 vanish without noise") {
  BoundInputs in = base_inputs();
  in.sigma = 0.0;
  in.T = 100;
  in.tau = 2;
  in.lambda = 0.5;
  CHECK(thm1_bound(in).total == 0.0);
  CHECK(thm2_bound(in).total == 0.0);
}

TEST_CASE("thm2 on the worked example") {
  BoundInputs in;
  in.n = 100;
  in.T = 100;
  in.tau = 1;
  in.eta = 1.0 / 40.0;
  in.mu = 1.0;
  in.lambda = 1.0;
  in.r = 1.0;
  in.sigma = 1.0;
  in.w0_norm = 0.0;
  BoundReport rep = thm2_bound(in);
  const double t0 = 2.0 * std::log(4.0);
  const double root = std::sqrt(1.0 / std::numbers::e);
  const double expect =
      (2.0 * 1.0 * 2.0 * (1.0 / 40.0) * t0 / 100.0) *
          (1.0 + 0.0 + (1.0 / 40.0) * t0 + 12.0 * root) +
      42.0 * 2.0 / 100.0 + 0.0;
  CHECK(rep.total == doctest::Approx(expect).epsilon(1e-12));
  CHECK(rep.term("init") == 0.0);  // w0 = 0 kills the third summand
}

TEST_CASE("thm2 requires strong convexity") {
  BoundInputs in = base_inputs();
  in.lambda = 0.0;
  CHECK_THROWS_AS(thm2_bound(in), std::invalid_argument);
}

TEST_CASE("corollary with rho = 0 equals the fixed-delay bounds") {
  BoundInputs in = base_inputs();
  in.T = 400;
  in.tau = 8;  // read as tau_bar
  in.eta = 1.0 / (20 * in.mu * 9);
  in.rho = 0.0;
  BoundReport cor = corollary_random_bound(in);
  BoundReport fixed = thm1_bound(in);
  CHECK(cor.total == doctest::Approx(fixed.total).epsilon(1e-15));
  REQUIRE(cor.terms.size() == fixed.terms.size());
  for (std::size_t i = 0; i < cor.terms.size(); ++i) {
    CHECK(cor.terms[i].second == fixed.terms[i].second);
  }

  in.lambda = 0.3;
  CHECK(corollary_random_bound(in).total ==
        doctest::Approx(thm2_bound(in).total).epsilon(1e-15));
}

TEST_CASE("corollary vanishes when sigma = rho = 0") {
  BoundInputs in = base_inputs();
  in.T = 100;
  in.tau = 2;
  in.sigma = 0.0;
  in.rho = 0.0;
  CHECK(corollary_random_bound(in).total == 0.0);
}

TEST_CASE("corollary scales the noise products") {
  BoundInputs in = base_inputs();
  in.T = 1000;
  in.tau = 9;
  in.eta = 1.0 / (20 * in.mu * 10);
  in.rho = 0.5;
  BoundReport cor = corollary_random_bound(in);
  BoundReport fixed = thm1_bound(in);
  // sigma(r+sigma) = 2 becomes (sigma+rho)(r+sigma+rho) = 1.5 * 2.5
  const double scale = (1.5 * 2.5) / 2.0;
  for (std::size_t i = 0; i < cor.terms.size(); ++i) {
    CHECK(cor.terms[i].second ==
          doctest::Approx(scale * fixed.terms[i].second).epsilon(1e-12));
  }
  in.rho = -1.0;
  CHECK_THROWS_AS(corollary_random_bound(in), std::invalid_argument);
}

TEST_CASE("appendix term bounds") {
  BoundInputs in = base_inputs();
  in.T = 10;
  AppendixBounds ab = appendix_term_bounds(in, 3);
  CHECK(ab.c1 == 3.0);  // t - tau at tau=0
  CHECK(!ab.has_strongly_convex);

  BoundInputs sc = base_inputs();
  sc.T = 100;
  sc.tau = 1;
  sc.eta = 1.0 / 40.0;
  sc.lambda = 1.0;
  AppendixBounds ab2 = appendix_term_bounds(sc, 50);
  CHECK(ab2.has_strongly_convex);
  CHECK(ab2.sc2 == doctest::Approx(3.0).epsilon(1e-15));
  CHECK_THROWS_AS(appendix_term_bounds(sc, 1), std::invalid_argument);
}

TEST_CASE("appendix c3 dominates the computed weighted sum") {
  BoundInputs in;
  in.n = 100;
  in.tau = 3;
  in.eta = 1.0 / 160.0;
  in.mu = 2.0;
  in.r = in.sigma = 1.0;
  in.T = 100;
  std::vector<double> spec = {2.0, 1.0, 0.25, 0.0};
  CoeffTable table = pi_coeffs(spec, in.eta, in.tau, 100);
  auto [s1, s2] = weighted_partial_sums(table, 100);
  AppendixBounds ab = appendix_term_bounds(in, 100);
  CHECK(in.t0() == doctest::Approx(4 * std::log(8.0)).epsilon(1e-14));
  CHECK(s2 <= ab.c3);
  CHECK(s1 <= ab.c1);
}

TEST_CASE("eta t0 stays under its cap in regime") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 50; ++rep) {
    BoundInputs in = base_inputs();
    in.tau = static_cast<int>(uniform_index(rng, 33));
    in.mu = 0.25 + 4 * uniform01(rng);
    in.eta = uniform01(rng) * in.regime_eta_cap();
    if (in.eta <= 0) continue;
    in.T = in.tau + 10;
    CHECK(eta_t0_product(in) <= eta_t0_cap(in) + 1e-15);
  }
}

TEST_CASE("reports are pure functions of inputs") {
  BoundInputs in = base_inputs();
  in.T = 777;
  in.tau = 5;
  in.lambda = 0.1;
  in.w0_norm = 0.7;
  BoundReport a = thm2_bound(in);
  BoundReport b = thm2_bound(in);
  CHECK(a.total == b.total);
  REQUIRE(a.terms.size() == b.terms.size());
  for (std::size_t i = 0; i < a.terms.size(); ++i) {
    CHECK(a.terms[i].second == b.terms[i].second);
  }
}

TEST_CASE("out-of-regime inputs are flagged, still evaluated") {
  BoundInputs in = base_inputs();
  in.T = 100;
  in.tau = 4;
  in.eta = 1.0;  // far above 1/(20 mu (tau+1))
  BoundReport rep = thm1_bound(in);
  CHECK(rep.has_flag("out-of-regime"));
  CHECK(rep.total > 0.0);
}

}  // TEST_SUITE
