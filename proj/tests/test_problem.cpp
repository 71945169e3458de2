#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "delaylab/common.hpp"
#include "delaylab/dataset.hpp"
#include "delaylab/problem.hpp"

using namespace delaylab;

namespace {

std::shared_ptr<Dataset> two_point_1d() {
  // {(x=2, y=1), (x=0, y=3)}: A=[2], b=[-1], c=2.5
  auto ds = std::make_shared<Dataset>();
  ds->dim = 1;
  ds->samples.push_back({{{0, 2.0}}, 1.0});
  ds->samples.push_back({{}, 3.0});
  return ds;
}

Eigen::VectorXd random_vector(int d, std::mt19937_64& rng) {
  Eigen::VectorXd v(d);
  for (int j = 0; j < d; ++j) v(j) = standard_normal(rng);
  return v;
}

}  // namespace

TEST_SUITE("problem") {

TEST_CASE("build on the 1-d two-point set") {
  QuadraticProblem p(two_point_1d());
  CHECK(p.dense_hessian()(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(p.linear_term()(0) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(p.constant_term() == doctest::Approx(2.5).epsilon(1e-15));

  QuadraticProblem ridged(two_point_1d(), 0.1);
  CHECK(ridged.dense_hessian()(0, 0) == doctest::Approx(2.1).epsilon(1e-15));
}

TEST_CASE("empty dataset is rejected") {
  CHECK_THROWS_AS(QuadraticProblem(std::make_shared<Dataset>()),
                  std::invalid_argument);
  CHECK_THROWS_AS(QuadraticProblem(two_point_1d(), -0.1), std::invalid_argument);
}

TEST_CASE("sample loss") {
  QuadraticProblem p(two_point_1d());
  Eigen::VectorXd w(1);
  w << 1.0;
  CHECK(p.sample_loss(w, 0) == doctest::Approx(0.5).epsilon(1e-15));
  w << 0.0;
  CHECK(p.sample_loss(w, 0) == doctest::Approx(0.5 * 1.0).epsilon(1e-15));
  CHECK(p.sample_loss(w, 1) == doctest::Approx(0.5 * 9.0).epsilon(1e-15));
  CHECK_THROWS_AS(p.sample_loss(w, 2), std::out_of_range);
}

TEST_CASE("loss at the planted optimum of noiseless data") {
  auto ds = std::make_shared<Dataset>(
      synth_quadratic(4, 40, SpectrumSpec::uniform(0.5, 1.5), 0.0, 5));
  QuadraticProblem p(ds);
  // recover w* by solving the normal equations; loss there is ~0
  Eigen::VectorXd w = p.dense_hessian().ldlt().solve(-p.linear_term());
  CHECK(p.full_loss(w) < 1e-20);
  for (std::size_t i = 0; i < p.count(); ++i) CHECK(p.sample_loss(w, i) < 1e-18);
}

TEST_CASE("sample gradient") {
  QuadraticProblem p(two_point_1d());
  Eigen::VectorXd w(1);
  w << 1.0;
  CHECK(p.sample_gradient(w, 0)(0) == doctest::Approx(2.0).epsilon(1e-15));
  w << 0.0;
  CHECK(p.sample_gradient(w, 0)(0) == doctest::Approx(-2.0).epsilon(1e-15));  // -y x
  CHECK(p.sample_gradient(w, 1)(0) == 0.0);
}

TEST_CASE("mean of sample gradients equals the full gradient") {
  auto ds = std::make_shared<Dataset>(
      synth_quadratic(6, 80, SpectrumSpec::geometric(1.0, 0.7), 0.5, 13));
  std::mt19937_64 rng(21);
  for (double ridge : {0.0, 0.25}) {
    QuadraticProblem p(ds, ridge);
    Eigen::VectorXd w = random_vector(6, rng);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(6);
    for (std::size_t i = 0; i < p.count(); ++i) mean += p.sample_gradient(w, i);
    mean /= static_cast<double>(p.count());
    CHECK((mean - p.full_gradient(w)).norm() < 1e-12);
  }
}

TEST_CASE("full loss and gradient on the 1-d example") {
  QuadraticProblem p(two_point_1d());
  Eigen::VectorXd w(1);
  w << 0.0;
  CHECK(p.full_loss(w) == doctest::Approx(2.5).epsilon(1e-15));  // = c
  CHECK(p.full_gradient(w)(0) == doctest::Approx(-1.0).epsilon(1e-15));  // = b
  w << 1.0;
  CHECK(p.full_loss(w) == doctest::Approx(2.5).epsilon(1e-15));  // 1 - 1 + 2.5
  CHECK(p.full_gradient(w)(0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("central finite differences match the gradient") {
  auto ds = std::make_shared<Dataset>(
      synth_quadratic(5, 60, SpectrumSpec::uniform(0.2, 1.0), 0.4, 17));
  QuadraticProblem p(ds, 0.05);
  std::mt19937_64 rng(3);
  Eigen::VectorXd w = random_vector(5, rng);
  Eigen::VectorXd g = p.full_gradient(w);
  const double eps = 1e-5;
  for (int j = 0; j < 5; ++j) {
    Eigen::VectorXd wp = w, wm = w;
    wp(j) += eps;
    wm(j) -= eps;
    const double fd = (p.full_loss(wp) - p.full_loss(wm)) / (2 * eps);
    CHECK(fd == doctest::Approx(g(j)).epsilon(1e-6));
  }
}

TEST_CASE("operator and closed form agree") {
  auto ds = std::make_shared<Dataset>(
      synth_quadratic(7, 90, SpectrumSpec::uniform(0.1, 2.0), 0.3, 29));
  QuadraticProblem p(ds, 0.1);
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::VectorXd w = random_vector(7, rng);
    const double closed =
        0.5 * w.dot(p.apply_hessian(w)) + p.linear_term().dot(w) + p.constant_term();
    CHECK(p.full_loss(w) == doctest::Approx(closed).epsilon(1e-12));
    CHECK((p.full_gradient(w) - (p.apply_hessian(w) + p.linear_term())).norm() <
          1e-12);
  }
}

TEST_CASE("gradient is mu-Lipschitz within estimator slack") {
  auto ds = std::make_shared<Dataset>(
      synth_quadratic(8, 100, SpectrumSpec::uniform(0.1, 1.5), 0.2, 31));
  QuadraticProblem p(ds);
  const double mu = p.estimate_spectral().mu;
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd w = random_vector(8, rng);
    Eigen::VectorXd v = random_vector(8, rng);
    const double lhs = (p.full_gradient(w) - p.full_gradient(v)).norm();
    CHECK(lhs <= 1.05 * mu * (w - v).norm());
  }
}

TEST_CASE("spectral constants on the 1-d example") {
  QuadraticProblem p(two_point_1d());
  SpectralConstants sc = p.estimate_spectral();
  CHECK(sc.method == "explicit-eigen");
  CHECK(sc.mu == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(sc.lambda == doctest::Approx(2.0).epsilon(1e-12));
  REQUIRE(sc.spectrum.size() == 1);
}

TEST_CASE("spectral estimate concentrates for generated data") {
  auto ds = std::make_shared<Dataset>(synth_quadratic(
      3, 20000, SpectrumSpec::explicit_list({1.0, 0.5, 0.1}), 0.0, 41));
  QuadraticProblem p(ds);
  SpectralConstants sc = p.estimate_spectral();
  CHECK(sc.mu == doctest::Approx(1.0).epsilon(0.10));
  CHECK(sc.lambda == doctest::Approx(0.1).epsilon(0.15));
}

TEST_CASE("ridge floors the spectrum of rank-deficient data") {
  auto ds = std::make_shared<Dataset>(
      synth_quadratic(5, 3, SpectrumSpec::uniform(0.5, 1.0), 0.0, 43));
  QuadraticProblem p(ds, 0.3);
  SpectralConstants sc = p.estimate_spectral();
  CHECK(sc.lambda == doctest::Approx(0.3).epsilon(1e-10));
}

TEST_CASE("implicit regime uses power iteration") {
  // single-feature samples give a diagonal second-moment matrix whose
  // eigenvalues are v_i^2 * count_i / n
  auto ds = std::make_shared<Dataset>();
  ds->dim = QuadraticProblem::kExplicitDimLimit + 10;
  for (int i = 0; i < 100; ++i) {
    ds->samples.push_back({{{i, i == 7 ? 3.0 : 1.0}}, 0.0});
  }
  QuadraticProblem p(ds, 0.05);
  CHECK(!p.explicit_regime());
  CHECK_THROWS_AS(p.dense_hessian(), std::logic_error);
  SpectralConstants sc = p.estimate_spectral(1e-12, 20000, 7);
  CHECK(sc.method == "power-iteration");
  CHECK(sc.mu == doctest::Approx(9.0 / 100.0 + 0.05).epsilon(1e-6));
  CHECK(sc.lambda == doctest::Approx(0.05).epsilon(1e-12));  // n < d with ridge
  CHECK(sc.spectrum.empty());
}

TEST_CASE("b norm is finite and reported") {
  auto ds = std::make_shared<Dataset>(
      synth_quadratic(4, 50, SpectrumSpec::uniform(0.2, 1.0), 0.5, 47));
  QuadraticProblem p(ds);
  CHECK(std::isfinite(p.b_norm()));
  CHECK(p.b_norm() == doctest::Approx(p.linear_term().norm()).epsilon(1e-15));
}

}  // TEST_SUITE
