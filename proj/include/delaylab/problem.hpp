#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "delaylab/dataset.hpp"

namespace delaylab {

struct SpectralConstants {
  double mu = 0.0;      // upper eigenvalue of A + ridge*I
  double lambda = 0.0;  // lower eigenvalue (0 when semi-definite/unknown)
  std::string method;   // explicit-eigen | power-iteration | declared
  int iterations = 0;
  double tol = 0.0;
  std::vector<double> spectrum;  // full spectrum, explicit regime only
};

class SpectralError : public std::runtime_error {
 public:
  SpectralError(const std::string& msg, double last_estimate)
      : std::runtime_error(msg), last_estimate_(last_estimate) {}
  double last_estimate() const { return last_estimate_; }

 private:
  double last_estimate_;
};

// Quadratic empirical risk F(w) = 1/2 w'(A + ridge I)w + b'w + c over a
// dataset, with A = (1/n) sum x_i x_i' kept implicit above kExplicitDimLimit.
// Per-sample losses exclude the ridge term; per-sample gradients include
// ridge*w so their average equals the full gradient.
class QuadraticProblem {
 public:
  static constexpr int kExplicitDimLimit = 2048;

  QuadraticProblem(std::shared_ptr<const Dataset> data, double ridge = 0.0);

  int dim() const { return data_->dim; }
  std::size_t count() const { return data_->size(); }
  double ridge() const { return ridge_; }
  const Dataset& data() const { return *data_; }
  std::shared_ptr<const Dataset> data_ptr() const { return data_; }

  const Eigen::VectorXd& linear_term() const { return b_; }
  double constant_term() const { return c_; }
  double b_norm() const { return b_.norm(); }

  double sample_loss(const Eigen::VectorXd& w, std::size_t index) const;
  Eigen::VectorXd sample_gradient(const Eigen::VectorXd& w, std::size_t index) const;
  // out += grad_i(w); avoids temporaries in the inner SGD loop.
  void accumulate_sample_gradient(const Eigen::VectorXd& w, std::size_t index,
                                  Eigen::VectorXd& out) const;

  double full_loss(const Eigen::VectorXd& w) const;
  Eigen::VectorXd full_gradient(const Eigen::VectorXd& w) const;
  // Mean data loss without the ridge term (used for train/test gaps).
  double mean_data_loss(const Eigen::VectorXd& w) const;

  // (A + ridge I) v. Dense matvec in the explicit regime, sample pass else.
  Eigen::VectorXd apply_hessian(const Eigen::VectorXd& v) const;
  double weighted_norm(const Eigen::VectorXd& v) const;  // ||sqrt(A+ridge I) v||

  bool explicit_regime() const { return hessian_.size() > 0; }
  const Eigen::MatrixXd& dense_hessian() const;

  SpectralConstants estimate_spectral(double tol = 1e-10, int max_iter = 10000,
                                      std::uint64_t seed = 1) const;

 private:
  std::shared_ptr<const Dataset> data_;
  double ridge_ = 0.0;
  Eigen::VectorXd b_;
  double c_ = 0.0;
  Eigen::MatrixXd hessian_;  // empty in the implicit regime
};

// Mean data loss of w over an arbitrary dataset (no ridge).
double mean_data_loss(const Dataset& ds, const Eigen::VectorXd& w);

}  // namespace delaylab
