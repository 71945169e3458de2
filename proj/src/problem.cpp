#include "delaylab/problem.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

#include "delaylab/common.hpp"

namespace delaylab {

QuadraticProblem::QuadraticProblem(std::shared_ptr<const Dataset> data, double ridge)
    : data_(std::move(data)), ridge_(ridge) {
  if (!data_ || data_->empty()) {
    throw std::invalid_argument("QuadraticProblem needs a nonempty dataset");
  }
  if (ridge_ < 0.0) {
    throw std::invalid_argument("ridge must be nonnegative");
  }
  const int d = data_->dim;
  const double n = static_cast<double>(data_->size());
  b_ = Eigen::VectorXd::Zero(d);
  c_ = 0.0;
  for (const auto& s : data_->samples) {
    for (const auto& [idx, val] : s.features) b_(idx) -= s.label * val;
    c_ += s.label * s.label;
  }
  b_ /= n;
  c_ /= 2.0 * n;

  if (d <= kExplicitDimLimit) {
    hessian_ = Eigen::MatrixXd::Zero(d, d);
    for (const auto& s : data_->samples) {
      for (const auto& [i, vi] : s.features) {
        for (const auto& [j, vj] : s.features) {
          hessian_(i, j) += vi * vj;
        }
      }
    }
    hessian_ /= n;
    hessian_.diagonal().array() += ridge_;
  }
}

double QuadraticProblem::sample_loss(const Eigen::VectorXd& w,
                                     std::size_t index) const {
  if (index >= data_->size()) {
    throw std::out_of_range("sample index " + std::to_string(index));
  }
  const Sample& s = data_->samples[index];
  const double r = s.dot(w.data()) - s.label;
  return 0.5 * r * r;
}

Eigen::VectorXd QuadraticProblem::sample_gradient(const Eigen::VectorXd& w,
                                                  std::size_t index) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim());
  accumulate_sample_gradient(w, index, g);
  return g;
}

void QuadraticProblem::accumulate_sample_gradient(const Eigen::VectorXd& w,
                                                  std::size_t index,
                                                  Eigen::VectorXd& out) const {
  if (index >= data_->size()) {
    throw std::out_of_range("sample index " + std::to_string(index));
  }
  const Sample& s = data_->samples[index];
  const double r = s.dot(w.data()) - s.label;
  for (const auto& [idx, val] : s.features) out(idx) += val * r;
  if (ridge_ > 0.0) out += ridge_ * w;
}

double QuadraticProblem::full_loss(const Eigen::VectorXd& w) const {
  double loss = delaylab::mean_data_loss(*data_, w);
  if (ridge_ > 0.0) loss += 0.5 * ridge_ * w.squaredNorm();
  return loss;
}

double QuadraticProblem::mean_data_loss(const Eigen::VectorXd& w) const {
  return delaylab::mean_data_loss(*data_, w);
}

Eigen::VectorXd QuadraticProblem::full_gradient(const Eigen::VectorXd& w) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim());
  for (const auto& s : data_->samples) {
    const double r = s.dot(w.data()) - s.label;
    for (const auto& [idx, val] : s.features) g(idx) += val * r;
  }
  g /= static_cast<double>(data_->size());
  if (ridge_ > 0.0) g += ridge_ * w;
  return g;
}

Eigen::VectorXd QuadraticProblem::apply_hessian(const Eigen::VectorXd& v) const {
  if (explicit_regime()) {
    return hessian_ * v;
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim());
  for (const auto& s : data_->samples) {
    const double xv = s.dot(v.data());
    for (const auto& [idx, val] : s.features) out(idx) += val * xv;
  }
  out /= static_cast<double>(data_->size());
  if (ridge_ > 0.0) out += ridge_ * v;
  return out;
}

double QuadraticProblem::weighted_norm(const Eigen::VectorXd& v) const {
  const double q = v.dot(apply_hessian(v));
  return std::sqrt(std::max(q, 0.0));
}

const Eigen::MatrixXd& QuadraticProblem::dense_hessian() const {
  if (!explicit_regime()) {
    throw std::logic_error("dense hessian unavailable above dim " +
                           std::to_string(kExplicitDimLimit));
  }
  return hessian_;
}

namespace {

// Power iteration on op; returns (eigenvalue, iterations).
template <typename Op>
std::pair<double, int> power_iteration(const Op& op, int d, double tol,
                                       int max_iter, std::mt19937_64& rng) {
  Eigen::VectorXd v(d);
  for (int j = 0; j < d; ++j) v(j) = standard_normal(rng);
  v.normalize();
  double prev = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::VectorXd av = op(v);
    const double norm = av.norm();
    if (norm == 0.0) return {0.0, it};  // v in the nullspace: eigenvalue 0
    const double est = v.dot(av);
    v = av / norm;
    if (it > 1 && std::abs(est - prev) <= tol * std::max(std::abs(est), 1e-300)) {
      return {est, it};
    }
    prev = est;
  }
  throw SpectralError("power iteration did not converge after " +
                          std::to_string(max_iter) + " iterations",
                      prev);
}

}  // namespace

SpectralConstants QuadraticProblem::estimate_spectral(double tol, int max_iter,
                                                      std::uint64_t seed) const {
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  SpectralConstants out;
  out.tol = tol;
  if (explicit_regime()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(hessian_);
    const Eigen::VectorXd& ev = solver.eigenvalues();  // ascending
    out.spectrum.assign(ev.data(), ev.data() + ev.size());
    // clamp eigendecomposition jitter on PSD matrices
    for (double& a : out.spectrum) {
      if (a < 0.0 && a > -1e-12 * std::abs(ev(ev.size() - 1))) a = 0.0;
    }
    out.mu = out.spectrum.back();
    out.lambda = std::max(out.spectrum.front(), 0.0);
    out.method = "explicit-eigen";
    return out;
  }

  std::mt19937_64 rng(mix_seed(seed, "spectral"));
  auto [mu, iters] = power_iteration(
      [this](const Eigen::VectorXd& v) { return apply_hessian(v); }, dim(), tol,
      max_iter, rng);
  out.mu = mu;
  out.iterations = iters;
  out.method = "power-iteration";
  if (ridge_ > 0.0 && count() < static_cast<std::size_t>(dim())) {
    out.lambda = ridge_;  // data part is rank deficient, ridge floors the spectrum
  } else {
    auto [shifted, it2] = power_iteration(
        [this, mu = out.mu](const Eigen::VectorXd& v) {
          return (mu * v - apply_hessian(v)).eval();
        },
        dim(), tol, max_iter, rng);
    out.lambda = std::max(out.mu - shifted, 0.0);
    out.iterations += it2;
  }
  return out;
}

double mean_data_loss(const Dataset& ds, const Eigen::VectorXd& w) {
  if (ds.empty()) throw std::invalid_argument("empty dataset");
  double loss = 0.0;
  for (const auto& s : ds.samples) {
    const double r = s.dot(w.data()) - s.label;
    loss += 0.5 * r * r;
  }
  return loss / static_cast<double>(ds.size());
}

}  // namespace delaylab
