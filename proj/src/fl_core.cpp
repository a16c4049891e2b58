#include "dpfl/fl_core.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace dpfl {
namespace {

void check_dims(const ModelVector& w, const Dataset& data) {
  if (w.size() != data.feature_dim()) {
    std::ostringstream msg;
    msg << "model dimension " << w.size() << " does not match feature dimension "
        << data.feature_dim();
    throw std::invalid_argument(msg.str());
  }
  if (data.sample_count() < 1) {
    throw std::invalid_argument("dataset is empty");
  }
  if (data.labels.size() != data.sample_count()) {
    throw std::invalid_argument("label count does not match sample count");
  }
}

// log(1 + exp(-m)) without overflow for large |m|.
double logistic_loss(double margin) {
  if (margin < -35.0) return -margin;
  return std::log1p(std::exp(-margin));
}

// d/dm log(1 + exp(-m)) = -sigmoid(-m)
double logistic_loss_derivative(double margin) {
  if (margin > 35.0) return -std::exp(-margin);
  if (margin < -35.0) return -1.0;
  return -1.0 / (1.0 + std::exp(margin));
}

}  // namespace

double contraction_factor(double eta, double lipschitz) {
  if (!(eta > 0.0) || !(lipschitz > 0.0)) {
    throw std::invalid_argument("step size and Lipschitz constant must be positive");
  }
  const double x = eta * lipschitz;
  const double q = 0.5 * x * x - x + 1.0;
  if (!(q > 0.0 && q < 1.0)) {
    std::ostringstream msg;
    msg << "non-contractive step size: eta*L = " << x << " gives q = " << q
        << ", need 0 < eta*L < 2";
    throw std::invalid_argument(msg.str());
  }
  return q;
}

void estimate_curvature(std::span<const Dataset> data, LossSpec& spec) {
  if (data.empty()) throw std::invalid_argument("no datasets");
  if (spec.kind == LossKind::kLogisticRidge) {
    if (!(spec.lambda > 0.0)) {
      throw std::invalid_argument("logistic-ridge needs lambda > 0 for strong convexity");
    }
    double max_sq = 0.0;
    for (const Dataset& d : data) {
      max_sq = std::max(max_sq, d.features.rowwise().squaredNorm().maxCoeff());
    }
    spec.mu = spec.lambda;
    spec.lipschitz = spec.lambda + 0.25 * max_sq;
    return;
  }
  double mu = std::numeric_limits<double>::infinity();
  double lip = 0.0;
  for (const Dataset& d : data) {
    const Eigen::MatrixXd gram =
        d.features.transpose() * d.features / static_cast<double>(d.sample_count());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    mu = std::min(mu, eig.eigenvalues().minCoeff() + spec.lambda);
    lip = std::max(lip, eig.eigenvalues().maxCoeff() + spec.lambda);
  }
  spec.mu = mu;
  spec.lipschitz = lip;
  if (!(spec.mu > 0.0)) {
    throw std::invalid_argument("least-squares task is not strongly convex; "
                                "increase lambda or sample count");
  }
}

double local_loss(const ModelVector& w, const Dataset& data,
                  const LossSpec& spec) {
  check_dims(w, data);
  const Eigen::VectorXd margins = data.features * w;
  const double d = static_cast<double>(data.sample_count());
  double sum = 0.0;
  if (spec.kind == LossKind::kLeastSquaresRidge) {
    sum = 0.5 * (data.labels - margins).squaredNorm();
  } else {
    for (Eigen::Index i = 0; i < margins.size(); ++i) {
      sum += logistic_loss(data.labels[i] * margins[i]);
    }
  }
  return sum / d + 0.5 * spec.lambda * w.squaredNorm();
}

ModelVector local_gradient(const ModelVector& w, const Dataset& data,
                           const LossSpec& spec) {
  check_dims(w, data);
  const Eigen::VectorXd margins = data.features * w;
  const double d = static_cast<double>(data.sample_count());
  ModelVector grad;
  if (spec.kind == LossKind::kLeastSquaresRidge) {
    grad = data.features.transpose() * (margins - data.labels) / d;
  } else {
    Eigen::VectorXd coeff(margins.size());
    for (Eigen::Index i = 0; i < margins.size(); ++i) {
      coeff[i] = data.labels[i] * logistic_loss_derivative(data.labels[i] * margins[i]);
    }
    grad = data.features.transpose() * coeff / d;
  }
  grad += spec.lambda * w;
  return grad;
}

ModelVector average_gradient(std::span<const ModelVector> grads) {
  if (grads.empty()) throw std::invalid_argument("average_gradient: empty list");
  ModelVector sum = grads[0];
  for (std::size_t k = 1; k < grads.size(); ++k) {
    if (grads[k].size() != sum.size()) {
      throw std::invalid_argument("average_gradient: dimension mismatch");
    }
    sum += grads[k];
  }
  return sum / static_cast<double>(grads.size());
}

double surrogate_value(const ModelVector& w, const ModelVector& h,
                       const Dataset& data, const ModelVector& local_grad_at_w,
                       const ModelVector& global_grad, const LossSpec& spec) {
  const ModelVector shift = local_grad_at_w - spec.xi * global_grad;
  return local_loss(w + h, data, spec) - shift.dot(h);
}

ModelVector surrogate_gradient(const ModelVector& w, const ModelVector& h,
                               const Dataset& data,
                               const ModelVector& local_grad_at_w,
                               const ModelVector& global_grad,
                               const LossSpec& spec) {
  return local_gradient(w + h, data, spec) - local_grad_at_w +
         spec.xi * global_grad;
}

ModelVector run_local_iterations(const ModelVector& w, const Dataset& data,
                                 const ModelVector& global_grad,
                                 const LossSpec& spec, int iterations) {
  if (iterations < 0) throw std::invalid_argument("negative iteration count");
  const ModelVector local_grad = local_gradient(w, data, spec);
  ModelVector h = ModelVector::Zero(w.size());
  for (int j = 0; j < iterations; ++j) {
    h -= spec.eta * surrogate_gradient(w, h, data, local_grad, global_grad, spec);
    if (!h.allFinite()) {
      std::ostringstream msg;
      msg << "local update went non-finite at iteration " << j + 1 << " of "
          << iterations;
      throw std::runtime_error(msg.str());
    }
  }
  return h;
}

ModelVector solve_surrogate_optimum(const ModelVector& w, const Dataset& data,
                                    const ModelVector& global_grad,
                                    const LossSpec& spec, double grad_tol) {
  constexpr long kMaxIterations = 1000000;
  const ModelVector local_grad = local_gradient(w, data, spec);
  ModelVector h = ModelVector::Zero(w.size());
  for (long j = 0; j < kMaxIterations; ++j) {
    const ModelVector g =
        surrogate_gradient(w, h, data, local_grad, global_grad, spec);
    if (g.norm() <= grad_tol) return h;
    h -= spec.eta * g;
    if (!h.allFinite()) {
      throw std::runtime_error("surrogate solve diverged");
    }
  }
  throw std::runtime_error("surrogate solve did not reach tolerance within 1e6 iterations");
}

ModelVector aggregate(const ModelVector& w,
                      std::span<const ModelVector> updates) {
  if (updates.empty()) throw std::invalid_argument("aggregate: empty list");
  ModelVector sum = updates[0];
  for (std::size_t k = 1; k < updates.size(); ++k) {
    if (updates[k].size() != sum.size()) {
      throw std::invalid_argument("aggregate: dimension mismatch");
    }
    sum += updates[k];
  }
  return w + sum / static_cast<double>(updates.size());
}

std::optional<double> accuracy_ratio(const ModelVector& w,
                                     const ModelVector& h,
                                     const ModelVector& h_star,
                                     const Dataset& data,
                                     const ModelVector& global_grad,
                                     const LossSpec& spec) {
  const ModelVector local_grad = local_gradient(w, data, spec);
  const double f_h = surrogate_value(w, h, data, local_grad, global_grad, spec);
  const double f_star =
      surrogate_value(w, h_star, data, local_grad, global_grad, spec);
  const ModelVector zero = ModelVector::Zero(w.size());
  const double f_zero =
      surrogate_value(w, zero, data, local_grad, global_grad, spec);
  const double denom = f_zero - f_star;
  if (denom <= 1e-15) return std::nullopt;
  return (f_h - f_star) / denom;
}

int iteration_lower_bound(double phi, double eta, double lipschitz) {
  if (!(phi > 0.0 && phi < 1.0)) {
    throw std::invalid_argument("accuracy target must lie in (0, 1)");
  }
  const double q = contraction_factor(eta, lipschitz);
  return static_cast<int>(std::ceil(std::log(phi) / std::log(q)));
}

double accuracy_upper_bound(int iterations, double eta, double lipschitz) {
  if (iterations < 0) throw std::invalid_argument("negative iteration count");
  const double q = contraction_factor(eta, lipschitz);
  return std::pow(q, iterations);
}

}  // namespace dpfl
