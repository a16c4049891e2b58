#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace dpfl {

using ModelVector = Eigen::VectorXd;

// One device's training set. Rows of `features` are samples; labels are
// real-valued for least-squares and +/-1 for logistic regression. The set
// is fixed at setup and never mutated during a run.
struct Dataset {
  Eigen::MatrixXd features;  // d_k x s
  Eigen::VectorXd labels;    // d_k

  Eigen::Index sample_count() const { return features.rows(); }
  Eigen::Index feature_dim() const { return features.cols(); }
};

enum class LossKind { kLeastSquaresRidge, kLogisticRidge };

// Loss family plus the curvature and step-size constants the convergence
// bounds depend on. `mu` and `lipschitz` bound the Hessian spectrum of the
// local objectives from below/above; they are estimated from the data once
// at setup (see estimate_curvature) and must satisfy 0 < mu <= L and
// 0 < eta*L < 2 so that the per-iteration contraction factor
// q = (eta*L)^2/2 - eta*L + 1 lies in (0, 1).
struct LossSpec {
  LossKind kind = LossKind::kLeastSquaresRidge;
  double lambda = 0.0;     // ridge weight
  double mu = 0.0;         // strong-convexity modulus
  double lipschitz = 0.0;  // gradient Lipschitz constant
  double eta = 0.0;        // gradient step size
  double xi = 1.0;         // surrogate mixing weight
};

// q = (eta L)^2 / 2 - eta L + 1. Throws std::invalid_argument unless
// q is in (0, 1), i.e. unless 0 < eta L < 2.
double contraction_factor(double eta, double lipschitz);

// Fills spec.mu / spec.lipschitz from the data:
//   least-squares: mu = min_k lambda_min(X_k^T X_k)/d_k + lambda,
//                  L  = max_k lambda_max(X_k^T X_k)/d_k + lambda
//   logistic:      mu = lambda, L = lambda + max_k max_i ||x_i||^2 / 4
void estimate_curvature(std::span<const Dataset> data, LossSpec& spec);

// (1/d_k) sum_i l(w, x_i, y_i) + (lambda/2) ||w||^2
double local_loss(const ModelVector& w, const Dataset& data,
                  const LossSpec& spec);

ModelVector local_gradient(const ModelVector& w, const Dataset& data,
                           const LossSpec& spec);

// (1/K) sum_k grads[k]; throws on an empty list.
ModelVector average_gradient(std::span<const ModelVector> grads);

// Local surrogate objective F_k(w, h) = L_k(w + h) - (g_local - xi g_global)^T h,
// where g_local = grad L_k(w) and g_global is the averaged gradient.
double surrogate_value(const ModelVector& w, const ModelVector& h,
                       const Dataset& data, const ModelVector& local_grad_at_w,
                       const ModelVector& global_grad, const LossSpec& spec);

// Gradient of the surrogate in h: grad L_k(w + h) - g_local + xi g_global.
ModelVector surrogate_gradient(const ModelVector& w, const ModelVector& h,
                               const Dataset& data,
                               const ModelVector& local_grad_at_w,
                               const ModelVector& global_grad,
                               const LossSpec& spec);

// Runs j gradient steps h <- h - eta * grad F_k starting from h = 0.
// Throws std::runtime_error with iteration context if an iterate goes
// non-finite.
ModelVector run_local_iterations(const ModelVector& w, const Dataset& data,
                                 const ModelVector& global_grad,
                                 const LossSpec& spec, int iterations);

// Reference solve of the surrogate problem: gradient method until
// ||grad F|| <= grad_tol. Iteration cap 10^6, exceeded -> std::runtime_error.
ModelVector solve_surrogate_optimum(const ModelVector& w, const Dataset& data,
                                    const ModelVector& global_grad,
                                    const LossSpec& spec,
                                    double grad_tol = 1e-12);

// w + (1/K) sum_k updates[k]; throws on an empty list.
ModelVector aggregate(const ModelVector& w,
                      std::span<const ModelVector> updates);

// Relative suboptimality (F(w,h) - F(w,h*)) / (F(w,0) - F(w,h*)).
// Returns nullopt when the denominator is <= 1e-15 (w already optimal for
// the surrogate); callers treat that as accuracy 0.
std::optional<double> accuracy_ratio(const ModelVector& w,
                                     const ModelVector& h,
                                     const ModelVector& h_star,
                                     const Dataset& data,
                                     const ModelVector& global_grad,
                                     const LossSpec& spec);

// ceil(log(phi) / log(q)): iterations needed to reach relative accuracy phi.
int iteration_lower_bound(double phi, double eta, double lipschitz);

// q^j: accuracy guaranteed after j iterations.
double accuracy_upper_bound(int iterations, double eta, double lipschitz);

}  // namespace dpfl
