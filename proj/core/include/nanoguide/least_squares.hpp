#pragma once

// Damped (Levenberg-Marquardt) nonlinear least squares for small dense models.

#include <functional>

#include <Eigen/Dense>

namespace nanoguide {

struct LeastSquaresProblem {
  Eigen::Index n_residuals = 0;
  /// Fills residuals (model - data) and, when non-null, the Jacobian
  /// d residual / d parameter. Non-finite residuals mark a rejected point.
  std::function<void(const Eigen::VectorXd& params, Eigen::VectorXd& residuals,
                     Eigen::MatrixXd* jacobian)>
      evaluate;
};

struct LmOptions {
  int max_iterations = 500;
  /// Convergence: |J^T r|_inf <= gradient_tol * max column norm of J * |r|.
  double gradient_tol = 1e-8;
  double step_tol = 1e-14;
  double initial_damping = 1e-3;
};

struct LmReport {
  Eigen::VectorXd params;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd jacobian;
  double cost = 0.0;  // 0.5 |r|^2
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

LmReport levenberg_marquardt(const LeastSquaresProblem& problem, const Eigen::VectorXd& start,
                             const LmOptions& opts = {});

/// Central-difference Jacobian, used to cross-check analytic derivatives.
Eigen::MatrixXd numeric_jacobian(const LeastSquaresProblem& problem, const Eigen::VectorXd& at,
                                 double rel_step = 1e-6);

/// s^2 (J^T J)^-1 with s^2 = |r|^2 / (m - n); zero if m <= n.
Eigen::MatrixXd parameter_covariance(const LmReport& report);

}  // namespace nanoguide
