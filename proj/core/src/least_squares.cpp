#include "nanoguide/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nanoguide/core.hpp"

namespace nanoguide {

namespace {

bool gradient_small(const Eigen::MatrixXd& j, const Eigen::VectorXd& r, double tol) {
  const double g = (j.transpose() * r).cwiseAbs().maxCoeff();
  const double col = j.colwise().norm().maxCoeff();
  return g <= tol * col * (r.norm() + 1e-300) || g == 0.0;
}

}  // namespace

LmReport levenberg_marquardt(const LeastSquaresProblem& problem, const Eigen::VectorXd& start,
                             const LmOptions& opts) {
  const Eigen::Index n = start.size();
  LmReport rep;
  rep.params = start;
  rep.residuals.resize(problem.n_residuals);
  rep.jacobian.resize(problem.n_residuals, n);
  problem.evaluate(rep.params, rep.residuals, &rep.jacobian);
  if (!rep.residuals.allFinite()) throw ValidationError("least squares start point is invalid");
  rep.cost = 0.5 * rep.residuals.squaredNorm();

  double damping = opts.initial_damping;
  bool stalled = false;
  Eigen::VectorXd trial_r(problem.n_residuals);
  for (rep.iterations = 0; rep.iterations < opts.max_iterations; ++rep.iterations) {
    if (gradient_small(rep.jacobian, rep.residuals, opts.gradient_tol)) break;

    const Eigen::MatrixXd jtj = rep.jacobian.transpose() * rep.jacobian;
    const Eigen::VectorXd grad = rep.jacobian.transpose() * rep.residuals;
    Eigen::VectorXd diag = jtj.diagonal().cwiseMax(1e-12 * jtj.diagonal().maxCoeff());

    bool accepted = false;
    for (int tries = 0; tries < 60 && !accepted; ++tries) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += damping * diag;
      const Eigen::VectorXd step = a.ldlt().solve(-grad);
      if (!step.allFinite()) {
        damping *= 10.0;
        continue;
      }
      if (step.norm() <= opts.step_tol * (rep.params.norm() + opts.step_tol)) {
        stalled = true;
        break;
      }
      const Eigen::VectorXd trial = rep.params + step;
      problem.evaluate(trial, trial_r, nullptr);
      const double trial_cost =
          trial_r.allFinite() ? 0.5 * trial_r.squaredNorm() : std::numeric_limits<double>::infinity();
      if (trial_cost < rep.cost) {
        rep.params = trial;
        rep.cost = trial_cost;
        problem.evaluate(rep.params, rep.residuals, &rep.jacobian);
        damping = std::max(damping / 3.0, 1e-15);
        accepted = true;
      } else {
        damping *= 4.0;
      }
    }
    if (!accepted || stalled) break;
  }

  rep.gradient_norm = (rep.jacobian.transpose() * rep.residuals).cwiseAbs().maxCoeff();
  // A cost at rounding level, or a step below step_tol, is a converged fit
  // even when rounding noise in r dominates the relative gradient test.
  rep.converged = gradient_small(rep.jacobian, rep.residuals, opts.gradient_tol) || stalled ||
                  rep.cost <= 1e-28 * static_cast<double>(problem.n_residuals);
  return rep;
}

Eigen::MatrixXd numeric_jacobian(const LeastSquaresProblem& problem, const Eigen::VectorXd& at,
                                 double rel_step) {
  Eigen::MatrixXd j(problem.n_residuals, at.size());
  Eigen::VectorXd rp(problem.n_residuals), rm(problem.n_residuals);
  for (Eigen::Index k = 0; k < at.size(); ++k) {
    const double h = rel_step * std::max(std::abs(at(k)), 1.0);
    Eigen::VectorXd xp = at, xm = at;
    xp(k) += h;
    xm(k) -= h;
    problem.evaluate(xp, rp, nullptr);
    problem.evaluate(xm, rm, nullptr);
    j.col(k) = (rp - rm) / (2.0 * h);
  }
  return j;
}

Eigen::MatrixXd parameter_covariance(const LmReport& report) {
  const Eigen::Index m = report.residuals.size();
  const Eigen::Index n = report.params.size();
  if (m <= n) return Eigen::MatrixXd::Zero(n, n);
  const double s2 = report.residuals.squaredNorm() / static_cast<double>(m - n);
  const Eigen::MatrixXd jtj = report.jacobian.transpose() * report.jacobian;
  return s2 * jtj.completeOrthogonalDecomposition().pseudoInverse();
}

}  // namespace nanoguide
