#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace uavplan::lma {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using ResidualFn = std::function<Vector(const Vector&)>;
using JacobianFn = std::function<Matrix(const Vector&)>;

struct Config {
  double damping_init = 1e-3;
  double damping_up = 10.0;
  double damping_down = 0.1;
  int max_iters = 500;
  double residual_tol = 1e-10;
  double step_tol = 1e-12;
  double fd_step = 1e-7;  ///< relative forward-difference step

  /// Throws ParameterError unless all values are positive and damping_up > 1 > damping_down.
  void validate() const;
};

enum class Status {
  residual_converged,
  step_converged,
  max_iterations,
  damping_overflow,  ///< no descent step found even with huge damping
  non_finite,        ///< residual or Jacobian became non-finite at an accepted point
};

struct Result {
  Vector solution;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  Status status = Status::max_iterations;
  /// ||r||^2 at x0 followed by the value at every accepted step.
  std::vector<double> accepted_sq_norms;
};

std::string to_string(Status status);

/// Forward-difference Jacobian with step fd_step * max(|x_i|, 1).
Matrix numeric_jacobian(const ResidualFn& residual, const Vector& x, double fd_step);

/// Levenberg-Marquardt: x <- x - (J^T J + damping I)^{-1} J^T r. A trial step is
/// accepted only if it strictly lowers ||r||^2; otherwise damping grows by
/// damping_up. Non-finite trial residuals count as rejected steps. Returns the best
/// point found.
Result solve(const ResidualFn& residual, const Vector& x0, const Config& config = {});
Result solve(const ResidualFn& residual, const JacobianFn& jacobian, const Vector& x0, const Config& config = {});

}  // namespace uavplan::lma
