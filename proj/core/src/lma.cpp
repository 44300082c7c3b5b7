#include "uavplan/lma.hpp"

#include <cmath>

#include "uavplan/errors.hpp"

namespace uavplan::lma {

void Config::validate() const {
  if (!(damping_init > 0.0 && damping_up > 1.0 && damping_down > 0.0 && damping_down < 1.0 && max_iters > 0 &&
        residual_tol > 0.0 && step_tol > 0.0 && fd_step > 0.0)) {
    throw ParameterError("invalid Levenberg-Marquardt configuration");
  }
}

std::string to_string(Status status) {
  switch (status) {
    case Status::residual_converged: return "residual_converged";
    case Status::step_converged: return "step_converged";
    case Status::max_iterations: return "max_iterations";
    case Status::damping_overflow: return "damping_overflow";
    case Status::non_finite: return "non_finite";
  }
  return "unknown";
}

Matrix numeric_jacobian(const ResidualFn& residual, const Vector& x, double fd_step) {
  const Vector r0 = residual(x);
  Matrix j(r0.size(), x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = fd_step * std::max(std::abs(x[i]), 1.0);
    xp[i] = x[i] + h;
    j.col(i) = (residual(xp) - r0) / h;
    xp[i] = x[i];
  }
  return j;
}

Result solve(const ResidualFn& residual, const Vector& x0, const Config& config) {
  return solve(residual, [&](const Vector& x) { return numeric_jacobian(residual, x, config.fd_step); }, x0,
               config);
}

Result solve(const ResidualFn& residual, const JacobianFn& jacobian, const Vector& x0, const Config& config) {
  config.validate();
  constexpr double kMaxDamping = 1e16;

  Result out;
  Vector x = x0;
  Vector r = residual(x);
  if (!r.allFinite()) throw ParameterError("residual is not finite at the initial point");
  double sq = r.squaredNorm();
  out.accepted_sq_norms.push_back(sq);

  double damping = config.damping_init;
  Matrix j = jacobian(x);
  const auto n = x.size();

  auto finish = [&](Status status) {
    out.solution = x;
    out.residual_norm = std::sqrt(sq);
    out.status = status;
    out.converged = status == Status::residual_converged || status == Status::step_converged;
    return out;
  };

  for (out.iterations = 0; out.iterations < config.max_iters; ++out.iterations) {
    if (std::sqrt(sq) <= config.residual_tol) return finish(Status::residual_converged);
    if (!j.allFinite()) return finish(Status::non_finite);

    const Matrix jtj = j.transpose() * j;
    const Vector grad = j.transpose() * r;

    bool accepted = false;
    while (!accepted) {
      if (damping > kMaxDamping) return finish(Status::damping_overflow);
      const Matrix a = jtj + damping * Matrix::Identity(n, n);
      const Vector step = a.ldlt().solve(grad);
      if (!step.allFinite()) {
        damping *= config.damping_up;
        continue;
      }
      const Vector trial = x - step;
      const Vector r_trial = residual(trial);
      const double sq_trial = r_trial.allFinite() ? r_trial.squaredNorm() : INFINITY;
      if (sq_trial < sq) {
        accepted = true;
        const bool tiny = step.norm() < config.step_tol * (x.norm() + config.step_tol);
        x = trial;
        r = r_trial;
        sq = sq_trial;
        out.accepted_sq_norms.push_back(sq);
        damping = std::max(damping * config.damping_down, 1e-300);
        if (tiny && std::sqrt(sq) > config.residual_tol) {
          ++out.iterations;
          return finish(Status::step_converged);
        }
        j = jacobian(x);
      } else {
        damping *= config.damping_up;
      }
    }
  }
  if (std::sqrt(sq) <= config.residual_tol) return finish(Status::residual_converged);
  return finish(Status::max_iterations);
}

}  // namespace uavplan::lma
