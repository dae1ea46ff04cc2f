#pragma once

// Damped Newton for smooth strongly convex objectives, shared by the exact
// solvers. Internal to the library.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "aioli/error.hpp"
#include "aioli/linalg.hpp"

namespace aioli::detail {

struct NewtonProblem {
  std::function<double(const linalg::Vector&)> value;
  // Fills the gradient and the (symmetric, full) Hessian.
  std::function<void(const linalg::Vector&, linalg::Vector&, std::vector<linalg::Vector>&)>
      derivatives;
  double grad_tol = 1e-12;
  // Gradient norm accepted once F stops resolving further decrease.
  double floor_tol = 1e-8;
  int max_iter = 200;
};

inline linalg::Vector damped_newton(const NewtonProblem& p, linalg::Vector theta,
                                    const std::string& who) {
  const std::size_t d = theta.size();
  linalg::Vector grad(d), trial(d), trial_grad(d);
  std::vector<linalg::Vector> H(d, linalg::Vector(d)), scratch(d, linalg::Vector(d));
  for (int iter = 0; iter < p.max_iter; ++iter) {
    p.derivatives(theta, grad, H);
    const double gnorm = linalg::norm(grad);
    if (gnorm <= p.grad_tol) return theta;
    const auto LH = linalg::cholesky_factor(H);
    const linalg::Vector dir = linalg::solve_upper_transpose(LH, linalg::solve_lower(LH, grad));

    const double f0 = p.value(theta);
    const double slope = linalg::dot(grad, dir);
    double step = 1.0;
    bool accepted = false;
    while (0.5 * step * slope > 1e-15 * (1.0 + std::abs(f0))) {
      for (std::size_t i = 0; i < d; ++i) trial[i] = theta[i] - step * dir[i];
      if (p.value(trial) <= f0 - 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // F differences are below round-off: judge the full step by the gradient.
      for (std::size_t i = 0; i < d; ++i) trial[i] = theta[i] - dir[i];
      p.derivatives(trial, trial_grad, scratch);
      if (!(linalg::norm(trial_grad) < gnorm)) {
        if (gnorm <= p.floor_tol) return theta;
        break;
      }
    }
    theta = trial;
  }
  throw ConvergenceError(who + ": Newton did not converge");
}

}  // namespace aioli::detail
