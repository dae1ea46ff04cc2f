#pragma once

#include <string>
#include <vector>

namespace aioli::verify {

struct Options {
  // Test hook: builds the curvature with e^{-y y_hat} instead of e^{y y_hat}
  // inside the lower-bound check. The check must then fail.
  bool flip_eta_sign = false;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  double min_slack = 0.0;  // smallest (bound - value) seen; >= -tol means pass
  std::size_t points = 0;
};

// Quadratic lower bound of the logistic loss on a grid of (a, b, C).
CheckResult check_lower_bound_grid(const Options& opts = {});
// The independence inequality on a grid of (a, b).
CheckResult check_independence_grid();
// g^{-y} = -(1+BR) eta g on random draws.
CheckResult check_gradient_identity();
// sum_t eta_t/2 g_t^T A_t^{-1} g_t <= log det(I + C_n / lambda) on AIOLI runs.
CheckResult check_telescoping_sum();
// u^T V^{-1} u = 1 - det(V - u u^T) / det(V) on random positive definite V.
CheckResult check_determinant_identity();
// The fast predictor against the full-dimensional Newton oracle.
CheckResult check_oracle_equivalence();

std::vector<CheckResult> run_all(const Options& opts = {});

}  // namespace aioli::verify
