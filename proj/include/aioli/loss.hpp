#pragma once

#include <span>
#include <vector>

#include "aioli/linalg.hpp"

namespace aioli {

// One round's observation.
struct Example {
  linalg::Vector x;
  int y = 1;  // -1 or +1
};

// Throws InvalidInput unless y is -1 or +1.
void check_label(int y);
// Throws InvalidInput if x is non-finite or longer than radius (beyond slack).
void check_example(const Example& ex, double radius, double slack = 1e-9);

namespace loss {

// Stable exponent branches switch at |argument| = 30.
inline constexpr double kExpBranch = 30.0;
inline constexpr double kCurvatureFloor = 1e-300;

// log(1 + e^z), never overflows.
double softplus(double z);
// 1 / (1 + e^{-z}).
double sigmoid(double z);

// log(1 + e^{-y z}).
double logistic_loss(double margin, int y);

// Gradient of theta -> log(1 + e^{-y theta^T x}): -y x / (1 + e^{y theta^T x}).
linalg::Vector logistic_grad(std::span<const double> theta, const Example& ex);

// e^{y y_hat} / (1 + B R), floored at kCurvatureFloor.
double curvature(double y_hat, int y, double B, double R);

// Quadratic surrogate of a past loss, expanded at theta_hat:
//   loss_at_theta_hat + g^T (th - theta_hat) + eta/2 (g^T (th - theta_hat))^2
struct SurrogateCoeffs {
  linalg::Vector g;
  double eta = 0.0;
  linalg::Vector theta_hat;
  double loss_at_theta_hat = 0.0;
};

// Builds the surrogate for `ex` at `theta_hat` with comparator radius B and
// feature radius R.
SurrogateCoeffs make_surrogate(std::span<const double> theta_hat, const Example& ex,
                               double B, double R);

double surrogate_eval(const SurrogateCoeffs& coeffs, std::span<const double> theta);

// f(a) - [f(b) + f'(b)(a-b) + eta/2 f'(b)^2 (a-b)^2] with f(x) = log(1+e^{-x}).
double quadratic_lower_bound_gap_with(double a, double b, double eta);

// Slack of the adaptive-curvature lower bound, eta = e^b / (1 + C).
// Requires |a| <= C; throws PreconditionError otherwise.
double quad_lower_bound_gap(double a, double b, double C);

// ((e^{a-b} - 1)/(a-b)) * ((1+e^b)/(1+e^a)) - 1/(1+|a|), with the
// difference quotient taken as 1 at a == b. Non-negative for all a, b.
double independence_ineq_gap(double a, double b);

}  // namespace loss
}  // namespace aioli
