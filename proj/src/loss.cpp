#include "aioli/loss.hpp"

#include <cmath>
#include <string>

#include "aioli/error.hpp"

namespace aioli {

void check_label(int y) {
  if (y != 1 && y != -1) {
    throw InvalidInput("label must be -1 or +1, got " + std::to_string(y));
  }
}

void check_example(const Example& ex, double radius, double slack) {
  check_label(ex.y);
  if (!linalg::all_finite(ex.x)) throw InvalidInput("example has non-finite features");
  if (linalg::norm(ex.x) > radius + slack) {
    throw InvalidInput("example norm exceeds the feature radius R");
  }
}

namespace loss {

double softplus(double z) {
  if (z > kExpBranch) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double logistic_loss(double margin, int y) {
  return softplus(-static_cast<double>(y) * margin);
}

linalg::Vector logistic_grad(std::span<const double> theta, const Example& ex) {
  if (theta.size() != ex.x.size()) throw InvalidInput("logistic_grad: dimension mismatch");
  const double yd = static_cast<double>(ex.y);
  const double m = yd * linalg::dot(theta, ex.x);
  // 1 / (1 + e^m) = sigmoid(-m)
  const double s = sigmoid(-m);
  linalg::Vector g(ex.x.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = -yd * ex.x[i] * s;
  return g;
}

double curvature(double y_hat, int y, double B, double R) {
  const double eta = std::exp(static_cast<double>(y) * y_hat) / (1.0 + B * R);
  return eta < kCurvatureFloor ? kCurvatureFloor : eta;
}

SurrogateCoeffs make_surrogate(std::span<const double> theta_hat, const Example& ex,
                               double B, double R) {
  SurrogateCoeffs c;
  const double y_hat = linalg::dot(theta_hat, ex.x);
  c.g = logistic_grad(theta_hat, ex);
  c.eta = curvature(y_hat, ex.y, B, R);
  c.theta_hat.assign(theta_hat.begin(), theta_hat.end());
  c.loss_at_theta_hat = logistic_loss(y_hat, ex.y);
  return c;
}

double surrogate_eval(const SurrogateCoeffs& coeffs, std::span<const double> theta) {
  const std::size_t d = coeffs.g.size();
  if (theta.size() != d || coeffs.theta_hat.size() != d) {
    throw InvalidInput("surrogate_eval: dimension mismatch");
  }
  double proj = 0.0;
  for (std::size_t i = 0; i < d; ++i) proj += coeffs.g[i] * (theta[i] - coeffs.theta_hat[i]);
  return coeffs.loss_at_theta_hat + proj + 0.5 * coeffs.eta * proj * proj;
}

double quadratic_lower_bound_gap_with(double a, double b, double eta) {
  // f(x) = softplus(-x), f'(x) = -sigmoid(-x)
  const double fa = softplus(-a);
  const double fb = softplus(-b);
  const double dfb = -sigmoid(-b);
  const double diff = a - b;
  return fa - (fb + dfb * diff + 0.5 * eta * dfb * dfb * diff * diff);
}

double quad_lower_bound_gap(double a, double b, double C) {
  if (!(C > 0.0)) throw PreconditionError("quad_lower_bound_gap: C must be positive");
  if (std::abs(a) > C) throw PreconditionError("quad_lower_bound_gap: requires |a| <= C");
  // e^b f'(b)^2 = e^b / (1+e^b)^2 = 1 / (4 cosh^2(b/2)); keep e^b out of it.
  const double fa = softplus(-a);
  const double fb = softplus(-b);
  const double dfb = -sigmoid(-b);
  const double ch = std::cosh(0.5 * b);
  const double curv = 1.0 / (4.0 * ch * ch * (1.0 + C));
  const double diff = a - b;
  return fa - (fb + dfb * diff + 0.5 * curv * diff * diff);
}

double independence_ineq_gap(double a, double b) {
  const double x = a - b;
  // (e^x - 1)/x, convention 1 at x = 0.
  const double quotient = x == 0.0 ? 1.0 : std::expm1(x) / x;
  // (1+e^b)/(1+e^a) computed in log space.
  const double ratio = std::exp(softplus(b) - softplus(a));
  return quotient * ratio - 1.0 / (1.0 + std::abs(a));
}

}  // namespace loss
}  // namespace aioli
