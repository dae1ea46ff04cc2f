#include "aioli/baselines.hpp"

#include "newton.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aioli/error.hpp"

namespace aioli {

namespace {

void check_dim(std::span<const double> v, std::size_t d, const char* what) {
  if (v.size() != d) throw InvalidInput(std::string(what) + ": dimension mismatch");
}

// A v with A = L L^T.
linalg::Vector gram_times(const linalg::LowerTriangular& L, std::span<const double> v) {
  const std::size_t d = L.dim();
  linalg::Vector lt(d, 0.0);  // L^T v
  for (std::size_t i = 0; i < d; ++i) {
    const auto row = L.row(i);
    for (std::size_t j = 0; j <= i; ++j) lt[j] += row[j] * v[i];
  }
  linalg::Vector out(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    const auto row = L.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j <= i; ++j) s += row[j] * lt[j];
    out[i] = s;
  }
  return out;
}

}  // namespace

void BaselineConfig::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(B) || !positive(R) || !positive(lambda)) {
    throw InvalidInput("BaselineConfig: B, R and lambda must be positive");
  }
  if (d == 0) throw InvalidInput("BaselineConfig: dimension must be positive");
  if (!std::isfinite(ons_alpha) || !std::isfinite(ons_eps)) {
    throw InvalidInput("BaselineConfig: ONS parameters must be finite");
  }
}

double BaselineConfig::resolved_ons_alpha() const {
  return ons_alpha > 0.0 ? ons_alpha : std::exp(-B * R);
}

double BaselineConfig::ons_gamma() const {
  return 0.5 * std::min(1.0 / (4.0 * R * B), resolved_ons_alpha());
}

double BaselineConfig::resolved_ons_eps() const {
  if (ons_eps > 0.0) return ons_eps;
  const double diameter = 2.0 * B;
  const double gd = ons_gamma() * diameter;
  return 1.0 / (gd * gd);
}

linalg::Vector project_ball(std::span<const double> theta, double B) {
  linalg::Vector out(theta.begin(), theta.end());
  const double n = linalg::norm(theta);
  if (n > B) {
    for (double& v : out) v *= B / n;
  }
  return out;
}

linalg::Vector ogd_step(std::span<const double> theta, std::span<const double> g, std::size_t t,
                        double B, double R) {
  check_dim(g, theta.size(), "ogd_step");
  if (t == 0) throw InvalidInput("ogd_step: rounds are 1-based");
  const double step = B / (R * std::sqrt(static_cast<double>(t)));
  linalg::Vector next(theta.size());
  for (std::size_t i = 0; i < next.size(); ++i) next[i] = theta[i] - step * g[i];
  return project_ball(next, B);
}

linalg::Vector project_a_norm_ball(const linalg::LowerTriangular& L, std::span<const double> z,
                                   double B) {
  const std::size_t d = L.dim();
  check_dim(z, d, "project_a_norm_ball");
  if (linalg::norm(z) <= B) return linalg::Vector(z.begin(), z.end());

  // grad of (w-z)^T A (w-z) is 2 A (w-z); 2 trace(A) bounds its Lipschitz constant.
  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (double v : L.row(i)) trace += v * v;
  }
  const double lipschitz = 2.0 * trace;
  const double step = 1.0 / lipschitz;

  linalg::Vector w = project_ball(z, B);
  linalg::Vector y = w;
  double momentum = 1.0;
  linalg::Vector diff(d);
  for (std::size_t i = 0; i < d; ++i) diff[i] = w[i] - z[i];
  const double scale = 1.0 + 2.0 * linalg::norm(gram_times(L, diff));

  constexpr int kMaxIter = 1000;
  constexpr double kTol = 1e-8;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    for (std::size_t i = 0; i < d; ++i) diff[i] = y[i] - z[i];
    const linalg::Vector ag = gram_times(L, diff);
    linalg::Vector trial(d);
    for (std::size_t i = 0; i < d; ++i) trial[i] = y[i] - step * 2.0 * ag[i];
    linalg::Vector next = project_ball(trial, B);

    // Gradient mapping at y.
    double gm = 0.0;
    for (std::size_t i = 0; i < d; ++i) gm += (y[i] - next[i]) * (y[i] - next[i]);
    gm = std::sqrt(gm) * lipschitz;
    if (gm <= kTol * scale) return next;

    const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    const double beta = (momentum - 1.0) / next_momentum;
    // Restart when the step goes against the previous direction.
    double progress = 0.0;
    for (std::size_t i = 0; i < d; ++i) progress += (y[i] - next[i]) * (next[i] - w[i]);
    if (progress > 0.0) {
      momentum = 1.0;
      y = next;
    } else {
      for (std::size_t i = 0; i < d; ++i) y[i] = next[i] + beta * (next[i] - w[i]);
      momentum = next_momentum;
    }
    w = std::move(next);
  }
  throw ConvergenceError("project_a_norm_ball: no convergence in 1000 iterations");
}

OnsState ons_init(const BaselineConfig& config) {
  config.validate();
  OnsState s;
  s.L = linalg::LowerTriangular(config.d, std::sqrt(config.resolved_ons_eps()));
  s.theta.assign(config.d, 0.0);
  s.gamma = config.ons_gamma();
  s.B = config.B;
  return s;
}

void ons_step(OnsState& state, std::span<const double> g) {
  check_dim(g, state.theta.size(), "ons_step");
  if (linalg::norm(g) == 0.0) return;
  linalg::cholesky_rank1_update(state.L, g);
  const linalg::Vector dir =
      linalg::solve_upper_transpose(state.L, linalg::solve_lower(state.L, g));
  linalg::Vector z(state.theta.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = state.theta[i] - dir[i] / state.gamma;
  state.theta = project_a_norm_ball(state.L, z, state.B);
}

linalg::Vector ftrl_proper_step(std::span<const Example> history, double lambda,
                                std::span<const double> warm_start) {
  if (!(lambda > 0.0)) throw InvalidInput("ftrl_proper_step: lambda must be positive");
  if (history.empty()) return linalg::Vector(warm_start.size(), 0.0);
  const std::size_t d = history.front().x.size();
  linalg::Vector theta(d, 0.0);
  if (!warm_start.empty()) {
    check_dim(warm_start, d, "ftrl_proper_step");
    theta.assign(warm_start.begin(), warm_start.end());
  }

  double scale = 0.0;
  for (const Example& ex : history) scale += linalg::norm(ex.x);

  detail::NewtonProblem p;
  p.value = [&](const linalg::Vector& th) {
    double s = lambda * linalg::dot(th, th);
    for (const Example& ex : history) s += loss::logistic_loss(linalg::dot(th, ex.x), ex.y);
    return s;
  };
  p.derivatives = [&](const linalg::Vector& th, linalg::Vector& grad,
                      std::vector<linalg::Vector>& H) {
    for (std::size_t i = 0; i < d; ++i) {
      grad[i] = 2.0 * lambda * th[i];
      std::fill(H[i].begin(), H[i].end(), 0.0);
      H[i][i] = 2.0 * lambda;
    }
    for (const Example& ex : history) {
      const double m = static_cast<double>(ex.y) * linalg::dot(th, ex.x);
      const double s = loss::sigmoid(-m);
      const double w = s * (1.0 - s);
      for (std::size_t i = 0; i < d; ++i) {
        grad[i] -= static_cast<double>(ex.y) * ex.x[i] * s;
        for (std::size_t j = 0; j <= i; ++j) H[i][j] += w * ex.x[i] * ex.x[j];
      }
    }
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i + 1; j < d; ++j) H[i][j] = H[j][i];
    }
  };
  p.grad_tol = 1e-10;
  p.floor_tol = 1e-8 * (1.0 + scale);
  p.max_iter = 100;
  return detail::damped_newton(p, theta, "ftrl_proper_step");
}

double online_to_batch(std::span<const AioliSnapshot> snapshots, std::span<const double> x,
                       std::size_t tau) {
  if (tau < 1 || tau > snapshots.size()) {
    throw InvalidInput("online_to_batch: index tau out of range");
  }
  return predict(*snapshots[tau - 1], x).y_hat;
}

OgdLearner::OgdLearner(const BaselineConfig& config)
    : config_(config), theta_(config.d, 0.0) {
  config_.validate();
}

double OgdLearner::predict(std::span<const double> x) { return linalg::dot(theta_, x); }

void OgdLearner::update(std::span<const double> x, int y) {
  check_label(y);
  const Example ex{linalg::Vector(x.begin(), x.end()), y};
  const linalg::Vector g = loss::logistic_grad(theta_, ex);
  theta_ = ogd_step(theta_, g, t_, config_.B, config_.R);
  ++t_;
}

OnsLearner::OnsLearner(const BaselineConfig& config) : state_(ons_init(config)) {}

double OnsLearner::predict(std::span<const double> x) { return linalg::dot(state_.theta, x); }

void OnsLearner::update(std::span<const double> x, int y) {
  check_label(y);
  const Example ex{linalg::Vector(x.begin(), x.end()), y};
  ons_step(state_, loss::logistic_grad(state_.theta, ex));
}

FtrlLearner::FtrlLearner(const BaselineConfig& config)
    : config_(config), theta_(config.d, 0.0) {
  config_.validate();
}

double FtrlLearner::predict(std::span<const double> x) { return linalg::dot(theta_, x); }

void FtrlLearner::update(std::span<const double> x, int y) {
  check_label(y);
  history_.push_back(Example{linalg::Vector(x.begin(), x.end()), y});
  theta_ = ftrl_proper_step(history_, config_.lambda, theta_);
}

}  // namespace aioli
