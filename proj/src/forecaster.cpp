#include "aioli/forecaster.hpp"

#include "newton.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aioli/error.hpp"
#include "aioli/loss.hpp"

namespace aioli {

namespace {

constexpr double kRadiusSlack = 1e-9;

void check_dim(std::span<const double> x, std::size_t d, const char* what) {
  if (x.size() != d) {
    throw InvalidInput(std::string(what) + ": expected dimension " + std::to_string(d) +
                       ", got " + std::to_string(x.size()));
  }
}

void check_input(const AioliState& state, std::span<const double> x, const char* what) {
  check_dim(x, state.config.d, what);
  if (!linalg::all_finite(x)) throw InvalidInput(std::string(what) + ": non-finite input");
  if (linalg::norm(x) > state.config.R + kRadiusSlack) {
    throw InvalidInput(std::string(what) + ": |x| exceeds the feature radius R");
  }
}

double norm2(const std::array<double, 2>& w, int p) {
  double s = 0.0;
  for (int k = 0; k < p; ++k) s += w[k] * w[k];
  return std::sqrt(s);
}

}  // namespace

void AioliConfig::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(lambda)) throw InvalidInput("AioliConfig: lambda must be positive");
  if (!positive(B)) throw InvalidInput("AioliConfig: B must be positive");
  if (!positive(R)) throw InvalidInput("AioliConfig: R must be positive");
  if (d == 0) throw InvalidInput("AioliConfig: dimension must be positive");
  if (!positive(rank_tol)) throw InvalidInput("AioliConfig: rank_tol must be positive");
  if (const auto* f = std::get_if<FixedSteps>(&inner); f && f->steps < 1) {
    throw InvalidInput("AioliConfig: inner steps must be at least 1");
  }
  if (const auto* tol = std::get_if<Tolerance>(&inner); tol && !positive(tol->eps)) {
    throw InvalidInput("AioliConfig: inner tolerance must be positive");
  }
}

AioliConfig AioliConfig::for_horizon(std::size_t d, double B, double R, std::size_t n) {
  AioliConfig c;
  c.d = d;
  c.B = B;
  c.R = R;
  c.lambda = 1.0 / (B * B);
  c.inner = Tolerance{theorem3_tolerance(n, R, c.lambda, B)};
  return c;
}

AioliState init(const AioliConfig& config) {
  config.validate();
  AioliState s;
  s.t = 1;
  s.L = linalg::LowerTriangular(config.d, std::sqrt(config.lambda));
  s.b.assign(config.d, 0.0);
  s.config = config;
  return s;
}

SmallProblem reduce(const AioliState& state, std::span<const double> x) {
  check_input(state, x, "reduce");
  const linalg::Vector wb = linalg::solve_lower(state.L, state.b);
  const linalg::Vector wx = linalg::solve_lower(state.L, x);

  linalg::Sym2 m;
  m.a00 = linalg::dot(wb, wb);
  m.a01 = m.a10 = linalg::dot(wb, wx);
  m.a11 = linalg::dot(wx, wx);
  const linalg::EigenPair2 eig = linalg::eig2_symmetric_psd(m, state.config.rank_tol);

  SmallProblem prob;
  prob.p = eig.rank;
  const std::size_t d = state.config.d;
  for (int k = 0; k < prob.p; ++k) {
    const double root = std::sqrt(eig.sigma[k]);
    const double ub = eig.u[0][k];
    const double ux = eig.u[1][k];
    prob.u[k] = root * ub;
    prob.v[k] = root * ux;
    linalg::Vector col(d);
    for (std::size_t i = 0; i < d; ++i) col[i] = (ub * wb[i] + ux * wx[i]) / root;
    prob.backmap.push_back(std::move(col));
  }
  return prob;
}

double inner_objective(const SmallProblem& prob, const std::array<double, 2>& omega) {
  double sq = 0.0, lin = 0.0, z = 0.0;
  for (int k = 0; k < prob.p; ++k) {
    sq += omega[k] * omega[k];
    lin += prob.u[k] * omega[k];
    z += prob.v[k] * omega[k];
  }
  return sq - 2.0 * lin + loss::softplus(-z) + loss::softplus(z);
}

std::array<double, 2> inner_gradient(const SmallProblem& prob,
                                     const std::array<double, 2>& omega) {
  double z = 0.0;
  for (int k = 0; k < prob.p; ++k) z += prob.v[k] * omega[k];
  // -(1+e^z)^{-1} + (1+e^{-z})^{-1} = tanh(z/2)
  const double t = std::tanh(0.5 * z);
  std::array<double, 2> g{};
  for (int k = 0; k < prob.p; ++k) g[k] = 2.0 * omega[k] - 2.0 * prob.u[k] + t * prob.v[k];
  return g;
}

std::int64_t inner_step_cap(double R, double lambda, std::size_t round, double eps) {
  const double arg = R * static_cast<double>(round) / (eps * std::sqrt(lambda));
  const double steps = (4.0 + R * R / lambda) * std::log(arg);
  if (!(steps >= 1.0)) return 1;
  return static_cast<std::int64_t>(std::ceil(steps));
}

InnerSolution solve_inner(const SmallProblem& prob, const InnerMode& mode, double lambda,
                          double R, std::size_t round) {
  InnerSolution sol;
  if (prob.p == 0) return sol;
  const double step = lambda / (4.0 * lambda + R * R);

  if (const auto* fixed = std::get_if<FixedSteps>(&mode)) {
    for (std::int64_t i = 0; i < fixed->steps; ++i) {
      const auto g = inner_gradient(prob, sol.omega);
      for (int k = 0; k < prob.p; ++k) sol.omega[k] -= step * g[k];
    }
    sol.iterations = fixed->steps;
    return sol;
  }

  const double eps = std::get<Tolerance>(mode).eps;
  const std::int64_t cap = inner_step_cap(R, lambda, round, eps);
  // Omega is 2-strongly convex, so |w - w*| <= |grad(w)| / 2.
  while (sol.iterations < cap) {
    const auto g = inner_gradient(prob, sol.omega);
    if (norm2(g, prob.p) <= 2.0 * eps) break;
    for (int k = 0; k < prob.p; ++k) sol.omega[k] -= step * g[k];
    ++sol.iterations;
  }
  return sol;
}

Prediction predict(const AioliState& state, std::span<const double> x) {
  const SmallProblem prob = reduce(state, x);
  Prediction pred;
  const std::size_t d = state.config.d;
  if (prob.p == 0) {
    pred.theta_hat.assign(d, 0.0);
    pred.y_hat = 0.0;
    return pred;
  }
  const InnerSolution sol =
      solve_inner(prob, state.config.inner, state.config.lambda, state.config.R, state.t);
  linalg::Vector r(d, 0.0);
  for (int k = 0; k < prob.p; ++k) {
    for (std::size_t i = 0; i < d; ++i) r[i] += prob.backmap[k][i] * sol.omega[k];
  }
  pred.theta_hat = linalg::solve_upper_transpose(state.L, r);
  pred.y_hat = linalg::dot(pred.theta_hat, x);
  return pred;
}

void update(AioliState& state, std::span<const double> x, int y, const Prediction& pred) {
  check_label(y);
  check_dim(x, state.config.d, "update");
  check_dim(pred.theta_hat, state.config.d, "update");
  const AioliConfig& c = state.config;
  const double yd = static_cast<double>(y);
  const double m = yd * pred.y_hat;
  const double one_plus_br = 1.0 + c.B * c.R;

  // g = -y x / (1 + e^m)
  const double s = loss::sigmoid(-m);
  linalg::Vector g(x.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = -yd * x[i] * s;

  // sqrt(eta/2) * g. For huge m, eta overflows while eta * |g|^2 -> 0; the
  // cosh form is the same quantity without the overflow.
  const double eta = loss::curvature(pred.y_hat, y, c.B, c.R);
  linalg::Vector v(g.size());
  if (std::isfinite(eta)) {
    const double scale = std::sqrt(0.5 * eta);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = scale * g[i];
  } else {
    const double f = 1.0 / (2.0 * std::sqrt(2.0 * one_plus_br) * std::cosh(0.5 * m));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = -yd * x[i] * f;
  }
  linalg::cholesky_rank1_update(state.L, v);

  // eta * g^T theta_hat = -m sigmoid(m) / (1 + BR), finite for every m.
  const double eta_g_theta = std::isfinite(eta) && eta > loss::kCurvatureFloor
                                 ? eta * linalg::dot(g, pred.theta_hat)
                                 : -m * loss::sigmoid(m) / one_plus_br;
  const double coef = 0.5 * (eta_g_theta - 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) state.b[i] += coef * g[i];
  ++state.t;
}

linalg::Vector exact_solve(const AioliState& state, std::span<const double> x) {
  check_dim(x, state.config.d, "exact_solve");
  const std::size_t d = state.config.d;
  const auto A = state.L.gram();
  auto times_a = [&](const linalg::Vector& th, std::size_t i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += A[i][j] * th[j];
    return s;
  };

  detail::NewtonProblem p;
  p.value = [&](const linalg::Vector& th) {
    double quad = 0.0;
    for (std::size_t i = 0; i < d; ++i) quad += th[i] * times_a(th, i);
    const double z = linalg::dot(th, x);
    return quad - 2.0 * linalg::dot(state.b, th) + loss::softplus(-z) + loss::softplus(z);
  };
  p.derivatives = [&](const linalg::Vector& th, linalg::Vector& g,
                      std::vector<linalg::Vector>& H) {
    const double z = linalg::dot(th, x);
    const double curv = 1.0 / (1.0 + std::cosh(z));
    for (std::size_t i = 0; i < d; ++i) {
      g[i] = 2.0 * times_a(th, i) - 2.0 * state.b[i] + std::tanh(0.5 * z) * x[i];
      for (std::size_t j = 0; j < d; ++j) H[i][j] = 2.0 * A[i][j] + curv * x[i] * x[j];
    }
  };
  p.floor_tol = 1e-8 * (1.0 + linalg::norm(state.b) + linalg::norm(x));

  // Start from the minimizer without the two virtual losses.
  return detail::damped_newton(
      p, linalg::solve_upper_transpose(state.L, linalg::solve_lower(state.L, state.b)),
      "exact_solve");
}

std::int64_t theorem3_steps(std::size_t n, double R, double lambda, double B) {
  const double nd = static_cast<double>(n);
  const double arg = 3.0 * nd * nd * R * R / lambda * (nd * R * R / (8.0 * lambda) + B);
  const double steps = (4.0 + R * R / lambda) * std::log(arg);
  if (!(steps >= 1.0)) return 1;
  return static_cast<std::int64_t>(std::ceil(steps));
}

double theorem3_tolerance(std::size_t n, double R, double lambda, double B) {
  const double nd = static_cast<double>(n);
  return std::sqrt(lambda) / (3.0 * nd * R * (nd * R * R / (8.0 * lambda) + B));
}

AioliLearner::AioliLearner(const AioliConfig& config, bool keep_snapshots)
    : state_(init(config)), keep_snapshots_(keep_snapshots) {}

double AioliLearner::predict(std::span<const double> x) {
  if (keep_snapshots_ && snapshots_.size() < state_.t) snapshots_.push_back(snapshot());
  last_ = aioli::predict(state_, x);
  pending_ = true;
  return last_.y_hat;
}

void AioliLearner::update(std::span<const double> x, int y) {
  if (!pending_) throw PreconditionError("AioliLearner: update called without predict");
  aioli::update(state_, x, y, last_);
  pending_ = false;
}

AioliSnapshot AioliLearner::snapshot() const { return std::make_shared<const AioliState>(state_); }

}  // namespace aioli
