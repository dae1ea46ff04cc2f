#include "aioli/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <variant>

#include "aioli/bench.hpp"
#include "aioli/forecaster.hpp"
#include "aioli/linalg.hpp"
#include "aioli/loss.hpp"
#include "aioli/rng.hpp"

namespace aioli::verify {

namespace {

constexpr double kGridTol = 1e-12;

double lerp(double lo, double hi, std::size_t i, std::size_t count) {
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
}

}  // namespace

CheckResult check_lower_bound_grid(const Options& opts) {
  CheckResult r{"lower-bound grid", true, std::numeric_limits<double>::infinity(), 0};
  for (double C : {0.5, 1.0, 5.0, 20.0}) {
    constexpr std::size_t kA = 101, kB = 201;
    for (std::size_t i = 0; i < kA; ++i) {
      const double a = lerp(-C, C, i, kA);
      for (std::size_t j = 0; j < kB; ++j) {
        const double b = lerp(-50.0, 50.0, j, kB);
        double gap;
        if (opts.flip_eta_sign) {
          gap = loss::quadratic_lower_bound_gap_with(a, b, std::exp(-b) / (1.0 + C));
        } else {
          gap = loss::quad_lower_bound_gap(a, b, C);
        }
        r.min_slack = std::min(r.min_slack, gap);
        ++r.points;
      }
    }
  }
  r.passed = r.min_slack >= -kGridTol;
  return r;
}

CheckResult check_independence_grid() {
  CheckResult r{"independence inequality grid", true, std::numeric_limits<double>::infinity(), 0};
  constexpr std::size_t kN = 201;
  for (std::size_t i = 0; i < kN; ++i) {
    for (std::size_t j = 0; j < kN; ++j) {
      const double gap = loss::independence_ineq_gap(lerp(-30, 30, i, kN), lerp(-30, 30, j, kN));
      r.min_slack = std::min(r.min_slack, gap);
      ++r.points;
    }
  }
  r.passed = r.min_slack >= -kGridTol;
  return r;
}

CheckResult check_gradient_identity() {
  CheckResult r{"gradient identity", true, std::numeric_limits<double>::infinity(), 0};
  CounterRng rng(20240601);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = 1 + rng.below(5);
    const double B = 0.1 + 10.0 * rng.uniform();
    const double R = 0.1 + 5.0 * rng.uniform();
    linalg::Vector theta(d), x(d);
    for (double& v : theta) v = B * (2.0 * rng.uniform() - 1.0);
    for (double& v : x) v = rng.normal();
    const double xn = linalg::norm(x);
    for (double& v : x) v *= R * rng.uniform() / xn;
    const int y = rng.uniform() < 0.5 ? -1 : 1;

    const auto g = loss::logistic_grad(theta, Example{x, y});
    const auto g_other = loss::logistic_grad(theta, Example{x, -y});
    const double eta = loss::curvature(linalg::dot(theta, x), y, B, R);
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double rhs = -(1.0 + B * R) * eta * g[i];
      err = std::max(err, std::abs(g_other[i] - rhs));
      ref = std::max(ref, std::abs(g_other[i]));
    }
    const double rel = ref > 0.0 ? err / ref : err;
    worst = std::max(worst, rel);
    ++r.points;
  }
  r.min_slack = 1e-12 - worst;
  r.passed = worst <= 1e-12;
  return r;
}

CheckResult check_telescoping_sum() {
  CheckResult r{"telescoping sum", true, std::numeric_limits<double>::infinity(), 0};
  for (std::size_t d : {1u, 2u, 3u}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      bench::StreamSpec spec;
      spec.kind = bench::StreamKind::kGaussian;
      spec.n = 300;
      spec.d = d;
      spec.seed = seed;
      spec.margin_scale = 4.0;
      const auto stream = bench::gaussian_stream(spec);
      AioliConfig config = AioliConfig::for_horizon(d, 3.0, 1.0, spec.n);
      AioliState state = init(config);

      double lhs = 0.0;
      std::vector<linalg::Vector> C(d, linalg::Vector(d, 0.0));
      for (const Example& ex : stream) {
        const Prediction pred = predict(state, ex.x);
        update(state, ex.x, ex.y, pred);
        const auto g = loss::logistic_grad(pred.theta_hat, ex);
        const double eta = loss::curvature(pred.y_hat, ex.y, config.B, config.R);
        // A_t includes round t.
        const auto z = linalg::solve_lower(state.L, g);
        lhs += 0.5 * eta * linalg::dot(z, z);
        for (std::size_t i = 0; i < d; ++i) {
          for (std::size_t j = 0; j < d; ++j) C[i][j] += 0.5 * eta * g[i] * g[j];
        }
      }
      // log det(I + C / lambda) from a fresh factorization.
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
          C[i][j] = (i == j ? 1.0 : 0.0) + C[i][j] / config.lambda;
        }
      }
      const double rhs = linalg::cholesky_factor(C).log_det_gram();
      r.min_slack = std::min(r.min_slack, rhs - lhs);
      ++r.points;
    }
  }
  r.passed = r.min_slack >= -1e-8;
  return r;
}

CheckResult check_determinant_identity() {
  CheckResult r{"determinant identity", true, std::numeric_limits<double>::infinity(), 0};
  CounterRng rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + rng.below(6);
    // V = M M^T + u u^T + I keeps V - u u^T positive definite.
    std::vector<linalg::Vector> M(d, linalg::Vector(d));
    for (auto& row : M) {
      for (double& v : row) v = rng.normal();
    }
    linalg::Vector u(d);
    for (double& v : u) v = rng.normal();
    std::vector<linalg::Vector> U(d, linalg::Vector(d, 0.0)), V(d, linalg::Vector(d, 0.0));
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        double s = i == j ? 1.0 : 0.0;
        for (std::size_t k = 0; k < d; ++k) s += M[i][k] * M[j][k];
        U[i][j] = s;
        V[i][j] = s + u[i] * u[j];
      }
    }
    const auto LV = linalg::cholesky_factor(V);
    const auto LU = linalg::cholesky_factor(U);
    const auto z = linalg::solve_lower(LV, u);
    const double lhs = linalg::dot(z, z);
    const double rhs = 1.0 - std::exp(LU.log_det_gram() - LV.log_det_gram());
    worst = std::max(worst, std::abs(lhs - rhs));
    ++r.points;
  }
  r.min_slack = 1e-8 - worst;
  r.passed = worst <= 1e-8;
  return r;
}

CheckResult check_oracle_equivalence() {
  // The inner tolerance eps bounds the error in omega; the map back to theta
  // has norm at most 1/sqrt(lambda).
  CheckResult r{"oracle equivalence", true, std::numeric_limits<double>::infinity(), 0};
  for (std::size_t d : {1u, 2u, 5u}) {
    bench::StreamSpec spec;
    spec.kind = bench::StreamKind::kGaussian;
    spec.n = 100;
    spec.d = d;
    spec.seed = 11 + d;
    spec.margin_scale = 3.0;
    const auto stream = bench::gaussian_stream(spec);
    const AioliConfig config = AioliConfig::for_horizon(d, 3.0, 1.0, spec.n);
    const double allowed =
        std::get<Tolerance>(config.inner).eps / std::sqrt(config.lambda) + 1e-12;
    AioliState state = init(config);
    for (const Example& ex : stream) {
      const Prediction pred = predict(state, ex.x);
      const auto oracle = exact_solve(state, ex.x);
      double diff = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        diff += (pred.theta_hat[i] - oracle[i]) * (pred.theta_hat[i] - oracle[i]);
      }
      r.min_slack = std::min(r.min_slack, allowed - std::sqrt(diff));
      update(state, ex.x, ex.y, pred);
      ++r.points;
    }
  }
  r.passed = r.min_slack >= 0.0;
  return r;
}

std::vector<CheckResult> run_all(const Options& opts) {
  return {check_lower_bound_grid(opts), check_independence_grid(),    check_gradient_identity(),
          check_telescoping_sum(),      check_determinant_identity(), check_oracle_equivalence()};
}

}  // namespace aioli::verify
