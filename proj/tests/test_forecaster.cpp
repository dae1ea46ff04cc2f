#include <doctest.h>

#include <cmath>

#include "aioli/bench.hpp"
#include "aioli/error.hpp"
#include "aioli/forecaster.hpp"
#include "support.hpp"

using namespace aioli;
using testing_support::to_eigen;

namespace {

AioliConfig config(std::size_t d, double lambda, double B = 1.0, double R = 1.0,
                   InnerMode inner = FixedSteps{400}) {
  AioliConfig c;
  c.d = d;
  c.lambda = lambda;
  c.B = B;
  c.R = R;
  c.inner = inner;
  return c;
}

// Plays `rounds` Gaussian examples through predict/update.
AioliState played_state(std::size_t d, std::size_t rounds, std::uint64_t seed, double B = 2.0) {
  bench::StreamSpec spec;
  spec.kind = bench::StreamKind::kGaussian;
  spec.n = rounds;
  spec.d = d;
  spec.seed = seed;
  AioliState s = init(config(d, 1.0 / (B * B), B));
  for (const Example& ex : bench::gaussian_stream(spec)) {
    update(s, ex.x, ex.y, predict(s, ex.x));
  }
  return s;
}

SmallProblem problem(std::array<double, 2> u, std::array<double, 2> v, int p = 2) {
  SmallProblem prob;
  prob.p = p;
  prob.u = u;
  prob.v = v;
  return prob;
}

// Newton on the 2-D inner objective, independent of solve_inner.
std::array<double, 2> newton_inner(const SmallProblem& prob) {
  Eigen::Vector2d w = Eigen::Vector2d::Zero();
  const Eigen::Vector2d u(prob.u[0], prob.u[1]);
  const Eigen::Vector2d v(prob.v[0], prob.v[1]);
  for (int it = 0; it < 100; ++it) {
    const double z = v.dot(w);
    const Eigen::Vector2d g = 2.0 * w - 2.0 * u + std::tanh(0.5 * z) * v;
    if (g.norm() <= 1e-14) break;
    const Eigen::Matrix2d H =
        2.0 * Eigen::Matrix2d::Identity() + v * v.transpose() / (1.0 + std::cosh(z));
    w -= H.ldlt().solve(g);
  }
  return {w(0), w(1)};
}

}  // namespace

TEST_CASE("init") {
  const AioliState s = init(config(2, 4.0));
  CHECK(s.t == 1);
  CHECK(s.L(0, 0) == 2.0);
  CHECK(s.L(1, 1) == 2.0);
  CHECK(s.L(1, 0) == 0.0);
  CHECK(s.b == linalg::Vector{0.0, 0.0});
  const AioliState h = init(AioliConfig::for_horizon(3, 10.0, 1.0, 100));
  CHECK(h.L(2, 2) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK_THROWS_AS(init(config(2, -1.0)), InvalidInput);
  CHECK_THROWS_AS(init(config(0, 1.0)), InvalidInput);
  CHECK_THROWS_AS(init(config(1, 1.0, 1.0, 1.0, Tolerance{0.0})), InvalidInput);
  CHECK_THROWS_AS(init(config(1, 1.0, 1.0, 1.0, FixedSteps{0})), InvalidInput);
}

TEST_CASE("reduce at the first round") {
  const double lambda = 0.25;
  const AioliState s = init(config(3, lambda));
  const linalg::Vector x{0.2, -0.4, 0.4};
  const SmallProblem prob = reduce(s, x);
  CHECK(prob.p == 1);
  CHECK(prob.u[0] == doctest::Approx(0.0));
  CHECK(std::abs(prob.v[0]) == doctest::Approx(linalg::norm(x) / std::sqrt(lambda)));

  const SmallProblem zero = reduce(s, linalg::Vector(3, 0.0));
  CHECK(zero.p == 0);
  CHECK_THROWS_AS(reduce(s, linalg::Vector{1.0, 1.0, 0.0}), InvalidInput);
  CHECK_THROWS_AS(reduce(s, linalg::Vector{0.1, 0.1}), InvalidInput);
}

TEST_CASE("reduce preserves the quadratic forms") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const AioliState s = played_state(5, 50, seed);
    const Eigen::MatrixXd A = to_eigen(s.L.gram());
    const Eigen::MatrixXd Ainv = A.inverse();
    const Eigen::VectorXd b = to_eigen(s.b);
    CounterRng rng(seed);
    linalg::Vector x = testing_support::random_vector(rng, 5);
    for (double& xi : x) xi /= 3.0 * linalg::norm(x);
    const Eigen::VectorXd xe = to_eigen(x);
    const SmallProblem prob = reduce(s, x);
    REQUIRE(prob.p == 2);
    const double uu = prob.u[0] * prob.u[0] + prob.u[1] * prob.u[1];
    const double vv = prob.v[0] * prob.v[0] + prob.v[1] * prob.v[1];
    const double uv = prob.u[0] * prob.v[0] + prob.u[1] * prob.v[1];
    CHECK(uu == doctest::Approx(b.dot(Ainv * b)).epsilon(1e-10));
    CHECK(vv == doctest::Approx(xe.dot(Ainv * xe)).epsilon(1e-10));
    CHECK(uv == doctest::Approx(b.dot(Ainv * xe)).epsilon(1e-10));
  }
}

TEST_CASE("inner objective and gradient") {
  const SmallProblem flat = problem({0.0, 0.0}, {0.0, 0.0});
  CHECK(inner_objective(flat, {0.0, 0.0}) == doctest::Approx(2.0 * std::log(2.0)));
  CHECK(inner_gradient(flat, {0.0, 0.0})[0] == 0.0);
  CHECK(inner_gradient(flat, {0.0, 0.0})[1] == 0.0);

  const SmallProblem quad = problem({1.0, 0.0}, {0.0, 0.0});
  CHECK(inner_objective(quad, {1.0, 0.0}) == doctest::Approx(-1.0 + 2.0 * std::log(2.0)));
  CHECK(inner_gradient(quad, {1.0, 0.0})[0] == doctest::Approx(0.0));

  CounterRng rng(4);
  const double h = 1e-6;
  for (int trial = 0; trial < 200; ++trial) {
    const SmallProblem prob = problem({rng.normal(), rng.normal()},
                                      {3.0 * rng.normal(), 3.0 * rng.normal()});
    const std::array<double, 2> w{2.0 * rng.normal(), 2.0 * rng.normal()};
    const auto g = inner_gradient(prob, w);
    for (int i = 0; i < 2; ++i) {
      auto wp = w, wm = w;
      wp[i] += h;
      wm[i] -= h;
      const double fd = (inner_objective(prob, wp) - inner_objective(prob, wm)) / (2.0 * h);
      CHECK(std::abs(fd - g[i]) <= 1e-6);
    }
  }
}

TEST_CASE("solve_inner") {
  const SmallProblem sym = problem({0.0, 0.0}, {2.0, -1.0});
  for (std::int64_t T : {1, 7, 100}) {
    const auto sol = solve_inner(sym, FixedSteps{T}, 1.0, 1.0, 1);
    CHECK(sol.omega[0] == 0.0);
    CHECK(sol.omega[1] == 0.0);
    CHECK(sol.iterations == T);
  }

  const double lambda = 0.5, R = 1.0;
  const double kappa = 2.0 + R * R / (2.0 * lambda);
  const SmallProblem quad = problem({1.0, 0.0}, {0.0, 0.0});
  const auto sol = solve_inner(quad, FixedSteps{200}, lambda, R, 1);
  CHECK(std::hypot(sol.omega[0] - 1.0, sol.omega[1]) <= std::exp(-200.0 / (2.0 * kappa)));

  CounterRng rng(5);
  for (double ratio : {1.0, 10.0, 100.0}) {
    const double lam = 1.0 / ratio;
    const double k = 2.0 + ratio / 2.0;
    for (int trial = 0; trial < 100; ++trial) {
      // |v|^2 <= R^2 / lambda, as produced by reduce on admissible inputs.
      const double vn = std::sqrt(ratio) * rng.uniform();
      const double ang = 2.0 * 3.141592653589793 * rng.uniform();
      const SmallProblem prob = problem({5.0 * rng.normal(), 5.0 * rng.normal()},
                                        {vn * std::cos(ang), vn * std::sin(ang)});
      const auto star = newton_inner(prob);
      for (std::int64_t T : {10, 50, 200}) {
        const auto w = solve_inner(prob, FixedSteps{T}, lam, 1.0, 1).omega;
        const double err = std::hypot(w[0] - star[0], w[1] - star[1]);
        CHECK(err <= std::exp(-static_cast<double>(T) / (2.0 * k)) *
                             std::hypot(star[0], star[1]) +
                         1e-13);
      }
      const double eps = 1e-6;
      const auto tol = solve_inner(prob, Tolerance{eps}, lam, 1.0, 10);
      CHECK(std::hypot(tol.omega[0] - star[0], tol.omega[1] - star[1]) <= eps);
      CHECK(tol.iterations <= inner_step_cap(1.0, lam, 10, eps));
    }
  }
}

TEST_CASE("predict at the first round and at x = 0") {
  AioliState s = init(config(3, 0.5));
  const Prediction p = predict(s, linalg::Vector{0.3, 0.1, -0.5});
  CHECK(p.y_hat == 0.0);
  for (double v : p.theta_hat) CHECK(v == 0.0);
  update(s, linalg::Vector{0.3, 0.1, -0.5}, 1, p);
  CHECK(predict(s, linalg::Vector(3, 0.0)).y_hat == 0.0);
}

TEST_CASE("update by hand") {
  AioliState s = init(config(1, 1.0, 1.0, 1.0));
  const linalg::Vector x{1.0};
  const Prediction p = predict(s, x);
  CHECK(p.y_hat == 0.0);
  update(s, x, 1, p);
  CHECK(s.t == 2);
  CHECK(s.L(0, 0) == doctest::Approx(std::sqrt(1.0625)).epsilon(1e-15));
  CHECK(s.b[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS_AS(update(s, x, 0, predict(s, x)), InvalidInput);
}

TEST_CASE("state matches its defining sums") {
  const std::size_t d = 3;
  const double B = 2.0, R = 1.0, lambda = 0.25;
  bench::StreamSpec spec;
  spec.kind = bench::StreamKind::kGaussian;
  spec.n = 120;
  spec.d = d;
  spec.seed = 21;
  AioliState s = init(config(d, lambda, B, R));
  Eigen::MatrixXd A = lambda * Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
  std::size_t t = 0;
  for (const Example& ex : bench::gaussian_stream(spec)) {
    const Prediction p = predict(s, ex.x);
    const Eigen::VectorXd g = to_eigen(loss::logistic_grad(p.theta_hat, ex));
    const double eta = loss::curvature(p.y_hat, ex.y, B, R);
    const double trace_before = s.L.gram()[0][0] + s.L.gram()[1][1] + s.L.gram()[2][2];
    update(s, ex.x, ex.y, p);
    ++t;
    A += 0.5 * eta * g * g.transpose();
    b += 0.5 * (eta * g.dot(to_eigen(p.theta_hat)) - 1.0) * g;
    const auto G = s.L.gram();
    const double trace_after = G[0][0] + G[1][1] + G[2][2];
    CHECK(trace_after - trace_before <= R * R / (8.0 * (1.0 + B * R)) * (1.0 + 1e-12));
    CHECK(linalg::norm(s.b) <= static_cast<double>(t) * R);
  }
  CHECK((to_eigen(s.L.gram()) - A).cwiseAbs().maxCoeff() <= 1e-10 * A.norm());
  CHECK((to_eigen(s.b) - b).norm() <= 1e-10 * (1.0 + b.norm()));
}

TEST_CASE("exact_solve") {
  AioliState fresh = init(config(2, 1.0));
  const auto zero = exact_solve(fresh, linalg::Vector{0.5, 0.5});
  CHECK(zero[0] == doctest::Approx(0.0));
  CHECK(zero[1] == doctest::Approx(0.0));

  for (std::uint64_t seed : {3u, 4u, 5u}) {
    const AioliState s = played_state(1, 40, seed);
    const double a = s.L(0, 0) * s.L(0, 0);
    const double bb = s.b[0];
    const double x = 0.7;
    auto dF = [&](double th) {
      return 2.0 * a * th - 2.0 * bb + std::tanh(0.5 * th * x) * x;
    };
    // Bracketing oracle: bisection on the sign of F', which resolves the
    // minimizer to round-off (a search on F values stalls near 1e-8).
    double lo = -100.0, hi = 100.0;
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      (dF(mid) > 0.0 ? hi : lo) = mid;
    }
    const auto th = exact_solve(s, linalg::Vector{x});
    CHECK(std::abs(th[0] - 0.5 * (lo + hi)) <= 1e-8);
    CHECK(std::abs(dF(th[0])) <= 1e-12);
  }
}

TEST_CASE("predict agrees with exact_solve") {
  for (std::size_t d : {1u, 2u, 5u}) {
    const std::size_t n = 200;
    const double B = 3.0;
    AioliConfig c = config(d, 1.0 / (B * B), B);
    c.inner = FixedSteps{theorem3_steps(n, c.R, c.lambda, B)};
    AioliState s = init(c);
    bench::StreamSpec spec;
    spec.kind = bench::StreamKind::kGaussian;
    spec.n = n;
    spec.d = d;
    spec.seed = 40 + d;
    double worst = 0.0;
    for (const Example& ex : bench::gaussian_stream(spec)) {
      const Prediction p = predict(s, ex.x);
      const auto oracle = exact_solve(s, ex.x);
      double diff = 0.0;
      for (std::size_t i = 0; i < d; ++i) diff += std::pow(p.theta_hat[i] - oracle[i], 2);
      worst = std::max(worst, std::sqrt(diff));
      update(s, ex.x, ex.y, p);
    }
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("inner step count and tolerance for a horizon") {
  CHECK(theorem3_steps(100, 1.0, 1.0, 1.0) == 65);
  CHECK(theorem3_steps(10, 1.0, 1e12, 1.0) == 1);
  const double B = std::log(1e4);
  const auto T = theorem3_steps(10000, 1.0, 1.0 / (B * B), B);
  CHECK(T > 0);
  CHECK(T < 100000);
  const double lambda = 1.0 / (B * B);
  const double eps = theorem3_tolerance(10000, 1.0, lambda, B);
  CHECK(3.0 * 1e4 * (1e4 / (8.0 * lambda) + B) * eps ==
        doctest::Approx(std::sqrt(lambda)).epsilon(1e-12));
}

TEST_CASE("AioliLearner protocol and snapshots") {
  AioliLearner learner(config(1, 1.0), true);
  CHECK_THROWS_AS(learner.update(linalg::Vector{0.5}, 1), PreconditionError);
  for (int t = 0; t < 5; ++t) {
    learner.predict(linalg::Vector{0.5});
    learner.update(linalg::Vector{0.5}, t % 2 ? 1 : -1);
  }
  CHECK(learner.state().t == 6);
  REQUIRE(learner.snapshots().size() == 5);
  CHECK(learner.snapshots()[0]->t == 1);
  CHECK(learner.snapshots()[4]->t == 5);
  CHECK_THROWS_AS(learner.update(linalg::Vector{0.5}, 1), PreconditionError);
}
