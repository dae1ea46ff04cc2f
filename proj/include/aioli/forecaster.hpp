#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "aioli/learner.hpp"
#include "aioli/linalg.hpp"

namespace aioli {

// Inner gradient descent runs exactly `steps` iterations.
struct FixedSteps {
  std::int64_t steps = 1;
};
// Inner gradient descent stops once the iterate is provably within `eps`
// of the inner minimizer (gradient norm <= 2 eps), or at the step cap.
struct Tolerance {
  double eps = 1e-8;
};
using InnerMode = std::variant<FixedSteps, Tolerance>;

struct AioliConfig {
  double lambda = 1.0;
  double B = 1.0;
  double R = 1.0;
  std::size_t d = 1;
  InnerMode inner = Tolerance{};
  double rank_tol = linalg::kDefaultRankTol;

  // Throws InvalidInput on non-positive radii, lambda, eps or steps.
  void validate() const;

  // lambda = 1/B^2 and the inner tolerance that keeps the additive
  // optimization term of the regret bound at sqrt(lambda) over n rounds.
  static AioliConfig for_horizon(std::size_t d, double B, double R, std::size_t n);
};

// Sufficient statistics before round t: L L^T = A_{t-1}, b = b_{t-1}.
struct AioliState {
  std::size_t t = 1;
  linalg::LowerTriangular L;
  linalg::Vector b;
  AioliConfig config;
};

AioliState init(const AioliConfig& config);

// The rank-p reduction of the round's minimization problem.
struct SmallProblem {
  int p = 0;  // 0 flags the degenerate case b ~ 0 and x ~ 0
  std::array<double, 2> u{};
  std::array<double, 2> v{};
  // p columns of W U Sigma^{-1/2}, each a d-vector; lifts omega to r-space.
  std::vector<linalg::Vector> backmap;
};

SmallProblem reduce(const AioliState& state, std::span<const double> x);

// Omega(w) = |w|^2 - 2 u.w + log(1+e^{-v.w}) + log(1+e^{v.w}); entries
// beyond prob.p are ignored.
double inner_objective(const SmallProblem& prob, const std::array<double, 2>& omega);
std::array<double, 2> inner_gradient(const SmallProblem& prob, const std::array<double, 2>& omega);

struct InnerSolution {
  std::array<double, 2> omega{};
  std::int64_t iterations = 0;
};

// Gradient descent from 0 with step lambda / (4 lambda + R^2). `round` only
// enters the tolerance-mode step cap.
InnerSolution solve_inner(const SmallProblem& prob, const InnerMode& mode, double lambda,
                          double R, std::size_t round);

// Upper bound on the inner iterations needed for accuracy eps at `round`.
std::int64_t inner_step_cap(double R, double lambda, std::size_t round, double eps);

struct Prediction {
  linalg::Vector theta_hat;
  double y_hat = 0.0;
};

Prediction predict(const AioliState& state, std::span<const double> x);

// Folds round t's surrogate into (L, b) and advances t. `pred` must be the
// value predict returned for this x.
void update(AioliState& state, std::span<const double> x, int y, const Prediction& pred);

// Full-dimensional damped Newton on the round objective; test oracle for
// predict. Throws ConvergenceError after 200 iterations.
linalg::Vector exact_solve(const AioliState& state, std::span<const double> x);

// Inner iteration count that preserves the regret bound over n rounds.
std::int64_t theorem3_steps(std::size_t n, double R, double lambda, double B);
// The matching inner tolerance sqrt(lambda) / (3 n R (n R^2/(8 lambda) + B)).
double theorem3_tolerance(std::size_t n, double R, double lambda, double B);

using AioliSnapshot = std::shared_ptr<const AioliState>;

class AioliLearner final : public Learner {
 public:
  explicit AioliLearner(const AioliConfig& config, bool keep_snapshots = false);

  std::string name() const override { return "aioli"; }
  double predict(std::span<const double> x) override;
  void update(std::span<const double> x, int y) override;

  const AioliState& state() const { return state_; }
  const Prediction& last_prediction() const { return last_; }
  // Immutable copy of the statistics used to predict round state().t.
  AioliSnapshot snapshot() const;
  // Snapshot i-1 is the predictor used at round i (only if keep_snapshots).
  const std::vector<AioliSnapshot>& snapshots() const { return snapshots_; }

 private:
  AioliState state_;
  Prediction last_;
  bool pending_ = false;
  bool keep_snapshots_;
  std::vector<AioliSnapshot> snapshots_;
};

}  // namespace aioli
