#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "aioli/forecaster.hpp"
#include "aioli/learner.hpp"
#include "aioli/linalg.hpp"
#include "aioli/loss.hpp"

namespace aioli {

enum class BaselineKind { kOgd, kOns, kFtrlProper };

struct BaselineConfig {
  BaselineKind kind = BaselineKind::kOgd;
  double B = 1.0;
  double R = 1.0;
  double lambda = 1.0;  // FTRL regularization
  std::size_t d = 1;
  double ons_alpha = 0.0;  // <= 0 selects e^{-BR}
  double ons_eps = 0.0;    // <= 0 selects 1 / (gamma * 2B)^2

  void validate() const;
  double resolved_ons_alpha() const;
  double ons_gamma() const;
  double resolved_ons_eps() const;
};

// Euclidean projection onto {|theta| <= B}.
linalg::Vector project_ball(std::span<const double> theta, double B);

// Pi_B(theta - B / (R sqrt(t)) g).
linalg::Vector ogd_step(std::span<const double> theta, std::span<const double> g, std::size_t t,
                        double B, double R);

// argmin_{|w| <= B} (w - z)^T A (w - z) with A = L L^T, by accelerated
// projected gradient started at the Euclidean projection of z. Throws
// ConvergenceError after 1000 iterations.
linalg::Vector project_a_norm_ball(const linalg::LowerTriangular& L, std::span<const double> z,
                                   double B);

struct OnsState {
  linalg::LowerTriangular L;  // factor of A = eps I + sum g g^T
  linalg::Vector theta;
  double gamma = 1.0;
  double B = 1.0;
};

OnsState ons_init(const BaselineConfig& config);
// A += g g^T, then theta <- Pi^A(theta - A^{-1} g / gamma).
void ons_step(OnsState& state, std::span<const double> g);

// argmin_theta sum_s log(1 + e^{-y_s theta^T x_s}) + lambda |theta|^2 by
// damped Newton from `warm_start` to gradient norm 1e-10.
linalg::Vector ftrl_proper_step(std::span<const Example> history, double lambda,
                                std::span<const double> warm_start = {});

// Prediction of the tau-th (1-based) round predictor on a fresh input x.
double online_to_batch(std::span<const AioliSnapshot> snapshots, std::span<const double> x,
                       std::size_t tau);

class OgdLearner final : public Learner {
 public:
  explicit OgdLearner(const BaselineConfig& config);
  std::string name() const override { return "ogd"; }
  double predict(std::span<const double> x) override;
  void update(std::span<const double> x, int y) override;
  const linalg::Vector& theta() const { return theta_; }

 private:
  BaselineConfig config_;
  linalg::Vector theta_;
  std::size_t t_ = 1;
};

class OnsLearner final : public Learner {
 public:
  explicit OnsLearner(const BaselineConfig& config);
  std::string name() const override { return "ons"; }
  double predict(std::span<const double> x) override;
  void update(std::span<const double> x, int y) override;
  const linalg::Vector& theta() const { return state_.theta; }

 private:
  OnsState state_;
};

class FtrlLearner final : public Learner {
 public:
  explicit FtrlLearner(const BaselineConfig& config);
  std::string name() const override { return "ftrl"; }
  double predict(std::span<const double> x) override;
  void update(std::span<const double> x, int y) override;
  const linalg::Vector& theta() const { return theta_; }

 private:
  BaselineConfig config_;
  std::vector<Example> history_;
  linalg::Vector theta_;
};

}  // namespace aioli
