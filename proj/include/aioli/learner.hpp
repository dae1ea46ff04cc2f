#pragma once

#include <span>
#include <string>

namespace aioli {

// Sequential protocol shared by AIOLI and the baselines: for each round,
// predict(x_t) then update(x_t, y_t) with the same x_t.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual std::string name() const = 0;
  virtual double predict(std::span<const double> x) = 0;
  virtual void update(std::span<const double> x, int y) = 0;
};

// Always predicts 0; loses log 2 every round.
class ZeroLearner final : public Learner {
 public:
  std::string name() const override { return "zero"; }
  double predict(std::span<const double>) override { return 0.0; }
  void update(std::span<const double>, int) override {}
};

}  // namespace aioli
