#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aioli/forecaster.hpp"
#include "aioli/learner.hpp"
#include "aioli/linalg.hpp"
#include "aioli/loss.hpp"

namespace aioli::bench {

enum class StreamKind { kAdversarial, kGaussian, kFile };

struct StreamSpec {
  StreamKind kind = StreamKind::kAdversarial;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  // adversarial
  int chi = 1;
  double eps = 0.01;
  double B = 0.0;  // <= 0 selects log(n)
  // gaussian
  std::size_t d = 1;
  double margin_scale = 2.0;
  double R = 1.0;
  // file
  std::string path;

  void validate() const;
  double resolved_B() const;
  std::size_t dim() const { return kind == StreamKind::kAdversarial ? 1 : d; }
};

// The two support points of the adversarial distribution and P(y = +1).
struct AdversarialLaw {
  double x_pos = 0.0;  // drawn with label +1
  double x_neg = 0.0;  // drawn with label -1
  double p_pos = 0.0;
};

// Throws InvalidInput if p_pos falls outside [0, 1].
AdversarialLaw adversarial_law(double eps, double B, int chi);

std::vector<Example> adversarial_stream(const StreamSpec& spec);
// Logistic labels on Gaussian inputs clipped to the R-ball. The hidden
// direction depends only on spec.seed; `draw_stream` selects an independent
// sample from the same distribution.
std::vector<Example> gaussian_stream(const StreamSpec& spec, std::uint64_t draw_stream = 0);
std::vector<Example> make_stream(const StreamSpec& spec);

// One example per line: "y x_1 ... x_d".
std::vector<Example> read_stream_file(const std::string& path);
void write_stream_file(const std::string& path, std::span<const Example> examples);

// Sum of logistic losses of theta over the examples.
double total_loss(std::span<const Example> examples, std::span<const double> theta);

// Minimizer of the total loss over {|theta| <= B} by projected Newton,
// to projected-gradient norm 1e-8 (measured at step 4 / sum |x|^2).
linalg::Vector best_in_ball(std::span<const Example> examples, double B);

struct RegretTrace {
  std::vector<double> learner_loss;
  std::vector<double> comparator_loss;
  std::vector<double> cum_loss;
  std::vector<double> cum_regret;
  std::vector<std::int64_t> predict_ns;
  std::vector<std::int64_t> update_ns;
  linalg::Vector comparator;
  bool complete = true;
  std::string error;

  std::size_t rounds() const { return learner_loss.size(); }
  double final_regret() const { return cum_regret.empty() ? 0.0 : cum_regret.back(); }
};

// Plays the learner on the stream, then scores it against best_in_ball.
// A learner exception stops the run; the trace then covers the rounds
// played, with complete = false and the message in `error`.
RegretTrace run_experiment(Learner& learner, std::span<const Example> stream, double B);

// lambda |theta|^2 + d (1+BR) log(1 + n R^2 / (8 d (1+BR) lambda)).
double theorem1_bound(double lambda, double B, double R, std::size_t d, std::size_t n,
                      double theta_norm);
// The same bound at lambda = 1/B^2, |theta| = B.
double theorem1_bound_default_lambda(double B, double R, std::size_t d, std::size_t n);
// theorem1_bound + 3 n R (n R^2 / (8 lambda) + B) eps.
double theorem4_bound(double lambda, double B, double R, std::size_t d, std::size_t n,
                      double theta_norm, double eps);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t used = 0;
  std::size_t excluded = 0;  // non-positive regrets dropped before fitting
};

// Least-squares slope of log(regret) against log(n). Throws InvalidInput
// when fewer than 3 positive points remain.
SlopeFit loglog_slope(std::span<const double> ns, std::span<const double> regrets);

enum class Algo { kAioli, kOgd, kOns, kFtrl, kZero };

Algo parse_algo(const std::string& name);
std::string algo_name(Algo algo);

struct LearnerSpec {
  Algo algo = Algo::kAioli;
  std::size_t d = 1;
  std::size_t n = 1;  // horizon, used for the default inner tolerance
  double B = 1.0;
  double R = 1.0;
  std::optional<double> lambda;  // default: 1/B^2 for AIOLI, 1 for FTRL
  std::optional<InnerMode> inner;

  double resolved_lambda() const;
};

std::unique_ptr<Learner> make_learner(const LearnerSpec& spec);

// Runs fn(0..count-1) on up to hardware_concurrency threads. Each index is
// handled exactly once; results must be written to per-index slots.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

struct ReplicateResult {
  int chi = 1;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  double final_regret = 0.0;
  double comparator_norm = 0.0;
};

struct WorstCasePoint {
  std::size_t n = 0;
  double avg_regret_minus = 0.0;  // chi = -1
  double avg_regret_plus = 0.0;   // chi = +1
  double worst_avg_regret = 0.0;
  std::vector<ReplicateResult> replicates;
};

// Adversarial protocol at horizon n: B = log n, R = 1, `replicates` runs
// for each chi, and the larger of the two average regrets.
WorstCasePoint worst_case_regret(Algo algo, std::size_t n, std::uint64_t base_seed,
                                 std::size_t replicates = 10, double eps = 0.01,
                                 std::optional<InnerMode> inner = std::nullopt);

}  // namespace aioli::bench
