#include "aioli/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "aioli/baselines.hpp"
#include "aioli/error.hpp"
#include "aioli/io.hpp"
#include "aioli/rng.hpp"

namespace aioli::bench {

namespace {

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

linalg::Vector loss_gradient(std::span<const Example> examples, std::span<const double> theta) {
  linalg::Vector g(theta.size(), 0.0);
  for (const Example& ex : examples) {
    const double yd = static_cast<double>(ex.y);
    const double s = loss::sigmoid(-yd * linalg::dot(theta, ex.x));
    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= yd * ex.x[i] * s;
  }
  return g;
}

}  // namespace

void StreamSpec::validate() const {
  if (n < 1) throw InvalidInput("stream: n must be at least 1");
  switch (kind) {
    case StreamKind::kAdversarial:
      if (chi != 1 && chi != -1) throw InvalidInput("stream: chi must be -1 or +1");
      if (!(eps > 0.0 && eps < 1.0)) throw InvalidInput("stream: eps must lie in (0, 1)");
      if (!(resolved_B() > 0.0) || !std::isfinite(resolved_B())) {
        throw InvalidInput("stream: B must be positive (B = log n needs n >= 2)");
      }
      adversarial_law(eps, resolved_B(), chi);
      break;
    case StreamKind::kGaussian:
      if (d < 1) throw InvalidInput("stream: d must be at least 1");
      if (!(R > 0.0)) throw InvalidInput("stream: R must be positive");
      if (!std::isfinite(margin_scale)) throw InvalidInput("stream: margin scale must be finite");
      break;
    case StreamKind::kFile:
      if (path.empty()) throw InvalidInput("stream: file path is empty");
      break;
  }
}

double StreamSpec::resolved_B() const {
  return B > 0.0 ? B : std::log(static_cast<double>(n));
}

AdversarialLaw adversarial_law(double eps, double B, int chi) {
  if (!(B > 0.0)) throw InvalidInput("adversarial stream: B must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidInput("adversarial stream: eps must lie in (0, 1)");
  const double root = std::sqrt(eps);
  AdversarialLaw law;
  law.x_pos = 1.0 - root / (2.0 * B);
  law.x_neg = root / B;
  law.p_pos = root / (2.0 * B) + static_cast<double>(chi) * eps / B;
  if (!(law.p_pos >= 0.0 && law.p_pos <= 1.0)) {
    throw InvalidInput("adversarial stream: probability of +1 outside [0, 1]");
  }
  return law;
}

std::vector<Example> adversarial_stream(const StreamSpec& spec) {
  if (spec.kind != StreamKind::kAdversarial) {
    throw InvalidInput("adversarial_stream: spec is not adversarial");
  }
  spec.validate();
  const AdversarialLaw law = adversarial_law(spec.eps, spec.resolved_B(), spec.chi);
  CounterRng rng(spec.seed);
  std::vector<Example> out;
  out.reserve(spec.n);
  for (std::size_t t = 0; t < spec.n; ++t) {
    if (rng.uniform() < law.p_pos) {
      out.push_back(Example{{law.x_pos}, 1});
    } else {
      out.push_back(Example{{law.x_neg}, -1});
    }
  }
  return out;
}

std::vector<Example> gaussian_stream(const StreamSpec& spec, std::uint64_t draw_stream) {
  if (spec.kind != StreamKind::kGaussian) throw InvalidInput("gaussian_stream: spec is not gaussian");
  spec.validate();
  const std::size_t d = spec.d;
  CounterRng root(spec.seed);

  CounterRng dir_rng = root.split(0);
  linalg::Vector w(d);
  for (double& v : w) v = dir_rng.normal();
  const double wn = linalg::norm(w);
  for (double& v : w) v /= wn;

  CounterRng rng = root.split(1 + draw_stream);
  const double coord_scale = spec.R / std::sqrt(static_cast<double>(d));
  std::vector<Example> out;
  out.reserve(spec.n);
  for (std::size_t t = 0; t < spec.n; ++t) {
    linalg::Vector x(d);
    for (double& v : x) v = coord_scale * rng.normal();
    const double xn = linalg::norm(x);
    if (xn > spec.R) {
      for (double& v : x) v *= spec.R / xn;
    }
    const double p = loss::sigmoid(spec.margin_scale * linalg::dot(w, x) / spec.R);
    const int y = rng.uniform() < p ? 1 : -1;
    out.push_back(Example{std::move(x), y});
  }
  return out;
}

std::vector<Example> make_stream(const StreamSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case StreamKind::kAdversarial:
      return adversarial_stream(spec);
    case StreamKind::kGaussian:
      return gaussian_stream(spec);
    case StreamKind::kFile: {
      auto ex = read_stream_file(spec.path);
      if (ex.size() > spec.n) ex.resize(spec.n);
      return ex;
    }
  }
  throw InvalidInput("unknown stream kind");
}

std::vector<Example> read_stream_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open stream file '" + path + "'");
  std::vector<Example> out;
  std::string line;
  std::size_t lineno = 0;
  std::size_t d = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::string tok;
    std::vector<double> vals;
    try {
      while (fields >> tok) vals.push_back(io::parse_float(tok));
    } catch (const InvalidInput& e) {
      throw InvalidInput(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (vals.empty()) continue;
    if (vals.size() < 2) {
      throw InvalidInput(path + ":" + std::to_string(lineno) + ": expected 'y x_1 ... x_d'");
    }
    if (vals[0] != 1.0 && vals[0] != -1.0) {
      throw InvalidInput(path + ":" + std::to_string(lineno) + ": label must be -1 or 1");
    }
    if (d == 0) d = vals.size() - 1;
    if (vals.size() - 1 != d) {
      throw InvalidInput(path + ":" + std::to_string(lineno) + ": inconsistent dimension");
    }
    out.push_back(Example{linalg::Vector(vals.begin() + 1, vals.end()), vals[0] > 0 ? 1 : -1});
  }
  if (out.empty()) throw InvalidInput("stream file '" + path + "' has no examples");
  return out;
}

void write_stream_file(const std::string& path, std::span<const Example> examples) {
  std::string text;
  for (const Example& ex : examples) {
    text += ex.y > 0 ? "1" : "-1";
    for (double v : ex.x) {
      text += ' ';
      text += io::format_float(v);
    }
    text += '\n';
  }
  io::write_file_atomic(path, text);
}

double total_loss(std::span<const Example> examples, std::span<const double> theta) {
  CompensatedSum s;
  for (const Example& ex : examples) s.add(loss::logistic_loss(linalg::dot(theta, ex.x), ex.y));
  return s.value();
}

namespace {

// argmin over |z| <= B of g'(z - theta) + (z - theta)'H(z - theta)/2, by
// bisection on the multiplier of the ball constraint.
linalg::Vector newton_in_ball(const std::vector<linalg::Vector>& H, const linalg::Vector& g,
                              const linalg::Vector& theta, double B) {
  const std::size_t d = theta.size();
  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i) trace += H[i][i];
  const double ridge = 1e-12 * std::max(trace, 1.0);
  linalg::Vector rhs(d);
  for (std::size_t i = 0; i < d; ++i) {
    rhs[i] = -g[i];
    for (std::size_t j = 0; j < d; ++j) rhs[i] += H[i][j] * theta[j];
  }
  auto solve = [&](double mu) {
    auto M = H;
    for (std::size_t i = 0; i < d; ++i) M[i][i] += ridge + mu;
    const auto L = linalg::cholesky_factor(M);
    return linalg::solve_upper_transpose(L, linalg::solve_lower(L, rhs));
  };
  linalg::Vector z = solve(0.0);
  if (linalg::norm(z) <= B) return z;
  double lo = 0.0;
  double hi = linalg::norm(rhs) / B;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (linalg::norm(solve(mid)) > B) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return project_ball(solve(hi), B);
}

}  // namespace

linalg::Vector best_in_ball(std::span<const Example> examples, double B) {
  if (examples.empty()) throw InvalidInput("best_in_ball: no examples");
  if (!(B > 0.0)) throw InvalidInput("best_in_ball: B must be positive");
  const std::size_t d = examples.front().x.size();

  double curvature_bound = 0.0;  // sum |x|^2 / 4 bounds the Hessian norm
  for (const Example& ex : examples) curvature_bound += 0.25 * linalg::dot(ex.x, ex.x);
  const double measure_lip = std::max(curvature_bound, 1e-12);

  linalg::Vector theta(d, 0.0);
  double f = total_loss(examples, theta);
  constexpr double kTol = 1e-8;
  constexpr int kMaxIter = 500;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    const linalg::Vector g = loss_gradient(examples, theta);
    // Projected-gradient norm L |theta - Pi(theta - g / L)| at the global
    // curvature bound L.
    linalg::Vector probe(d);
    for (std::size_t i = 0; i < d; ++i) probe[i] = theta[i] - g[i] / measure_lip;
    probe = project_ball(probe, B);
    double pg = 0.0;
    for (std::size_t i = 0; i < d; ++i) pg += (theta[i] - probe[i]) * (theta[i] - probe[i]);
    if (std::sqrt(pg) * measure_lip <= kTol) break;

    std::vector<linalg::Vector> H(d, linalg::Vector(d, 0.0));
    for (const Example& ex : examples) {
      const double z = linalg::dot(theta, ex.x);
      const double c = 1.0 / (2.0 + 2.0 * std::cosh(z));
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j <= i; ++j) H[i][j] += c * ex.x[i] * ex.x[j];
      }
    }
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < i; ++j) H[j][i] = H[i][j];
    }
    const linalg::Vector target = newton_in_ball(H, g, theta, B);
    linalg::Vector dir(d);
    for (std::size_t i = 0; i < d; ++i) dir[i] = target[i] - theta[i];
    const double slope = linalg::dot(g, dir);
    if (!(slope < 0.0)) break;

    // Backtracking along the feasible segment towards target.
    double step = 1.0;
    bool accepted = false;
    linalg::Vector trial(d);
    while (-0.5 * step * slope > 1e-15 * (1.0 + std::abs(f))) {
      for (std::size_t i = 0; i < d; ++i) trial[i] = theta[i] + step * dir[i];
      const double f_trial = total_loss(examples, trial);
      if (f_trial <= f + 1e-4 * step * slope) {
        theta = trial;
        f = f_trial;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  return theta;
}

RegretTrace run_experiment(Learner& learner, std::span<const Example> stream, double B) {
  using Clock = std::chrono::steady_clock;
  RegretTrace trace;
  trace.learner_loss.reserve(stream.size());
  std::size_t played = 0;
  for (const Example& ex : stream) {
    try {
      const auto t0 = Clock::now();
      const double y_hat = learner.predict(ex.x);
      const auto t1 = Clock::now();
      learner.update(ex.x, ex.y);
      const auto t2 = Clock::now();
      trace.learner_loss.push_back(loss::logistic_loss(y_hat, ex.y));
      trace.predict_ns.push_back(
          std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
      trace.update_ns.push_back(
          std::chrono::duration_cast<std::chrono::nanoseconds>(t2 - t1).count());
      ++played;
    } catch (const std::exception& e) {
      trace.complete = false;
      trace.error = "round " + std::to_string(played + 1) + ": " + e.what();
      break;
    }
  }
  if (played == 0) return trace;

  const auto prefix = stream.first(played);
  trace.comparator = best_in_ball(prefix, B);
  CompensatedSum learner_sum, comparator_sum;
  trace.comparator_loss.reserve(played);
  for (std::size_t t = 0; t < played; ++t) {
    const double c = loss::logistic_loss(linalg::dot(trace.comparator, prefix[t].x), prefix[t].y);
    trace.comparator_loss.push_back(c);
    learner_sum.add(trace.learner_loss[t]);
    comparator_sum.add(c);
    trace.cum_loss.push_back(learner_sum.value());
    trace.cum_regret.push_back(learner_sum.value() - comparator_sum.value());
  }
  return trace;
}

double theorem1_bound(double lambda, double B, double R, std::size_t d, std::size_t n,
                      double theta_norm) {
  const double dd = static_cast<double>(d);
  const double nn = static_cast<double>(n);
  const double c = 1.0 + B * R;
  return lambda * theta_norm * theta_norm +
         dd * c * std::log1p(nn * R * R / (8.0 * dd * c * lambda));
}

double theorem1_bound_default_lambda(double B, double R, std::size_t d, std::size_t n) {
  const double dd = static_cast<double>(d);
  const double nn = static_cast<double>(n);
  const double c = 1.0 + B * R;
  return dd * c * std::log1p(nn * B * B * R * R / (8.0 * dd * c)) + 1.0;
}

double theorem4_bound(double lambda, double B, double R, std::size_t d, std::size_t n,
                      double theta_norm, double eps) {
  const double nn = static_cast<double>(n);
  return theorem1_bound(lambda, B, R, d, n, theta_norm) +
         3.0 * nn * R * (nn * R * R / (8.0 * lambda) + B) * eps;
}

SlopeFit loglog_slope(std::span<const double> ns, std::span<const double> regrets) {
  if (ns.size() != regrets.size()) throw InvalidInput("loglog_slope: length mismatch");
  SlopeFit fit;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (regrets[i] > 0.0 && ns[i] > 0.0) {
      lx.push_back(std::log(ns[i]));
      ly.push_back(std::log(regrets[i]));
    } else {
      ++fit.excluded;
    }
  }
  fit.used = lx.size();
  if (fit.used < 3) {
    throw InvalidInput("loglog_slope: need at least 3 positive regret points, have " +
                       std::to_string(fit.used));
  }
  const double k = static_cast<double>(fit.used);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw InvalidInput("loglog_slope: horizons must differ");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

Algo parse_algo(const std::string& name) {
  if (name == "aioli") return Algo::kAioli;
  if (name == "ogd") return Algo::kOgd;
  if (name == "ons") return Algo::kOns;
  if (name == "ftrl") return Algo::kFtrl;
  if (name == "zero") return Algo::kZero;
  throw InvalidInput("unknown algorithm '" + name + "'");
}

std::string algo_name(Algo algo) {
  switch (algo) {
    case Algo::kAioli:
      return "aioli";
    case Algo::kOgd:
      return "ogd";
    case Algo::kOns:
      return "ons";
    case Algo::kFtrl:
      return "ftrl";
    case Algo::kZero:
      return "zero";
  }
  return "unknown";
}

double LearnerSpec::resolved_lambda() const {
  if (lambda) return *lambda;
  return algo == Algo::kFtrl ? 1.0 : 1.0 / (B * B);
}

std::unique_ptr<Learner> make_learner(const LearnerSpec& spec) {
  const double lambda = spec.resolved_lambda();
  switch (spec.algo) {
    case Algo::kAioli: {
      AioliConfig c;
      c.lambda = lambda;
      c.B = spec.B;
      c.R = spec.R;
      c.d = spec.d;
      c.inner = spec.inner ? *spec.inner
                           : InnerMode{Tolerance{theorem3_tolerance(std::max<std::size_t>(spec.n, 1),
                                                                    spec.R, lambda, spec.B)}};
      return std::make_unique<AioliLearner>(c);
    }
    case Algo::kOgd:
    case Algo::kOns:
    case Algo::kFtrl: {
      BaselineConfig c;
      c.kind = spec.algo == Algo::kOgd   ? BaselineKind::kOgd
               : spec.algo == Algo::kOns ? BaselineKind::kOns
                                         : BaselineKind::kFtrlProper;
      c.B = spec.B;
      c.R = spec.R;
      c.lambda = lambda;
      c.d = spec.d;
      if (spec.algo == Algo::kOgd) return std::make_unique<OgdLearner>(c);
      if (spec.algo == Algo::kOns) return std::make_unique<OnsLearner>(c);
      return std::make_unique<FtrlLearner>(c);
    }
    case Algo::kZero:
      return std::make_unique<ZeroLearner>();
  }
  throw InvalidInput("unknown algorithm");
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

WorstCasePoint worst_case_regret(Algo algo, std::size_t n, std::uint64_t base_seed,
                                 std::size_t replicates, double eps,
                                 std::optional<InnerMode> inner) {
  WorstCasePoint point;
  point.n = n;
  point.replicates.resize(2 * replicates);
  parallel_for(2 * replicates, [&](std::size_t idx) {
    const int chi = idx < replicates ? -1 : 1;
    const std::size_t r = idx % replicates;
    StreamSpec spec;
    spec.kind = StreamKind::kAdversarial;
    spec.n = n;
    spec.chi = chi;
    spec.eps = eps;
    spec.seed = derive_seed(base_seed, chi < 0 ? 0 : 1, r);
    const double B = spec.resolved_B();
    const auto stream = adversarial_stream(spec);

    LearnerSpec ls;
    ls.algo = algo;
    ls.d = 1;
    ls.n = n;
    ls.B = B;
    ls.R = 1.0;
    ls.inner = inner;
    auto learner = make_learner(ls);
    const RegretTrace trace = run_experiment(*learner, stream, B);
    if (!trace.complete) throw ConvergenceError(algo_name(algo) + ": " + trace.error);

    ReplicateResult& res = point.replicates[idx];
    res.chi = chi;
    res.replicate = r;
    res.seed = spec.seed;
    res.final_regret = trace.final_regret();
    res.comparator_norm = linalg::norm(trace.comparator);
  });
  double sum_minus = 0.0, sum_plus = 0.0;
  for (const ReplicateResult& r : point.replicates) {
    (r.chi < 0 ? sum_minus : sum_plus) += r.final_regret;
  }
  point.avg_regret_minus = sum_minus / static_cast<double>(replicates);
  point.avg_regret_plus = sum_plus / static_cast<double>(replicates);
  point.worst_avg_regret = std::max(point.avg_regret_minus, point.avg_regret_plus);
  return point;
}

}  // namespace aioli::bench
