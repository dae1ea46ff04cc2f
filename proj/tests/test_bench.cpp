#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "aioli/bench.hpp"
#include "aioli/error.hpp"
#include "aioli/io.hpp"
#include "aioli/rng.hpp"

using namespace aioli;
using namespace aioli::bench;

namespace {

// Throws on the third prediction.
class FailingLearner final : public Learner {
 public:
  std::string name() const override { return "failing"; }
  double predict(std::span<const double>) override {
    if (++calls_ == 3) throw ConvergenceError("boom");
    return 0.0;
  }
  void update(std::span<const double>, int) override {}

 private:
  int calls_ = 0;
};

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("aioli_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("adversarial law") {
  const double B = std::log(1e4);
  const auto plus = adversarial_law(0.01, B, 1);
  CHECK(plus.p_pos == doctest::Approx(0.006514).epsilon(1e-4));
  CHECK(plus.p_pos == doctest::Approx(0.06 / B).epsilon(1e-14));
  CHECK(plus.x_pos == doctest::Approx(0.994571).epsilon(1e-6));
  CHECK(plus.x_neg == doctest::Approx(0.1 / B).epsilon(1e-14));
  const auto minus = adversarial_law(0.01, B, -1);
  CHECK(minus.p_pos == doctest::Approx(0.004343).epsilon(1e-3));
  CHECK_THROWS_AS(adversarial_law(0.9, 0.01, 1), InvalidInput);
}

TEST_CASE("adversarial label frequency") {
  StreamSpec spec;
  spec.n = 1000000;
  spec.B = std::log(1e4);
  spec.seed = 99;
  const auto stream = adversarial_stream(spec);
  const double p = adversarial_law(spec.eps, spec.B, spec.chi).p_pos;
  std::size_t pos = 0;
  for (const auto& ex : stream) pos += ex.y == 1;
  const double n = static_cast<double>(spec.n);
  CHECK(std::abs(static_cast<double>(pos) - n * p) <= 3.0 * std::sqrt(n * p * (1.0 - p)));
}

TEST_CASE("stream validation") {
  StreamSpec spec;
  spec.n = 1;  // log 1 = 0
  CHECK_THROWS_AS(spec.validate(), InvalidInput);
  spec.n = 100;
  spec.chi = 0;
  CHECK_THROWS_AS(spec.validate(), InvalidInput);
  spec.chi = 1;
  spec.eps = 1.5;
  CHECK_THROWS_AS(spec.validate(), InvalidInput);
  StreamSpec file;
  file.kind = StreamKind::kFile;
  CHECK_THROWS_AS(file.validate(), InvalidInput);
}

TEST_CASE("gaussian stream") {
  StreamSpec spec;
  spec.kind = StreamKind::kGaussian;
  spec.d = 4;
  spec.n = 300;
  spec.R = 0.5;
  spec.seed = 17;
  const auto a = gaussian_stream(spec);
  const auto b = gaussian_stream(spec);
  const auto c = gaussian_stream(spec, 1);
  REQUIRE(a.size() == 300);
  bool differs = false;
  for (std::size_t t = 0; t < a.size(); ++t) {
    CHECK(a[t].x == b[t].x);
    CHECK(a[t].y == b[t].y);
    CHECK(linalg::norm(a[t].x) <= spec.R * (1.0 + 1e-15));
    differs = differs || a[t].x != c[t].x;
  }
  CHECK(differs);
}

TEST_CASE("stream file round trip") {
  const auto dir = scratch_dir("stream");
  StreamSpec spec;
  spec.kind = StreamKind::kGaussian;
  spec.d = 3;
  spec.n = 50;
  const auto stream = gaussian_stream(spec);
  const auto path = (dir / "s.txt").string();
  write_stream_file(path, stream);
  const auto back = read_stream_file(path);
  REQUIRE(back.size() == stream.size());
  for (std::size_t t = 0; t < back.size(); ++t) {
    CHECK(back[t].x == stream[t].x);
    CHECK(back[t].y == stream[t].y);
  }
  std::ofstream(dir / "bad.txt") << "1 0.5\n2 0.1\n";
  CHECK_THROWS_AS(read_stream_file((dir / "bad.txt").string()), InvalidInput);
  std::ofstream(dir / "ragged.txt") << "1 0.5\n-1 0.1 0.2\n";
  CHECK_THROWS_AS(read_stream_file((dir / "ragged.txt").string()), InvalidInput);
  CHECK_THROWS_AS(read_stream_file((dir / "missing.txt").string()), InvalidInput);
}

TEST_CASE("best_in_ball") {
  const std::vector<Example> pair{{{0.3, -0.4}, 1}, {{0.3, -0.4}, -1}};
  const auto zero = best_in_ball(pair, 2.0);
  CHECK(linalg::norm(zero) <= 1e-9);

  const std::vector<Example> single{{{0.6, 0.8}, 1}};
  const auto edge = best_in_ball(single, 3.0);
  CHECK(edge[0] == doctest::Approx(1.8).epsilon(1e-9));
  CHECK(edge[1] == doctest::Approx(2.4).epsilon(1e-9));

  for (int chi : {-1, 1}) {
    StreamSpec spec;
    spec.n = 2000;
    spec.chi = chi;
    spec.seed = 7;
    const auto stream = adversarial_stream(spec);
    const double B = spec.resolved_B();
    const auto th = best_in_ball(stream, B);
    double grid_best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 100000; ++i) {
      const double v = -B + 2.0 * B * i / 100000.0;
      grid_best = std::min(grid_best, total_loss(stream, std::vector<double>{v}));
    }
    CHECK(std::abs(th[0]) <= B);
    CHECK(total_loss(stream, th) <= grid_best + 1e-4);
    CHECK(total_loss(stream, th) >= grid_best - 1e-4);
  }
}

TEST_CASE("run_experiment") {
  StreamSpec spec;
  spec.n = 200;
  const auto stream = adversarial_stream(spec);
  ZeroLearner zero;
  const auto trace = run_experiment(zero, stream, spec.resolved_B());
  REQUIRE(trace.rounds() == 200);
  for (double l : trace.learner_loss) CHECK(l == std::log(2.0));
  CHECK(trace.complete);

  std::vector<Example> balanced;
  for (int i = 0; i < 50; ++i) {
    balanced.push_back({{0.5}, 1});
    balanced.push_back({{0.5}, -1});
  }
  ZeroLearner z2;
  const auto bt = run_experiment(z2, balanced, 1.0);
  CHECK(std::abs(bt.comparator[0]) <= 1e-9);
  CHECK(std::abs(bt.final_regret()) <= 1e-12);

  FailingLearner failing;
  const auto ft = run_experiment(failing, stream, 1.0);
  CHECK_FALSE(ft.complete);
  CHECK(ft.rounds() == 2);
  CHECK(ft.error.find("round 3") != std::string::npos);
}

TEST_CASE("AIOLI regret stays under the bound on an adversarial stream") {
  for (int chi : {-1, 1}) {
    StreamSpec spec;
    spec.n = 1000;
    spec.chi = chi;
    spec.seed = 3;
    const auto stream = adversarial_stream(spec);
    const double B = spec.resolved_B();
    LearnerSpec ls;
    ls.n = spec.n;
    ls.B = B;
    auto learner = make_learner(ls);
    const auto trace = run_experiment(*learner, stream, B);
    const double bound =
        theorem1_bound(ls.resolved_lambda(), B, 1.0, 1, spec.n, linalg::norm(trace.comparator));
    CHECK(trace.final_regret() <= bound);
  }
}

TEST_CASE("regret bounds") {
  CHECK(theorem1_bound(1.0, 1.0, 1.0, 1, 100, 1.0) ==
        doctest::Approx(1.0 + 2.0 * std::log(7.25)).epsilon(1e-14));
  CHECK(theorem1_bound(1.0, 1.0, 1.0, 1, 100, 1.0) == doctest::Approx(4.9617).epsilon(1e-4));
  CHECK(theorem1_bound(0.3, 2.0, 1.0, 2, 0, 1.5) == doctest::Approx(0.3 * 2.25));
  CHECK(theorem1_bound_default_lambda(1.0, 1.0, 1, 100) == doctest::Approx(4.9617).epsilon(1e-4));
  CHECK(theorem1_bound_default_lambda(3.0, 0.5, 2, 50) ==
        doctest::Approx(theorem1_bound(1.0 / 9.0, 3.0, 0.5, 2, 50, 3.0)).epsilon(1e-14));
  CHECK(theorem4_bound(0.5, 2.0, 1.0, 3, 70, 1.0, 0.0) ==
        theorem1_bound(0.5, 2.0, 1.0, 3, 70, 1.0));
  CHECK(theorem4_bound(1.0, 1.0, 1.0, 1, 1000, 0.0, 1e-6) -
            theorem1_bound(1.0, 1.0, 1.0, 1, 1000, 0.0) ==
        doctest::Approx(0.378).epsilon(1e-10));
  const double B = 4.0, lambda = 1.0 / 16.0;
  const double eps = theorem3_tolerance(500, 1.0, lambda, B);
  CHECK(theorem4_bound(lambda, B, 1.0, 2, 500, 1.0, eps) -
            theorem1_bound(lambda, B, 1.0, 2, 500, 1.0) ==
        doctest::Approx(std::sqrt(lambda)).epsilon(1e-12));
}

TEST_CASE("log-log slope") {
  std::vector<double> ns, lin, lg, cube;
  for (int k = 8; k <= 14; ++k) {
    const double n = std::ldexp(1.0, k);
    ns.push_back(n);
    lin.push_back(3.0 * n);
    lg.push_back(2.0 * std::log(n));
    cube.push_back(0.5 * std::cbrt(n));
  }
  CHECK(loglog_slope(ns, lin).slope == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(loglog_slope(ns, lg).slope < 0.2);
  CHECK(loglog_slope(ns, cube).slope == doctest::Approx(1.0 / 3.0).epsilon(1e-10));

  std::vector<double> mixed = lin;
  mixed[0] = -1.0;
  const auto fit = loglog_slope(ns, mixed);
  CHECK(fit.excluded == 1);
  CHECK(fit.used == ns.size() - 1);
  const std::vector<double> neg(ns.size(), -1.0);
  CHECK_THROWS_AS(loglog_slope(ns, neg), InvalidInput);
  CHECK_THROWS_AS(loglog_slope(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0}),
                  InvalidInput);
}

TEST_CASE("learner factory") {
  CHECK(parse_algo("aioli") == Algo::kAioli);
  CHECK(algo_name(Algo::kFtrl) == "ftrl");
  CHECK_THROWS_AS(parse_algo("sgd"), InvalidInput);
  LearnerSpec ls;
  ls.B = 4.0;
  CHECK(ls.resolved_lambda() == doctest::Approx(1.0 / 16.0));
  ls.algo = Algo::kFtrl;
  CHECK(ls.resolved_lambda() == 1.0);
  ls.lambda = 0.3;
  CHECK(ls.resolved_lambda() == 0.3);
  for (Algo a : {Algo::kAioli, Algo::kOgd, Algo::kOns, Algo::kFtrl, Algo::kZero}) {
    ls.algo = a;
    CHECK(make_learner(ls)->name() == algo_name(a));
  }
}

TEST_CASE("parallel_for") {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10,
                               [](std::size_t i) {
                                 if (i == 4) throw std::runtime_error("x");
                               }),
                  std::runtime_error);
}

TEST_CASE("worst-case protocol is deterministic") {
  const auto a = worst_case_regret(Algo::kOgd, 256, 5, 3);
  const auto b = worst_case_regret(Algo::kOgd, 256, 5, 3);
  CHECK(a.worst_avg_regret == b.worst_avg_regret);
  CHECK(a.worst_avg_regret == std::max(a.avg_regret_minus, a.avg_regret_plus));
  CHECK(a.replicates.size() == 6);
  const auto c = worst_case_regret(Algo::kOgd, 256, 6, 3);
  CHECK(c.worst_avg_regret != a.worst_avg_regret);
}

TEST_CASE("counter rng") {
  CounterRng a(1), b(1), c(2);
  for (int i = 0; i < 10; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    CHECK(va != c.next_u64());
  }
  CounterRng r(5);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  CHECK(sum / 100000.0 == doctest::Approx(0.5).epsilon(0.01));
  CHECK(CounterRng(3).split(1).key() != CounterRng(3).split(2).key());
  CHECK(derive_seed(9, 0, 1) == derive_seed(9, 0, 1));
  CHECK(derive_seed(9, 0, 1) != derive_seed(9, 1, 0));
}

TEST_CASE("float text round trip") {
  for (double v : {0.1, -2.5e-300, 1.0 / 3.0, 6.02214076e23, 0.0}) {
    CHECK(io::parse_float(io::format_float(v)) == v);
  }
  CHECK(io::format_float(0.5) == "0.5");
  CHECK(io::parse_float("+1.5") == 1.5);
  CHECK_THROWS_AS(io::parse_float("1.5x"), InvalidInput);
  CHECK_THROWS_AS(io::parse_float(""), InvalidInput);
}
