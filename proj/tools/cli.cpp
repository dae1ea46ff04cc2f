#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>

#include "aioli/bench.hpp"
#include "aioli/error.hpp"
#include "aioli/forecaster.hpp"
#include "aioli/io.hpp"
#include "aioli/verify.hpp"

namespace aioli::cli {

namespace {

using bench::Algo;
using bench::StreamKind;

struct CommonOptions {
  std::string stream = "adversarial";
  std::optional<double> B;
  double R = 1.0;
  std::optional<double> lambda;
  int chi = 1;
  double eps = 0.01;
  std::uint64_t seed = 0;
  std::optional<std::int64_t> inner_steps;
  std::optional<double> inner_tol;
  std::string out = ".";
};

StreamKind parse_stream(const std::string& name) {
  if (name == "adversarial") return StreamKind::kAdversarial;
  if (name == "gaussian") return StreamKind::kGaussian;
  if (name == "file") return StreamKind::kFile;
  throw InvalidInput("unknown stream kind '" + name + "'");
}

std::optional<InnerMode> inner_mode(const CommonOptions& o) {
  if (o.inner_steps && o.inner_tol) {
    throw InvalidInput("--inner-steps and --inner-tol are mutually exclusive");
  }
  if (o.inner_steps) return FixedSteps{*o.inner_steps};
  if (o.inner_tol) return Tolerance{*o.inner_tol};
  return std::nullopt;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (!std::filesystem::is_directory(dir)) {
    throw InvalidInput("output directory '" + dir + "' is not usable");
  }
}

std::string join_path(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

struct RunOptions {
  CommonOptions common;
  std::string algo = "aioli";
  std::size_t n = 1000;
  std::size_t d = 1;
  std::vector<std::uint64_t> seeds;
  std::string file;
  double margin = 2.0;
  bool no_timing = false;
};

int cmd_run(const RunOptions& o, std::ostream& out, std::ostream& err) {
  const Algo algo = bench::parse_algo(o.algo);
  const StreamKind kind = parse_stream(o.common.stream);
  const auto inner = inner_mode(o.common);
  ensure_out_dir(o.common.out);

  std::vector<std::uint64_t> seeds = o.seeds;
  if (seeds.empty()) seeds.push_back(o.common.seed);

  bench::StreamSpec base;
  base.kind = kind;
  base.n = o.n;
  base.chi = o.common.chi;
  base.eps = o.common.eps;
  base.d = o.d;
  base.R = o.common.R;
  base.margin_scale = o.margin;
  base.path = o.file;
  if (o.common.B) base.B = *o.common.B;
  base.validate();
  const double B = kind == StreamKind::kAdversarial ? base.resolved_B() : o.common.B.value_or(1.0);
  // The adversarial support points lie in (0, 1].
  const double R = kind == StreamKind::kAdversarial ? 1.0 : o.common.R;
  if (!(B > 0.0)) throw InvalidInput("--B must be positive");

  std::string summary = "algo,n,seed,chi,final_regret,bound_thm1,bound_ok\n";
  int status = kExitOk;
  for (std::uint64_t seed : seeds) {
    bench::StreamSpec spec = base;
    spec.seed = seed;
    const auto stream = bench::make_stream(spec);
    const std::size_t d = stream.front().x.size();
    for (const Example& ex : stream) check_example(ex, R);

    bench::LearnerSpec ls;
    ls.algo = algo;
    ls.d = d;
    ls.n = stream.size();
    ls.B = B;
    ls.R = R;
    ls.lambda = o.common.lambda;
    ls.inner = inner;
    auto learner = bench::make_learner(ls);
    const bench::RegretTrace trace = bench::run_experiment(*learner, stream, B);

    std::string csv = "t,loss,cum_loss,cum_regret,predict_ns,update_ns\n";
    for (std::size_t t = 0; t < trace.rounds(); ++t) {
      csv += std::to_string(t + 1) + ',' + io::format_float(trace.learner_loss[t]) + ',' +
             io::format_float(trace.cum_loss[t]) + ',' + io::format_float(trace.cum_regret[t]) +
             ',' + std::to_string(o.no_timing ? 0 : trace.predict_ns[t]) + ',' +
             std::to_string(o.no_timing ? 0 : trace.update_ns[t]) + '\n';
    }
    io::write_file_atomic(
        join_path(o.common.out, "trace_" + o.algo + "_" + std::to_string(seed) + ".csv"), csv);

    std::string bound, ok;
    if (algo == Algo::kAioli && trace.rounds() > 0) {
      const double b1 = bench::theorem1_bound(ls.resolved_lambda(), B, R, d, trace.rounds(),
                                              linalg::norm(trace.comparator));
      bound = io::format_float(b1);
      ok = trace.final_regret() <= b1 + 1e-3 ? "true" : "false";
    }
    summary += o.algo + ',' + std::to_string(trace.rounds()) + ',' + std::to_string(seed) + ',' +
               (kind == StreamKind::kAdversarial ? std::to_string(spec.chi) : std::string()) +
               ',' + io::format_float(trace.final_regret()) + ',' + bound + ',' + ok + '\n';

    out << o.algo << " seed=" << seed << " rounds=" << trace.rounds()
        << " final_regret=" << io::format_float(trace.final_regret());
    if (!bound.empty()) out << " bound=" << bound << " bound_ok=" << ok;
    out << '\n';
    if (!trace.complete) {
      err << "learner failure: " << trace.error << '\n';
      status = kExitLearnerFailure;
    }
  }
  io::write_file_atomic(join_path(o.common.out, "summary.csv"), summary);
  return status;
}

struct SweepOptions {
  CommonOptions common;
  std::vector<std::string> algos{"aioli", "ftrl"};
  std::vector<std::size_t> ns;
  std::size_t replicates = 10;
};

int cmd_sweep(const SweepOptions& o, std::ostream& out, std::ostream& err) {
  if (o.ns.size() < 3) throw InvalidInput("sweep needs at least 3 horizons to fit a slope");
  if (o.replicates < 1) throw InvalidInput("--replicates must be at least 1");
  std::vector<Algo> algos;
  for (const auto& a : o.algos) algos.push_back(bench::parse_algo(a));
  const auto inner = inner_mode(o.common);
  for (std::size_t n : o.ns) {
    bench::StreamSpec probe;
    probe.n = n;
    probe.eps = o.common.eps;
    probe.validate();
  }
  ensure_out_dir(o.common.out);

  std::string csv = "algo,n,worst_avg_regret,slope_so_far\n";
  int status = kExitOk;
  for (std::size_t ai = 0; ai < algos.size(); ++ai) {
    std::vector<double> ns, worst;
    for (std::size_t n : o.ns) {
      bench::WorstCasePoint pt;
      try {
        pt = bench::worst_case_regret(algos[ai], n, o.common.seed, o.replicates, o.common.eps,
                                      inner);
      } catch (const ConvergenceError& e) {
        err << "learner failure: " << e.what() << '\n';
        status = kExitLearnerFailure;
        break;
      }
      ns.push_back(static_cast<double>(n));
      worst.push_back(pt.worst_avg_regret);
      std::string slope;
      try {
        slope = io::format_float(bench::loglog_slope(ns, worst).slope);
      } catch (const InvalidInput&) {
      }
      csv += o.algos[ai] + ',' + std::to_string(n) + ',' + io::format_float(pt.worst_avg_regret) +
             ',' + slope + '\n';
    }
    try {
      const bench::SlopeFit fit = bench::loglog_slope(ns, worst);
      if (fit.excluded > 0) {
        err << "warning: " << o.algos[ai] << ": " << fit.excluded
            << " non-positive regret point(s) excluded from the fit\n";
      }
      out << o.algos[ai] << " log-log slope " << io::format_float(fit.slope) << " (" << fit.used
          << " points)\n";
    } catch (const InvalidInput& e) {
      out << o.algos[ai] << " log-log slope n/a: " << e.what() << '\n';
    }
  }
  io::write_file_atomic(join_path(o.common.out, "sweep.csv"), csv);
  return status;
}

int cmd_verify(bool verbose, const std::string& fault, std::ostream& out, std::ostream& err) {
  verify::Options opts;
  if (fault == "eta-sign") {
    opts.flip_eta_sign = true;
  } else if (!fault.empty()) {
    throw InvalidInput("unknown fault '" + fault + "'");
  }
  const auto results = verify::run_all(opts);
  const verify::CheckResult* first_failure = nullptr;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name;
    if (verbose) out << "  points=" << r.points << " min_slack=" << io::format_float(r.min_slack);
    out << '\n';
    if (!r.passed && !first_failure) first_failure = &r;
  }
  if (first_failure) {
    err << "verification failed: " << first_failure->name << '\n';
    return kExitVerifyFailure;
  }
  return kExitOk;
}

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--stream", o.stream, "adversarial | gaussian | file");
  cmd->add_option("--B", o.B, "comparator radius (default log n for adversarial streams)");
  cmd->add_option("--R", o.R, "feature radius (forced to 1 for adversarial streams)");
  cmd->add_option("--lambda", o.lambda, "regularization (default 1/B^2; FTRL: 1)");
  cmd->add_option("--chi", o.chi, "adversarial sign, -1 or 1");
  cmd->add_option("--eps", o.eps, "adversarial epsilon");
  cmd->add_option("--seed", o.seed, "base seed");
  cmd->add_option("--inner-steps", o.inner_steps, "fixed inner gradient steps");
  cmd->add_option("--inner-tol", o.inner_tol, "inner tolerance on omega");
  cmd->add_option("--out", o.out, "output directory");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Improper online logistic regression experiments"};
  app.require_subcommand(1);

  RunOptions run_opts;
  auto* run_cmd = app.add_subcommand("run", "run one learner on one stream per seed");
  add_common(run_cmd, run_opts.common);
  run_cmd->add_option("--algo", run_opts.algo, "aioli | ogd | ons | ftrl | zero");
  run_cmd->add_option("--n", run_opts.n, "horizon");
  run_cmd->add_option("--d", run_opts.d, "dimension (gaussian stream)");
  run_cmd->add_option("--seeds", run_opts.seeds, "list of seeds (overrides --seed)")
      ->delimiter(',');
  run_cmd->add_option("--file", run_opts.file, "stream file for --stream file");
  run_cmd->add_option("--margin", run_opts.margin, "gaussian margin scale");
  run_cmd->add_flag("--no-timing", run_opts.no_timing, "write 0 in the timing columns");

  SweepOptions sweep_opts;
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "worst-of-two averaged regret on the adversarial stream over an n grid");
  sweep_cmd->add_option("--eps", sweep_opts.common.eps, "adversarial epsilon");
  sweep_cmd->add_option("--seed", sweep_opts.common.seed, "base seed");
  sweep_cmd->add_option("--inner-steps", sweep_opts.common.inner_steps, "fixed inner gradient steps");
  sweep_cmd->add_option("--inner-tol", sweep_opts.common.inner_tol, "inner tolerance on omega");
  sweep_cmd->add_option("--out", sweep_opts.common.out, "output directory");
  sweep_cmd->add_option("--algo", sweep_opts.algos, "algorithms")->delimiter(',');
  sweep_cmd->add_option("--n", sweep_opts.ns, "horizons")->delimiter(',')->required();
  sweep_cmd->add_option("--replicates", sweep_opts.replicates, "runs per chi at each n");

  bool verbose = false;
  std::string fault;
  auto* verify_cmd = app.add_subcommand("verify", "run the numeric property checks");
  verify_cmd->add_flag("--verbose,-v", verbose, "print minimum slack per check");
  verify_cmd->add_option("--inject-fault", fault)->group("");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kExitInvalidConfig;
  }

  try {
    if (*run_cmd) return cmd_run(run_opts, out, err);
    if (*sweep_cmd) return cmd_sweep(sweep_opts, out, err);
    if (*verify_cmd) return cmd_verify(verbose, fault, out, err);
  } catch (const InvalidInput& e) {
    err << "invalid configuration: " << e.what() << '\n';
    return kExitInvalidConfig;
  } catch (const PreconditionError& e) {
    err << "invalid configuration: " << e.what() << '\n';
    return kExitInvalidConfig;
  } catch (const std::exception& e) {
    err << "learner failure: " << e.what() << '\n';
    return kExitLearnerFailure;
  }
  return kExitInvalidConfig;
}

}  // namespace aioli::cli
