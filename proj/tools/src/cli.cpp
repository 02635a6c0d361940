#include "cptt/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cptt/bench.hpp"
#include "cptt/greedy.hpp"
#include "cptt/tensor_core.hpp"

namespace cptt::cli {

namespace {

/// Thrown for flag conflicts detected after CLI11 has parsed.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string format_residual(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error("cannot open " + path + " for writing");
  return file;
}

template <typename Writer>
void emit(const std::string& path, std::ostream& fallback, Writer&& write) {
  if (path.empty()) {
    write(fallback);
    return;
  }
  std::ofstream file = open_output(path);
  write(file);
  if (!file) throw Error("failed writing " + path);
}

struct DecomposeArgs {
  std::string input;
  std::string method = "cptt";
  Index rank = 1;
  double tol = 0.0;
  Index rank_k = 1;
  std::uint64_t seed = 0;
  Index max_iters = 100;
  double solver_tol = 1e-4;
  bool relaxed = false;
  std::string out;
  std::string trace;
};

struct GenArgs {
  Index dim = 4;
  std::optional<double> beta;
  std::uint64_t seed = 0;
  Index n_points = 25;
  Index lmax = 6;
  Index term_budget = 200;
  std::string out;
  std::string meta;
};

struct BenchArgs {
  std::string config;
  std::optional<Index> workers;
};

struct SummarizeArgs {
  std::string in;
  std::vector<Index> ranks = {25, 50, 75};
  std::string out;
};

int cmd_decompose(const DecomposeArgs& a, bool rank_k_given, std::ostream& out) {
  GreedyConfig cfg;
  cfg.method = parse_method(a.method);
  if (rank_k_given && cfg.method != Method::CPTT) {
    throw UsageError("--rank-k is only valid with --method cptt (got --method " + a.method + ")");
  }
  cfg.target_rank = a.rank;
  cfg.rel_tol = a.tol;
  cfg.rank_k_update = a.rank_k;
  cfg.solver.tol = a.solver_tol;
  cfg.solver.max_iters = a.max_iters;
  cfg.solver.relaxed = a.relaxed;
  cfg.solver.rng_seed = a.seed;
  cfg.validate();

  const CpTensor f = read_cp(a.input);
  const GreedyResult res = greedy_decompose(f, cfg);
  if (!a.out.empty()) write_cp(res.approximation, a.out);
  if (!a.trace.empty()) {
    emit(a.trace, out, [&](std::ostream& s) { write_trace_csv(res.trace, s); });
  }
  const double rel = res.trace.steps.empty() ? (res.trace.input_norm > 0 ? 1.0 : 0.0)
                                             : res.trace.steps.back().rel_residual;
  out << format_residual(rel) << '\n';
  return kExitOk;
}

int cmd_gen(const GenArgs& a, std::ostream& out) {
  RandomFunctionSpec spec;
  spec.d = a.dim;
  spec.beta = a.beta.value_or(regularity_beta(Regularity::L2, a.dim));
  spec.seed = a.seed;
  spec.n_points = a.n_points;
  spec.lmax = a.lmax;
  spec.term_budget = a.term_budget;
  const RandomFunction fn = gen_random_function(spec);
  if (a.out.empty()) out << serialize_cp(fn.tensor);
  else write_cp(fn.tensor, a.out);
  if (!a.meta.empty()) {
    const RandomFunctionMetadata rows[] = {fn.metadata};
    emit(a.meta, out, [&](std::ostream& s) { write_metadata_csv(rows, s); });
  }
  return kExitOk;
}

Index workers_from_env() {
  const char* env = std::getenv("CPTT_WORKERS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0' || v == 0) throw UsageError("CPTT_WORKERS must be a positive integer");
  return static_cast<Index>(v);
}

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  std::ifstream in(a.config);
  if (!in) throw ParseError(ParseError::Kind::Syntax, "cannot open " + a.config);
  BenchConfigFile file = parse_bench_config(in);
  file.experiment.workers = a.workers ? *a.workers : workers_from_env();
  const ExperimentResult res = run_experiment(file.experiment);
  emit(file.output, out, [&](std::ostream& s) { write_results_csv(res.rows, s); });
  if (!file.summary.empty()) {
    const auto summary = summarize(res.rows, file.experiment.report_ranks);
    emit(file.summary, out, [&](std::ostream& s) { write_summary_csv(summary, s); });
  }
  if (!file.metadata.empty()) {
    emit(file.metadata, out, [&](std::ostream& s) { write_metadata_csv(res.metadata, s); });
  }
  return kExitOk;
}

int cmd_summarize(const SummarizeArgs& a, std::ostream& out) {
  std::ifstream in(a.in);
  if (!in) throw ParseError(ParseError::Kind::Syntax, "cannot open " + a.in);
  const std::vector<ResultRow> rows = read_results_csv(in);
  const auto summary = summarize(rows, a.ranks);
  emit(a.out, out, [&](std::ostream& s) { write_summary_csv(summary, s); });
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Greedy CP tensor approximation (CP-TT, ALS, ASVD)", "cptt"};
  app.require_subcommand(1);

  DecomposeArgs dec;
  auto* decompose = app.add_subcommand("decompose", "Greedy CP decomposition of a stored tensor");
  decompose->add_option("input", dec.input, "CP tensor file (JSON)")->required();
  decompose->add_option("--method", dec.method, "als, asvd or cptt")->capture_default_str();
  decompose->add_option("--rank", dec.rank, "Maximum number of terms")->capture_default_str();
  decompose->add_option("--tol", dec.tol, "Stop once the relative residual is below this")
      ->capture_default_str();
  auto* rank_k_opt = decompose->add_option("--rank-k", dec.rank_k, "Terms per CP-TT iteration");
  decompose->add_option("--seed", dec.seed, "Seed for the ALS/ASVD initial guess")
      ->capture_default_str();
  decompose->add_option("--max-iters", dec.max_iters, "ALS/ASVD sweep limit")->capture_default_str();
  decompose->add_option("--solver-tol", dec.solver_tol, "ALS/ASVD stagnation threshold")
      ->capture_default_str();
  decompose->add_flag("--relaxed", dec.relaxed, "Rescale ALS iterates after every sweep");
  decompose->add_option("--out", dec.out, "Write the approximation here");
  decompose->add_option("--trace", dec.trace, "Write the per-iteration trace CSV here");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a random trigonometric test function");
  gen_cmd->add_option("--dim", gen.dim, "Order d")->capture_default_str();
  gen_cmd->add_option("--beta", gen.beta, "Decay exponent (default d/2 + 0.1)");
  gen_cmd->add_option("--seed", gen.seed)->capture_default_str();
  gen_cmd->add_option("--n-points", gen.n_points)->capture_default_str();
  gen_cmd->add_option("--lmax", gen.lmax)->capture_default_str();
  gen_cmd->add_option("--term-budget", gen.term_budget)->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "CP file path (stdout when omitted)");
  gen_cmd->add_option("--meta", gen.meta, "Metadata CSV path");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run a multi-seed method comparison");
  bench_cmd->add_option("--config", bench.config, "key = value campaign file")->required();
  bench_cmd->add_option("--workers", bench.workers, "Concurrent cells (default $CPTT_WORKERS or 1)")
      ->check(CLI::PositiveNumber);

  SummarizeArgs sum;
  auto* sum_cmd = app.add_subcommand("summarize", "Aggregate a results CSV");
  sum_cmd->add_option("--in", sum.in, "Results CSV")->required();
  sum_cmd->add_option("--ranks", sum.ranks, "Report ranks")->delimiter(',')->capture_default_str();
  sum_cmd->add_option("--out", sum.out, "Summary CSV path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*decompose) return cmd_decompose(dec, rank_k_opt->count() > 0, out);
    if (*gen_cmd) return cmd_gen(gen, out);
    if (*bench_cmd) return cmd_bench(bench, out);
    if (*sum_cmd) return cmd_summarize(sum, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ParseError::Kind::NonFinite ? kExitNumerical : kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}

}  // namespace cptt::cli
