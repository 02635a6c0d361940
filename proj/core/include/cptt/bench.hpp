#pragma once

// Randomized trigonometric test functions and multi-seed method comparisons.
//
//   F(x) = sum_{k_1 <= l_1} ... sum_{k_d <= l_d} a_k sin(pi k_1 x_1) ... sin(pi k_d x_d),
//   a_k  = alpha_k / |k|^beta,  alpha_k ~ U[-1, 1],  l_i ~ U{1..lmax},
//
// sampled at the cell midpoints (j + 1/2) / N. When the multi-index count
// exceeds the term budget, a uniform subset of that size is kept.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cptt/baselines.hpp"
#include "cptt/greedy.hpp"
#include "cptt/tensor_core.hpp"

namespace cptt {

struct RandomFunctionSpec {
  Index d = 4;
  double beta = 2.1;
  Index n_points = 25;
  Index lmax = 6;
  std::uint64_t seed = 0;
  Index term_budget = 200;

  void validate() const;
};

struct RandomFunctionMetadata {
  std::uint64_t seed = 0;
  std::vector<Index> l_values;
  std::uint64_t total_multi_indices = 0;
  Index retained_terms = 0;
};

struct RandomFunction {
  CpTensor tensor;
  RandomFunctionMetadata metadata;
  /// Retained multi-indices (1-based wave numbers) and their amplitudes a_k,
  /// aligned with the tensor's terms.
  std::vector<std::vector<Index>> wave_numbers;
  std::vector<double> amplitudes;
};

RandomFunction gen_random_function(const RandomFunctionSpec& spec);

/// Midpoint grid (j + 1/2) / n, j = 0..n-1.
std::vector<double> midpoint_grid(Index n);

/// alpha / (sqrt(sum k_i^2))^beta.
double trig_amplitude(double alpha, std::span<const Index> wave_numbers, double beta);

/// seed,l_values,total_multi_indices,retained_terms (l_values dash-joined).
void write_metadata_csv(std::span<const RandomFunctionMetadata> rows, std::ostream& out);

enum class Regularity { L2, H1 };

/// d/2 + 0.1 for L2, d/2 + 1.1 for H1.
double regularity_beta(Regularity reg, Index d);

struct ExperimentConfig {
  std::vector<Index> dims = {4};
  Regularity regularity = Regularity::L2;
  Index n_functions = 32;
  std::vector<Method> methods = {Method::ALS, Method::ASVD, Method::CPTT};
  Index max_rank = 75;
  std::vector<Index> report_ranks = {25, 50, 75};
  std::uint64_t base_seed = 0;
  Index n_points = 25;
  Index lmax = 6;
  Index term_budget = 200;
  FixedPointConfig solver{1e-4, 100, true, 0};
  Index workers = 1;

  void validate() const;
};

struct ResultRow {
  Method method = Method::CPTT;
  Index dim = 0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  Index rank = 0;
  double rel_residual = 1.0;
  bool converged = true;
  bool error = false;
};

struct ExperimentResult {
  /// Sorted by (method, dim, beta, seed, rank).
  std::vector<ResultRow> rows;
  /// Sorted by (dim, seed).
  std::vector<RandomFunctionMetadata> metadata;
};

/// Runs every (dim, seed, method) cell, `cfg.workers` at a time. Failed cells
/// become rows with error_flag set; the campaign continues.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Residual trajectory for one generated function and method.
std::vector<ResultRow> run_cell(const ExperimentConfig& cfg, Index dim, std::uint64_t seed,
                                Method method);

inline constexpr const char* kResultsHeader =
    "method,dim,beta,seed,rank,rel_residual,converged,error_flag";
inline constexpr const char* kSummaryHeader = "dim,method,rank,mean,std,n,excluded";

void write_results_csv(std::span<const ResultRow> rows, std::ostream& out);
std::vector<ResultRow> read_results_csv(std::istream& in);

struct SummaryRow {
  Index dim = 0;
  Method method = Method::CPTT;
  Index rank = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 when n == 1
  Index n = 0;
  Index excluded = 0;
};

std::vector<SummaryRow> summarize(std::span<const ResultRow> rows,
                                  std::span<const Index> report_ranks);
void write_summary_csv(std::span<const SummaryRow> rows, std::ostream& out);

/// Flat `key = value` campaign description.
struct BenchConfigFile {
  ExperimentConfig experiment;
  std::string output;
  std::string summary;
  std::string metadata;
};

/// Throws ParseError naming every missing required key or the offending line.
BenchConfigFile parse_bench_config(std::istream& in);

}  // namespace cptt
