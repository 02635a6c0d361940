#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cptt/baselines.hpp"
#include "cptt/cptt_iteration.hpp"
#include "cptt/tensor_core.hpp"

namespace cptt {

enum class Method { ALS, ASVD, CPTT };

std::string_view to_string(Method m);
/// Case-insensitive "als" | "asvd" | "cptt".
Method parse_method(std::string_view name);

struct GreedyConfig {
  Method method = Method::CPTT;
  Index target_rank = 1;
  double rel_tol = 0.0;
  /// Terms added per CP-TT iteration.
  Index rank_k_update = 1;
  FixedPointConfig solver;
  /// Eigenvalues of the coefficient Gram below regularization * lambda_max
  /// are treated as null directions.
  double regularization = 1e-12;
  PodPath pod_path = PodPath::Automatic;

  void validate() const;
};

struct GreedyStep {
  Index iteration = 0;
  Method method = Method::CPTT;
  std::vector<PureTensor> added;
  /// Optimized coefficients of every accumulated term after this step.
  std::vector<double> coefficients;
  double rel_residual = 1.0;
  bool converged = true;
  Index solver_iterations = 0;
  double solver_eta = 0.0;
  /// CP-TT only: one entry per added term.
  std::vector<CpttDiagnostics> cptt;
  std::string note;

  Index rank() const noexcept { return coefficients.size(); }
};

struct GreedyTrace {
  std::vector<GreedyStep> steps;
  /// Every accumulated term, unscaled; the approximation is
  /// sum_l steps.back().coefficients[l] * terms[l].
  std::vector<PureTensor> terms;
  double input_norm = 0.0;
  std::string note;
};

struct GreedyResult {
  CpTensor approximation;
  GreedyTrace trace;
};

/// Least-squares coefficients c minimizing ||f - sum_l c_l t_l|| via the
/// eigendecomposition of the term Gram matrix (minimum-norm on its null
/// space).
std::vector<double> optimize_coefficients(std::span<const PureTensor> terms, const CpTensor& f,
                                          double regularization = 1e-12);

GreedyResult greedy_decompose(const CpTensor& f, const GreedyConfig& cfg);

/// ||r|| from the Gram formula, switching to stable_norm when the result is
/// below 1e-3 * reference and cancellation would dominate.
double residual_norm(const CpTensor& r, double reference);

/// CSV columns iter,method,rank,rel_residual,converged,order.
void write_trace_csv(const GreedyTrace& trace, std::ostream& out);

/// Shortest round-trip decimal form of a double.
std::string format_real(double x);

}  // namespace cptt
