#pragma once

// Fixed-point rank-1 solvers used as baselines: alternating least squares
// (one dimension per block) and alternating SVD (pairs of dimensions per
// block). Both operate on CP-format input without materializing it.

#include <cstdint>

#include "cptt/tensor_core.hpp"

namespace cptt {

struct FixedPointConfig {
  /// Convergence threshold on eta = ||t^m - t^(m-1)|| / ||t^m||.
  double tol = 1e-4;
  Index max_iters = 100;
  /// ALS only: rescale the term by its optimal least-squares coefficient
  /// after every sweep.
  bool relaxed = false;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct SolveOutcome {
  PureTensor term;
  Index iterations = 0;
  bool converged = false;
  double final_eta = 0.0;
};

SolveOutcome als_rank1(const CpTensor& f, const FixedPointConfig& cfg);

/// Pairs (i, j), i < j, are visited in lexicographic order within a sweep.
SolveOutcome asvd_rank1(const CpTensor& f, const FixedPointConfig& cfg);

/// The N_i x N_j matrix obtained by contracting `f` against `factors` in every
/// dimension except i and j. Used by the ASVD pair update.
Matrix pair_contraction(const CpTensor& f, const std::vector<Vector>& factors, Index i, Index j);

/// Per-sweep trace hooks for tests: called after every block update with the
/// current rank-1 iterate.
struct SolverObserver {
  virtual ~SolverObserver() = default;
  virtual void on_update(const PureTensor& iterate) = 0;
};

SolveOutcome als_rank1(const CpTensor& f, const FixedPointConfig& cfg, SolverObserver* observer);
SolveOutcome asvd_rank1(const CpTensor& f, const FixedPointConfig& cfg, SolverObserver* observer);

}  // namespace cptt
