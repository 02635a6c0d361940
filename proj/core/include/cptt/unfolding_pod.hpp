#pragma once

// Leading left singular pairs of the mode-i unfolding of a CP tensor,
// computed without forming the unfolding.
//
// Two routes are available. The direct route assembles the N_i x N_i
// correlation kernel  K = F_i C H C F_i^T  (C = diag(weights), H = Hadamard
// product of the other dimensions' factor Grams) and diagonalizes it. The
// fiber route first factors the mode-i fibers F_i = Z a^T with orthonormal Z,
// assembles the s x s core  A = a^T C H C a,  diagonalizes A = W S W^T and maps
// the eigenvectors back through Z. The route is chosen by the cost crossover
// N_i <= r (direct) versus N_i > r (fiber) unless forced.

#include <span>
#include <vector>

#include "cptt/tensor_core.hpp"

namespace cptt {

enum class PodPath { Automatic, Direct, Fiber };

/// Thin orthogonal factorization of a fiber family: fiber_i = sum_m coeffs(i, m) basis(:, m).
struct FiberPod {
  Matrix basis;   // N x s, orthonormal columns
  Matrix coeffs;  // r x s
  Index rank() const noexcept { return static_cast<Index>(basis.cols()); }
};

struct PodResult {
  Index mode = 0;
  std::vector<double> singular_values;  // k leading values, non-increasing
  Matrix left_modes;                    // N_mode x k, orthonormal, sign-fixed
  double total_energy = 0.0;            // sum of all sigma_j^2
  double tail_energy = 0.0;             // sum_{j > k} sigma_j^2, summed directly
  PodPath path = PodPath::Direct;       // route actually taken

  Index k() const noexcept { return singular_values.size(); }
};

/// Relative singular-value cutoff below which fiber directions are dropped.
inline constexpr double kFiberTruncation = 1e-14;

FiberPod fiber_pod(const Matrix& factor, double rel_tol = kFiberTruncation);

/// s x s core A_lm = sum_ij a_il a_jm c_i c_j prod_{k != mode} <f_i^k, f_j^k>.
/// `other_factor_grams` carries one r x r Gram per non-unfolded dimension.
Matrix assemble_gram_core(const FiberPod& fp, const Vector& weights,
                          std::span<const Matrix> other_factor_grams);

/// Requires 1 <= k <= min(N_mode, rank). A rank-0 tensor yields an empty result.
PodResult unfolding_pod(const CpTensor& a, Index mode, Index k,
                        PodPath path = PodPath::Automatic);

namespace detail {

/// For each position p in `active`, the Hadamard product of grams[active[q]]
/// over q != p. `r x r` ones when `active` has a single entry.
std::vector<Matrix> leave_one_out_hadamard(std::span<const Matrix> grams,
                                           std::span<const Index> active, Index rank);

/// Core routine shared with the CP-TT iteration, which reuses Grams across
/// contraction steps. `hadamard_others` is H for this mode.
PodResult unfolding_pod(const Matrix& factor, const Vector& weights, const Matrix& hadamard_others,
                        Index mode, Index k, PodPath path);

/// Makes the largest-magnitude entry of every column non-negative.
void fix_signs(Matrix& columns);

}  // namespace detail

}  // namespace cptt
