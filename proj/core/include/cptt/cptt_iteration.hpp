#pragma once

// CP-TT rank-1 and rank-k term construction.
//
// At each step the unfolding with the largest leading singular value is
// selected, its leading left mode is recorded, and the tensor is contracted
// against it. Once two dimensions remain, the dense 2-D SVD supplies the last
// two modes and the term weight. Intermediate tensors stay in CP form; the
// factor Grams are computed once and reused because contraction only changes
// weights.

#include <vector>

#include "cptt/tensor_core.hpp"
#include "cptt/unfolding_pod.hpp"

namespace cptt {

struct CpttDiagnostics {
  /// Dimensions in the order they were fixed; the final two are the 2-D
  /// closure pair in ascending index order.
  std::vector<Index> order;
  /// Leading singular value selected at each contraction step, then the
  /// closure's leading singular value.
  std::vector<double> top_sigmas;
  /// ||G^(n)|| for every step including the closure, from trailing spectra.
  std::vector<double> residual_G_norms;
  /// sum_n ||G^(n)||^2, which equals ||f - t||^2.
  double predicted_residual_sq = 0.0;
};

struct CpttResult {
  PureTensor term;
  CpttDiagnostics diagnostics;
};

/// One CP-TT rank-1 term. Requires order >= 2; a rank-0 input yields the
/// zero term with empty diagnostics. Argmax ties go to the lowest dimension.
CpttResult cptt_rank1(const CpTensor& f, PodPath path = PodPath::Automatic);

/// One rank-k branch: contract `f` along `mode` with the unit vector `u` and
/// finish the remaining dimensions with the rank-1 iteration. The returned
/// term has `u` as its mode-`mode` factor.
CpttResult cptt_branch(const CpTensor& f, Index mode, const Vector& u,
                       PodPath path = PodPath::Automatic);

struct CpttRankKResult {
  std::vector<PureTensor> terms;
  Index split_mode = 0;
  std::vector<double> split_sigmas;
  /// One entry per branch; `order` starts with split_mode.
  std::vector<CpttDiagnostics> branches;
  /// Trailing energy of the split unfolding plus every branch's prediction.
  double predicted_residual_sq = 0.0;
};

/// k terms sharing k orthonormal modes along the dimension maximizing
/// sum_{j<=k} sigma_j^2. Requires 1 <= k <= min_i min(N_i, rank(f)).
/// k == 1 delegates to cptt_rank1.
CpttRankKResult cptt_rankk(const CpTensor& f, Index k, PodPath path = PodPath::Automatic);

}  // namespace cptt
