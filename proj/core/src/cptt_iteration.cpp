#include "cptt/cptt_iteration.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cptt {

namespace {

// Runs the rank-1 sweep over `active` (ascending original dimension indices)
// on the CP tensor with f's factors and the given weights. Writes the chosen
// modes into `modes` and returns the term weight.
double sweep(const CpTensor& f, const std::vector<Matrix>& grams, Vector weights,
             std::vector<Index> active, PodPath path, std::vector<Vector>& modes,
             CpttDiagnostics& diag) {
  const Index r = f.rank();
  while (active.size() > 2) {
    const std::vector<Matrix> hadamard = detail::leave_one_out_hadamard(grams, active, r);
    std::size_t best = 0;
    PodResult best_pod;
    for (std::size_t p = 0; p < active.size(); ++p) {
      PodResult pod =
          detail::unfolding_pod(f.factor(active[p]), weights, hadamard[p], active[p], 1, path);
      if (p == 0 || pod.singular_values[0] > best_pod.singular_values[0]) {
        best = p;
        best_pod = std::move(pod);
      }
    }
    const Index mode = active[best];
    const Vector u = best_pod.left_modes.col(0);
    diag.order.push_back(mode);
    diag.top_sigmas.push_back(best_pod.singular_values[0]);
    diag.residual_G_norms.push_back(std::sqrt(best_pod.tail_energy));
    weights = weights.cwiseProduct(f.factor(mode).transpose() * u);
    modes[mode] = u;
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(best));
  }

  if (active.size() == 1) {
    const Index mode = active[0];
    Vector v = f.factor(mode) * weights;
    const double sigma = v.norm();
    if (sigma > 0.0) v /= sigma;
    else v = Vector::Unit(v.size(), 0);
    modes[mode] = v;
    diag.order.push_back(mode);
    diag.top_sigmas.push_back(sigma);
    return sigma;
  }

  // 2-D closure: dense SVD of F_a diag(w) F_b^T.
  const Index a = active[0];
  const Index b = active[1];
  const Matrix m = f.factor(a) * weights.asDiagonal() * f.factor(b).transpose();
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  Vector u = svd.matrixU().col(0);
  Vector v = svd.matrixV().col(0);
  Eigen::Index pos = 0;
  u.cwiseAbs().maxCoeff(&pos);
  if (u(pos) < 0) {
    u = -u;
    v = -v;
  }
  double tail = 0.0;
  for (Eigen::Index j = sv.size() - 1; j >= 1; --j) tail += sv(j) * sv(j);
  modes[a] = u;
  modes[b] = v;
  diag.order.push_back(a);
  diag.order.push_back(b);
  diag.top_sigmas.push_back(sv(0));
  diag.residual_G_norms.push_back(std::sqrt(tail));
  return sv(0);
}

void finalize(CpttDiagnostics& diag) {
  diag.predicted_residual_sq = 0.0;
  for (double g : diag.residual_G_norms) diag.predicted_residual_sq += g * g;
}

std::vector<Index> all_but(Index order, Index skip) {
  std::vector<Index> out;
  for (Index j = 0; j < order; ++j) {
    if (j != skip) out.push_back(j);
  }
  return out;
}

CpttResult branch_with_grams(const CpTensor& f, const std::vector<Matrix>& grams, Index mode,
                             const Vector& u, PodPath path) {
  CpttResult res;
  std::vector<Vector> modes(f.order());
  modes[mode] = u;
  res.diagnostics.order.push_back(mode);
  const Vector weights = f.weights().cwiseProduct(f.factor(mode).transpose() * u);
  const double sigma = sweep(f, grams, weights, all_but(f.order(), mode), path, modes,
                             res.diagnostics);
  finalize(res.diagnostics);
  res.term = PureTensor(f.grid(), sigma, std::move(modes));
  return res;
}

void require_order(const CpTensor& f, const char* op) {
  if (f.order() < 2) {
    throw DimensionError(std::string(op) + ": tensor order must be at least 2");
  }
}

}  // namespace

CpttResult cptt_rank1(const CpTensor& f, PodPath path) {
  require_order(f, "cptt_rank1");
  if (f.rank() == 0) return {PureTensor::zero(f.grid()), {}};
  const std::vector<Matrix> grams = factor_grams(f);
  std::vector<Index> active(f.order());
  for (Index j = 0; j < f.order(); ++j) active[j] = j;
  CpttResult res;
  std::vector<Vector> modes(f.order());
  const double sigma = sweep(f, grams, f.weights(), std::move(active), path, modes,
                             res.diagnostics);
  finalize(res.diagnostics);
  res.term = PureTensor(f.grid(), sigma, std::move(modes));
  return res;
}

CpttResult cptt_branch(const CpTensor& f, Index mode, const Vector& u, PodPath path) {
  require_order(f, "cptt_branch");
  if (mode >= f.order()) throw DimensionError("cptt_branch: mode out of range");
  if (static_cast<Index>(u.size()) != f.grid().extent(mode)) {
    throw DimensionError("cptt_branch: vector length does not match extent");
  }
  return branch_with_grams(f, factor_grams(f), mode, u, path);
}

CpttRankKResult cptt_rankk(const CpTensor& f, Index k, PodPath path) {
  require_order(f, "cptt_rankk");
  Index limit = f.rank();
  for (Index n : f.grid().dims()) limit = std::min(limit, n);
  if (k < 1 || k > limit) {
    throw ArgumentError("cptt_rankk: k=" + std::to_string(k) + " outside [1, " +
                        std::to_string(limit) + "]");
  }

  CpttRankKResult out;
  if (k == 1) {
    CpttResult one = cptt_rank1(f, path);
    out.split_mode = one.diagnostics.order.front();
    out.split_sigmas = {one.diagnostics.top_sigmas.front()};
    out.predicted_residual_sq = one.diagnostics.predicted_residual_sq;
    out.terms.push_back(std::move(one.term));
    out.branches.push_back(std::move(one.diagnostics));
    return out;
  }

  const std::vector<Matrix> grams = factor_grams(f);
  std::vector<Index> active(f.order());
  for (Index j = 0; j < f.order(); ++j) active[j] = j;
  const std::vector<Matrix> hadamard = detail::leave_one_out_hadamard(grams, active, f.rank());

  PodResult split;
  double best_score = -1.0;
  for (Index i = 0; i < f.order(); ++i) {
    PodResult pod = detail::unfolding_pod(f.factor(i), f.weights(), hadamard[i], i, k, path);
    double score = 0.0;
    for (double s : pod.singular_values) score += s * s;
    if (score > best_score) {
      best_score = score;
      split = std::move(pod);
    }
  }

  out.split_mode = split.mode;
  out.split_sigmas = split.singular_values;
  out.predicted_residual_sq = split.tail_energy;
  for (Index j = 0; j < k; ++j) {
    const Vector u = split.left_modes.col(static_cast<Eigen::Index>(j));
    CpttResult branch = branch_with_grams(f, grams, split.mode, u, path);
    branch.diagnostics.top_sigmas.insert(branch.diagnostics.top_sigmas.begin(),
                                         split.singular_values[j]);
    out.predicted_residual_sq += branch.diagnostics.predicted_residual_sq;
    out.terms.push_back(std::move(branch.term));
    out.branches.push_back(std::move(branch.diagnostics));
  }
  return out;
}

}  // namespace cptt
