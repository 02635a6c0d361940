#include "cptt/unfolding_pod.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cptt {

namespace detail {

void fix_signs(Matrix& columns) {
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    Eigen::Index pos = 0;
    columns.col(j).cwiseAbs().maxCoeff(&pos);
    if (columns(pos, j) < 0) columns.col(j) *= -1.0;
  }
}

std::vector<Matrix> leave_one_out_hadamard(std::span<const Matrix> grams,
                                           std::span<const Index> active, Index rank) {
  const auto r = static_cast<Eigen::Index>(rank);
  const std::size_t n = active.size();
  std::vector<Matrix> out(n);
  if (n == 0) return out;
  // prefix[p] = product over active[0..p), suffix accumulated on the fly.
  std::vector<Matrix> prefix(n);
  prefix[0] = Matrix::Ones(r, r);
  for (std::size_t p = 1; p < n; ++p) {
    prefix[p] = prefix[p - 1].cwiseProduct(grams[active[p - 1]]);
  }
  Matrix suffix = Matrix::Ones(r, r);
  for (std::size_t p = n; p-- > 0;) {
    out[p] = prefix[p].cwiseProduct(suffix);
    if (p > 0) suffix = suffix.cwiseProduct(grams[active[p]]);
  }
  return out;
}

namespace {

struct Spectrum {
  Vector values;  // non-increasing, clamped at 0
  Matrix vectors;
};

Spectrum sorted_spectrum(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
  return {eig.eigenvalues().reverse().cwiseMax(0.0), eig.eigenvectors().rowwise().reverse()};
}

PodResult finish(Index mode, Index k, const Vector& eigenvalues, Matrix modes, PodPath path) {
  PodResult res;
  res.mode = mode;
  res.path = path;
  res.singular_values.resize(k);
  for (Index j = 0; j < k; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    res.singular_values[j] = jj < eigenvalues.size() ? std::sqrt(eigenvalues(jj)) : 0.0;
  }
  for (Eigen::Index j = 0; j < eigenvalues.size(); ++j) {
    res.total_energy += eigenvalues(j);
    if (j >= static_cast<Eigen::Index>(k)) res.tail_energy += eigenvalues(j);
  }
  fix_signs(modes);
  res.left_modes = std::move(modes);
  return res;
}

// Extends an N x s orthonormal basis to N x k columns (k > s) with vectors
// orthogonal to its span.
Matrix complete_basis(const Matrix& basis, Eigen::Index n, Eigen::Index k) {
  Matrix out(n, k);
  const Eigen::Index s = basis.cols();
  out.leftCols(s) = basis;
  if (k > s) {
    Matrix q;
    if (s == 0) {
      q = Matrix::Identity(n, n);
    } else {
      Eigen::HouseholderQR<Matrix> qr(basis);
      q = qr.householderQ() * Matrix::Identity(n, n);
    }
    out.rightCols(k - s) = q.middleCols(s, k - s);
  }
  return out;
}

}  // namespace

PodResult unfolding_pod(const Matrix& factor, const Vector& weights, const Matrix& hadamard_others,
                        Index mode, Index k, PodPath path) {
  const Eigen::Index n = factor.rows();
  const Eigen::Index r = factor.cols();
  if (path == PodPath::Automatic) path = n <= r ? PodPath::Direct : PodPath::Fiber;

  if (path == PodPath::Direct) {
    const Matrix scaled = factor * weights.asDiagonal();
    Matrix kernel = scaled * hadamard_others * scaled.transpose();
    kernel = 0.5 * (kernel + kernel.transpose()).eval();
    Spectrum s = sorted_spectrum(kernel);
    return finish(mode, k, s.values, s.vectors.leftCols(static_cast<Eigen::Index>(k)), path);
  }

  const FiberPod fp = fiber_pod(factor);
  const Matrix ca = weights.asDiagonal() * fp.coeffs;
  Matrix core = ca.transpose() * hadamard_others * ca;
  core = 0.5 * (core + core.transpose()).eval();
  Spectrum s = sorted_spectrum(core);
  const auto kk = static_cast<Eigen::Index>(k);
  const Eigen::Index mapped = std::min(kk, s.vectors.cols());
  Matrix modes = fp.basis * s.vectors.leftCols(mapped);
  if (mapped < kk) modes = complete_basis(modes, n, kk);
  return finish(mode, k, s.values, std::move(modes), path);
}

}  // namespace detail

FiberPod fiber_pod(const Matrix& factor, double rel_tol) {
  if (!factor.allFinite()) throw NumericalError("fiber_pod: non-finite factor entry");
  const Eigen::Index n = factor.rows();
  const Eigen::Index r = factor.cols();
  if (n == 0 || r == 0) return {Matrix(n, 0), Matrix(r, 0)};
  Eigen::JacobiSVD<Matrix> svd(factor, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  Eigen::Index s = 0;
  if (sv.size() > 0 && sv(0) > 0.0) {
    while (s < sv.size() && sv(s) > rel_tol * sv(0)) ++s;
  }
  FiberPod fp;
  fp.basis = svd.matrixU().leftCols(s);
  fp.coeffs = svd.matrixV().leftCols(s) * sv.head(s).asDiagonal();
  return fp;
}

Matrix assemble_gram_core(const FiberPod& fp, const Vector& weights,
                          std::span<const Matrix> other_factor_grams) {
  const Eigen::Index r = fp.coeffs.rows();
  if (weights.size() != r) {
    throw DimensionError("assemble_gram_core: " + std::to_string(weights.size()) +
                         " weights for " + std::to_string(r) + " fibers");
  }
  Matrix h = Matrix::Ones(r, r);
  for (std::size_t k = 0; k < other_factor_grams.size(); ++k) {
    const Matrix& g = other_factor_grams[k];
    if (g.rows() != r || g.cols() != r) {
      throw DimensionError("assemble_gram_core: Gram " + std::to_string(k) + " is not " +
                           std::to_string(r) + "x" + std::to_string(r));
    }
    h.array() *= g.array();
  }
  const Matrix ca = weights.asDiagonal() * fp.coeffs;
  Matrix core = ca.transpose() * h * ca;
  return 0.5 * (core + core.transpose());
}

PodResult unfolding_pod(const CpTensor& a, Index mode, Index k, PodPath path) {
  if (mode >= a.order()) {
    throw DimensionError("unfolding_pod: mode " + std::to_string(mode) + " out of range");
  }
  if (a.rank() == 0) {
    PodResult empty;
    empty.mode = mode;
    empty.left_modes = Matrix(static_cast<Eigen::Index>(a.grid().extent(mode)), 0);
    return empty;
  }
  const Index limit = std::min(a.grid().extent(mode), a.rank());
  if (k < 1 || k > limit) {
    throw ArgumentError("unfolding_pod: k=" + std::to_string(k) + " outside [1, " +
                        std::to_string(limit) + "]");
  }
  const std::vector<Matrix> grams = factor_grams(a);
  std::vector<Index> others;
  for (Index j = 0; j < a.order(); ++j) {
    if (j != mode) others.push_back(j);
  }
  Matrix h = Matrix::Ones(static_cast<Eigen::Index>(a.rank()), static_cast<Eigen::Index>(a.rank()));
  for (Index j : others) h.array() *= grams[j].array();
  return detail::unfolding_pod(a.factor(mode), a.weights(), h, mode, k, path);
}

}  // namespace cptt
