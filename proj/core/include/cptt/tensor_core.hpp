#pragma once

// CP-format tensors on uniform grids.
//
// Inner products are the unweighted discrete Euclidean product on grid
// values. Every factor column is stored with unit norm; magnitudes live in
// the weights. A rank-0 tensor is the zero tensor.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cptt/errors.hpp"

namespace cptt {

using Index = std::size_t;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Per-dimension point counts of a tensor-product grid.
class Grid {
 public:
  Grid() = default;
  explicit Grid(std::vector<Index> dims);

  Index order() const noexcept { return dims_.size(); }
  Index extent(Index mode) const { return dims_.at(mode); }
  const std::vector<Index>& dims() const noexcept { return dims_; }

  /// Product of extents, saturating at UINT64_MAX.
  std::uint64_t element_count() const noexcept;

  /// Grid with dimension `mode` removed.
  Grid without(Index mode) const;

  bool operator==(const Grid&) const = default;

 private:
  std::vector<Index> dims_;
};

class CpTensor;

/// A single weighted rank-1 term w * u_1 ⊗ ... ⊗ u_d with unit modes.
class PureTensor {
 public:
  PureTensor() = default;

  /// Normalizes each mode and folds the norms into the weight. A zero mode
  /// yields weight 0 with the mode replaced by the first unit vector.
  PureTensor(Grid grid, double weight, std::vector<Vector> modes);

  /// The zero term (weight 0, first unit vector in every mode).
  static PureTensor zero(const Grid& grid);

  const Grid& grid() const noexcept { return grid_; }
  Index order() const noexcept { return grid_.order(); }
  double weight() const noexcept { return weight_; }
  const Vector& mode(Index i) const { return modes_.at(i); }
  const std::vector<Vector>& modes() const noexcept { return modes_; }

  double norm() const noexcept { return weight_ < 0 ? -weight_ : weight_; }
  PureTensor scaled(double alpha) const;
  CpTensor to_cp() const;

 private:
  Grid grid_;
  double weight_ = 0.0;
  std::vector<Vector> modes_;
};

/// T = sum_i c_i f_i^(1) ⊗ ... ⊗ f_i^(d), factor(j) is N_j x r.
class CpTensor {
 public:
  CpTensor() = default;

  /// Zero tensor on `grid`.
  explicit CpTensor(Grid grid);

  /// Validates shapes and finiteness, then normalizes columns. Columns already
  /// within 1e-13 of unit norm are kept bit-for-bit so that stored tensors
  /// round-trip exactly.
  CpTensor(Grid grid, Vector weights, std::vector<Matrix> factors);

  const Grid& grid() const noexcept { return grid_; }
  Index order() const noexcept { return grid_.order(); }
  Index rank() const noexcept { return static_cast<Index>(weights_.size()); }
  const Vector& weights() const noexcept { return weights_; }
  const Matrix& factor(Index mode) const { return factors_.at(mode); }
  const std::vector<Matrix>& factors() const noexcept { return factors_; }

  PureTensor term(Index i) const;
  CpTensor scaled(double alpha) const;

  /// Same factors, new weights. Factors are already normalized, so no
  /// renormalization happens.
  CpTensor with_weights(Vector weights) const;

 private:
  struct Normalized {};
  CpTensor(Normalized, Grid grid, Vector weights, std::vector<Matrix> factors);

  friend CpTensor axpy(double, const CpTensor&, const CpTensor&);
  friend CpTensor contract_mode(const CpTensor&, Index, const Vector&);
  friend CpTensor from_terms(const Grid&, std::span<const PureTensor>, std::span<const double>);

  Grid grid_;
  Vector weights_;
  std::vector<Matrix> factors_;
};

/// Full array in row-major order (last index fastest).
class DenseTensor {
 public:
  static constexpr std::uint64_t kDefaultCap = 10'000'000;

  DenseTensor(Grid grid, std::vector<double> values, std::uint64_t cap = kDefaultCap);

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  double at(std::span<const Index> index) const;

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// Discrete L2 inner product, computed from factor Grams in
/// O(r_a r_b sum_k N_k). Exactly symmetric in its arguments.
double inner(const CpTensor& a, const CpTensor& b);

/// sqrt(max(inner(a, a), 0)).
double norm(const CpTensor& a);

/// Norm via a left-to-right orthogonalization sweep over the factors. Costs
/// O(r^3 sum_k N_k) but avoids the cancellation of the Gram formula, so it
/// resolves norms far below sqrt(eps) * (sum of term magnitudes).
double stable_norm(const CpTensor& a);

/// alpha * x + y by term concatenation (rank r_x + r_y, no compression).
CpTensor axpy(double alpha, const CpTensor& x, const CpTensor& y);

/// Contracts dimension `mode` against `u`. The result has order d-1 and
/// weights c_i <f_i^(mode), u>; remaining factors are untouched.
CpTensor contract_mode(const CpTensor& a, Index mode, const Vector& u);

/// Elementwise materialization. Throws SizeError past `cap` elements.
DenseTensor to_dense(const CpTensor& a, std::uint64_t cap = DenseTensor::kDefaultCap);

/// sum_l coefficients[l] * terms[l] as a CP tensor.
CpTensor from_terms(const Grid& grid, std::span<const PureTensor> terms,
                    std::span<const double> coefficients);

/// f_a^T f_b for one dimension (r_a x r_b).
Matrix cross_gram(const CpTensor& a, const CpTensor& b, Index mode);

/// Per-dimension factor Gram matrices F_k^T F_k.
std::vector<Matrix> factor_grams(const CpTensor& a);

/// <s, t> for two pure tensors.
double inner(const PureTensor& s, const PureTensor& t);

/// ||s - t|| for two pure tensors, evaluated without cancellation when the
/// terms nearly coincide.
double distance(const PureTensor& s, const PureTensor& t);

/// Scans for NaN/Inf.
bool all_finite(const CpTensor& a);

// File I/O: JSON document {format_version, dims, weights, factors}.
CpTensor read_cp(const std::filesystem::path& path);
void write_cp(const CpTensor& a, const std::filesystem::path& path);
CpTensor parse_cp(const std::string& text);
std::string serialize_cp(const CpTensor& a);

}  // namespace cptt
