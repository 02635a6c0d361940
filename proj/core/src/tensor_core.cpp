#include "cptt/tensor_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cptt {

namespace {

constexpr double kUnitTolerance = 1e-13;

std::string dims_string(const Grid& g) {
  std::string s = "(";
  for (Index k = 0; k < g.order(); ++k) {
    if (k) s += ",";
    s += std::to_string(g.extent(k));
  }
  return s + ")";
}

void require_same_grid(const Grid& a, const Grid& b, const char* op) {
  if (a != b) {
    throw DimensionError(std::string(op) + ": grid mismatch " + dims_string(a) + " vs " +
                         dims_string(b));
  }
}

// Scales `col` to unit norm and returns the factor removed. Zero columns become
// the first unit vector and report 0.
double normalize_column(Eigen::Ref<Vector> col) {
  const double n = col.norm();
  if (!std::isfinite(n)) throw NumericalError("non-finite factor entry");
  if (n == 0.0) {
    col.setZero();
    if (col.size() > 0) col(0) = 1.0;
    return 0.0;
  }
  if (std::abs(n - 1.0) > kUnitTolerance) col /= n;
  else return 1.0;
  return n;
}

// Deterministic total order used to fix the argument order of inner().
bool precedes(const CpTensor& a, const CpTensor& b) {
  if (a.rank() != b.rank()) return a.rank() < b.rank();
  const auto wa = a.weights();
  const auto wb = b.weights();
  if (wa != wb) {
    return std::lexicographical_compare(wa.data(), wa.data() + wa.size(), wb.data(),
                                        wb.data() + wb.size());
  }
  for (Index k = 0; k < a.order(); ++k) {
    const Matrix& fa = a.factor(k);
    const Matrix& fb = b.factor(k);
    if (fa != fb) {
      return std::lexicographical_compare(fa.data(), fa.data() + fa.size(), fb.data(),
                                          fb.data() + fb.size());
    }
  }
  return false;
}

double ordered_inner(const CpTensor& x, const CpTensor& y) {
  if (x.rank() == 0 || y.rank() == 0) return 0.0;
  Matrix h = Matrix::Ones(x.rank(), y.rank());
  for (Index k = 0; k < x.order(); ++k) {
    h.array() *= (x.factor(k).transpose() * y.factor(k)).array();
  }
  return x.weights().dot(h * y.weights());
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid

Grid::Grid(std::vector<Index> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw DimensionError("grid must have at least one dimension");
  for (Index k = 0; k < dims_.size(); ++k) {
    if (dims_[k] == 0) {
      throw DimensionError("grid dimension " + std::to_string(k) + " has zero points");
    }
  }
}

std::uint64_t Grid::element_count() const noexcept {
  std::uint64_t count = 1;
  for (Index n : dims_) {
    if (count > std::numeric_limits<std::uint64_t>::max() / n) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    count *= n;
  }
  return count;
}

Grid Grid::without(Index mode) const {
  if (mode >= order()) throw DimensionError("mode " + std::to_string(mode) + " out of range");
  if (order() == 1) throw DimensionError("cannot remove the only dimension of a grid");
  std::vector<Index> dims = dims_;
  dims.erase(dims.begin() + static_cast<std::ptrdiff_t>(mode));
  return Grid(std::move(dims));
}

// ---------------------------------------------------------------------------
// PureTensor

PureTensor::PureTensor(Grid grid, double weight, std::vector<Vector> modes)
    : grid_(std::move(grid)), weight_(weight), modes_(std::move(modes)) {
  if (modes_.size() != grid_.order()) {
    throw DimensionError("pure tensor needs one mode per dimension");
  }
  if (!std::isfinite(weight_)) throw NumericalError("non-finite pure tensor weight");
  for (Index k = 0; k < modes_.size(); ++k) {
    if (static_cast<Index>(modes_[k].size()) != grid_.extent(k)) {
      throw DimensionError("mode " + std::to_string(k) + " length does not match grid");
    }
    weight_ *= normalize_column(modes_[k]);
  }
}

PureTensor PureTensor::zero(const Grid& grid) {
  std::vector<Vector> modes;
  modes.reserve(grid.order());
  for (Index n : grid.dims()) modes.push_back(Vector::Unit(static_cast<Eigen::Index>(n), 0));
  return PureTensor(grid, 0.0, std::move(modes));
}

PureTensor PureTensor::scaled(double alpha) const {
  PureTensor t = *this;
  t.weight_ *= alpha;
  if (!std::isfinite(t.weight_)) throw NumericalError("non-finite pure tensor weight");
  return t;
}

CpTensor PureTensor::to_cp() const {
  const double w[] = {1.0};
  return from_terms(grid_, std::span<const PureTensor>(this, 1), w);
}

// ---------------------------------------------------------------------------
// CpTensor

CpTensor::CpTensor(Grid grid) : grid_(std::move(grid)), weights_(0) {
  factors_.reserve(grid_.order());
  for (Index n : grid_.dims()) factors_.emplace_back(static_cast<Eigen::Index>(n), 0);
}

CpTensor::CpTensor(Grid grid, Vector weights, std::vector<Matrix> factors)
    : CpTensor(Normalized{}, std::move(grid), std::move(weights), std::move(factors)) {
  for (Index k = 0; k < factors_.size(); ++k) {
    for (Eigen::Index i = 0; i < factors_[k].cols(); ++i) {
      weights_(i) *= normalize_column(factors_[k].col(i));
    }
  }
  if (!weights_.allFinite()) throw NumericalError("weights overflow during normalization");
}

CpTensor::CpTensor(Normalized, Grid grid, Vector weights, std::vector<Matrix> factors)
    : grid_(std::move(grid)), weights_(std::move(weights)), factors_(std::move(factors)) {
  if (grid_.order() == 0) throw DimensionError("CP tensor needs a non-empty grid");
  if (factors_.size() != grid_.order()) {
    throw DimensionError("CP tensor has " + std::to_string(factors_.size()) +
                         " factor matrices for order " + std::to_string(grid_.order()));
  }
  if (!weights_.allFinite()) throw NumericalError("non-finite CP weight");
  for (Index k = 0; k < factors_.size(); ++k) {
    const Matrix& f = factors_[k];
    if (static_cast<Index>(f.rows()) != grid_.extent(k)) {
      throw DimensionError("factor " + std::to_string(k) + " has " + std::to_string(f.rows()) +
                           " rows, grid expects " + std::to_string(grid_.extent(k)));
    }
    if (f.cols() != weights_.size()) {
      throw DimensionError("factor " + std::to_string(k) + " has " + std::to_string(f.cols()) +
                           " columns, rank is " + std::to_string(weights_.size()));
    }
    if (!f.allFinite()) throw NumericalError("non-finite entry in factor " + std::to_string(k));
  }
}

PureTensor CpTensor::term(Index i) const {
  if (i >= rank()) throw ArgumentError("term index out of range");
  std::vector<Vector> modes;
  modes.reserve(order());
  for (const Matrix& f : factors_) modes.emplace_back(f.col(static_cast<Eigen::Index>(i)));
  return PureTensor(grid_, weights_(static_cast<Eigen::Index>(i)), std::move(modes));
}

CpTensor CpTensor::scaled(double alpha) const { return with_weights(alpha * weights_); }

CpTensor CpTensor::with_weights(Vector weights) const {
  if (weights.size() != weights_.size()) throw DimensionError("weight count must equal rank");
  return CpTensor(Normalized{}, grid_, std::move(weights), factors_);
}

// ---------------------------------------------------------------------------
// DenseTensor

DenseTensor::DenseTensor(Grid grid, std::vector<double> values, std::uint64_t cap)
    : grid_(std::move(grid)), values_(std::move(values)) {
  const std::uint64_t count = grid_.element_count();
  if (count > cap) {
    throw SizeError("dense tensor of " + std::to_string(count) + " elements exceeds cap " +
                    std::to_string(cap));
  }
  if (values_.size() != count) throw DimensionError("dense value count does not match grid");
}

double DenseTensor::at(std::span<const Index> index) const {
  if (index.size() != grid_.order()) throw DimensionError("index order mismatch");
  std::size_t flat = 0;
  for (Index k = 0; k < index.size(); ++k) {
    if (index[k] >= grid_.extent(k)) throw DimensionError("index out of range");
    flat = flat * grid_.extent(k) + index[k];
  }
  return values_[flat];
}

// ---------------------------------------------------------------------------
// Operations

double inner(const CpTensor& a, const CpTensor& b) {
  require_same_grid(a.grid(), b.grid(), "inner");
  return precedes(b, a) ? ordered_inner(b, a) : ordered_inner(a, b);
}

double norm(const CpTensor& a) { return std::sqrt(std::max(inner(a, a), 0.0)); }

double stable_norm(const CpTensor& a) {
  const auto r = static_cast<Eigen::Index>(a.rank());
  if (r == 0) return 0.0;
  // carry holds the triangular factor of the partially contracted tensor; its
  // rows index an orthonormal basis of the processed dimensions.
  Matrix carry = a.weights().transpose();
  for (Index k = 0; k < a.order(); ++k) {
    const Matrix& f = a.factor(k);
    const Eigen::Index p = carry.rows();
    const Eigen::Index n = f.rows();
    Matrix stacked(p * n, r);
    for (Eigen::Index i = 0; i < r; ++i) {
      for (Eigen::Index q = 0; q < p; ++q) {
        stacked.col(i).segment(q * n, n) = carry(q, i) * f.col(i);
      }
    }
    if (stacked.rows() <= 1) {
      carry = std::move(stacked);
      continue;
    }
    Eigen::HouseholderQR<Matrix> qr(stacked);
    const Eigen::Index m = std::min(stacked.rows(), r);
    carry = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  }
  return (carry * Vector::Ones(r)).norm();
}

CpTensor axpy(double alpha, const CpTensor& x, const CpTensor& y) {
  require_same_grid(x.grid(), y.grid(), "axpy");
  const Eigen::Index rx = x.weights().size();
  const Eigen::Index ry = y.weights().size();
  Vector w(rx + ry);
  w << alpha * x.weights(), y.weights();
  std::vector<Matrix> factors;
  factors.reserve(x.order());
  for (Index k = 0; k < x.order(); ++k) {
    Matrix f(x.factor(k).rows(), rx + ry);
    f << x.factor(k), y.factor(k);
    factors.push_back(std::move(f));
  }
  return CpTensor(CpTensor::Normalized{}, x.grid(), std::move(w), std::move(factors));
}

CpTensor contract_mode(const CpTensor& a, Index mode, const Vector& u) {
  if (mode >= a.order()) {
    throw DimensionError("contract_mode: mode " + std::to_string(mode) + " out of range");
  }
  if (static_cast<Index>(u.size()) != a.grid().extent(mode)) {
    throw DimensionError("contract_mode: vector length " + std::to_string(u.size()) +
                         " does not match extent " + std::to_string(a.grid().extent(mode)));
  }
  Vector w = a.weights().cwiseProduct(a.factor(mode).transpose() * u);
  std::vector<Matrix> factors;
  factors.reserve(a.order() - 1);
  for (Index k = 0; k < a.order(); ++k) {
    if (k != mode) factors.push_back(a.factor(k));
  }
  return CpTensor(CpTensor::Normalized{}, a.grid().without(mode), std::move(w),
                  std::move(factors));
}

DenseTensor to_dense(const CpTensor& a, std::uint64_t cap) {
  const std::uint64_t count = a.grid().element_count();
  if (count > cap) {
    throw SizeError("to_dense: " + std::to_string(count) + " elements exceeds cap " +
                    std::to_string(cap));
  }
  std::vector<double> values(count, 0.0);
  std::vector<double> term;
  std::vector<double> next;
  for (Index i = 0; i < a.rank(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    term.assign(1, a.weights()(col));
    for (Index k = 0; k < a.order(); ++k) {
      const Matrix& f = a.factor(k);
      next.resize(term.size() * static_cast<std::size_t>(f.rows()));
      std::size_t pos = 0;
      for (double t : term) {
        for (Eigen::Index n = 0; n < f.rows(); ++n) next[pos++] = t * f(n, col);
      }
      term.swap(next);
    }
    for (std::size_t j = 0; j < values.size(); ++j) values[j] += term[j];
  }
  return DenseTensor(a.grid(), std::move(values), cap);
}

CpTensor from_terms(const Grid& grid, std::span<const PureTensor> terms,
                    std::span<const double> coefficients) {
  if (terms.size() != coefficients.size()) {
    throw DimensionError("from_terms: one coefficient per term required");
  }
  const auto r = static_cast<Eigen::Index>(terms.size());
  Vector w(r);
  std::vector<Matrix> factors;
  factors.reserve(grid.order());
  for (Index n : grid.dims()) factors.emplace_back(static_cast<Eigen::Index>(n), r);
  for (Eigen::Index i = 0; i < r; ++i) {
    const PureTensor& t = terms[static_cast<std::size_t>(i)];
    require_same_grid(grid, t.grid(), "from_terms");
    w(i) = coefficients[static_cast<std::size_t>(i)] * t.weight();
    for (Index k = 0; k < grid.order(); ++k) factors[k].col(i) = t.mode(k);
  }
  return CpTensor(CpTensor::Normalized{}, grid, std::move(w), std::move(factors));
}

Matrix cross_gram(const CpTensor& a, const CpTensor& b, Index mode) {
  require_same_grid(a.grid(), b.grid(), "cross_gram");
  return a.factor(mode).transpose() * b.factor(mode);
}

std::vector<Matrix> factor_grams(const CpTensor& a) {
  std::vector<Matrix> grams;
  grams.reserve(a.order());
  for (const Matrix& f : a.factors()) {
    Matrix g(f.cols(), f.cols());
    g.setZero();
    g.selfadjointView<Eigen::Lower>().rankUpdate(f.transpose());
    grams.push_back(g.selfadjointView<Eigen::Lower>());
  }
  return grams;
}

double inner(const PureTensor& s, const PureTensor& t) {
  require_same_grid(s.grid(), t.grid(), "inner");
  double prod = s.weight() * t.weight();
  for (Index k = 0; k < s.order(); ++k) prod *= s.mode(k).dot(t.mode(k));
  return prod;
}

double distance(const PureTensor& s, const PureTensor& t) {
  require_same_grid(s.grid(), t.grid(), "distance");
  const double ws = s.weight();
  const double wt = t.weight();
  // ||ws s - wt t||^2 = (ws - wt)^2 + 2 ws wt (1 - prod_k <s_k, t_k>), with
  // 1 - <s_k, t_k> = ||s_k - t_k||^2 / 2 evaluated directly.
  double log_prod = 0.0;
  bool direct = false;
  for (Index k = 0; k < s.order(); ++k) {
    const double delta = 0.5 * (s.mode(k) - t.mode(k)).squaredNorm();
    if (delta >= 1.0) {
      direct = true;
      break;
    }
    log_prod += std::log1p(-delta);
  }
  double one_minus_prod;
  if (direct) {
    double prod = 1.0;
    for (Index k = 0; k < s.order(); ++k) prod *= s.mode(k).dot(t.mode(k));
    one_minus_prod = 1.0 - prod;
  } else {
    one_minus_prod = -std::expm1(log_prod);
  }
  const double sq = (ws - wt) * (ws - wt) + 2.0 * ws * wt * one_minus_prod;
  return std::sqrt(std::max(sq, 0.0));
}

bool all_finite(const CpTensor& a) {
  if (!a.weights().allFinite()) return false;
  return std::all_of(a.factors().begin(), a.factors().end(),
                     [](const Matrix& f) { return f.allFinite(); });
}

}  // namespace cptt
