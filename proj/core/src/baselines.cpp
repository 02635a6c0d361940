#include "cptt/baselines.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace cptt {

void FixedPointConfig::validate() const {
  if (!(tol > 0.0)) throw ArgumentError("fixed-point tolerance must be positive");
  if (max_iters < 1) throw ArgumentError("max_iters must be at least 1");
}

namespace {

class RankOneState {
 public:
  RankOneState(const CpTensor& f, std::uint64_t seed) : f_(f), rng_(seed) {
    modes_.resize(f.order());
    dots_.resize(f.order());
    weight_ = 1.0;
    for (Index k = 0; k < f.order(); ++k) weight_ *= randomize(k);
  }

  const CpTensor& tensor() const { return f_; }
  double weight() const { return weight_; }
  const std::vector<Vector>& modes() const { return modes_; }

  PureTensor iterate() const { return PureTensor(f_.grid(), weight_, modes_); }

  // Draws an i.i.d. standard normal vector for dimension k, stores its
  // direction and returns its norm.
  double randomize(Index k) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(static_cast<Eigen::Index>(f_.grid().extent(k)));
    double n = 0.0;
    while (n == 0.0) {
      for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(rng_);
      n = v.norm();
    }
    set_mode(k, v / n);
    return n;
  }

  void set_mode(Index k, Vector u) {
    modes_[k] = std::move(u);
    dots_[k] = f_.factor(k).transpose() * modes_[k];
  }

  void set_weight(double w) { weight_ = w; }

  // c ⊙ prod_{k not in skip} <f^k, u^k>.
  Vector coefficients(Index skip_a, Index skip_b) const {
    Vector coef = f_.weights();
    for (Index k = 0; k < f_.order(); ++k) {
      if (k != skip_a && k != skip_b) coef = coef.cwiseProduct(dots_[k]);
    }
    return coef;
  }

  // <f, t_hat> with unit modes.
  double projection() const {
    return coefficients(std::numeric_limits<Index>::max(), std::numeric_limits<Index>::max())
        .sum();
  }

 private:
  const CpTensor& f_;
  std::mt19937_64 rng_;
  std::vector<Vector> modes_;
  std::vector<Vector> dots_;
  double weight_ = 0.0;
};

double relative_eta(const PureTensor& current, const PureTensor& previous) {
  const double d = distance(current, previous);
  const double scale = current.norm();
  if (scale > 0.0) return d / scale;
  return d == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

SolveOutcome trivial_outcome(const CpTensor& f) {
  SolveOutcome out;
  out.term = PureTensor::zero(f.grid());
  out.converged = true;
  return out;
}

void require_order(const CpTensor& f, const char* op) {
  if (f.order() < 2) throw DimensionError(std::string(op) + ": tensor order must be at least 2");
}

constexpr Index kNone = std::numeric_limits<Index>::max();

}  // namespace

SolveOutcome als_rank1(const CpTensor& f, const FixedPointConfig& cfg) {
  return als_rank1(f, cfg, nullptr);
}

SolveOutcome als_rank1(const CpTensor& f, const FixedPointConfig& cfg, SolverObserver* observer) {
  cfg.validate();
  require_order(f, "als_rank1");
  if (f.rank() == 0) return trivial_outcome(f);

  RankOneState state(f, cfg.rng_seed);
  SolveOutcome out;
  PureTensor previous = state.iterate();
  for (Index m = 1; m <= cfg.max_iters; ++m) {
    for (Index i = 0; i < f.order(); ++i) {
      const Vector v = f.factor(i) * state.coefficients(i, kNone);
      const double n = v.norm();
      if (n > 0.0 && std::isfinite(n)) {
        state.set_mode(i, v / n);
        state.set_weight(n);
      } else {
        state.randomize(i);
        state.set_weight(0.0);
      }
      if (observer) observer->on_update(state.iterate());
    }
    if (cfg.relaxed) state.set_weight(state.projection());
    PureTensor current = state.iterate();
    out.iterations = m;
    out.final_eta = relative_eta(current, previous);
    previous = std::move(current);
    if (out.final_eta < cfg.tol) {
      out.converged = true;
      break;
    }
  }
  out.term = std::move(previous);
  return out;
}

Matrix pair_contraction(const CpTensor& f, const std::vector<Vector>& factors, Index i, Index j) {
  if (factors.size() != f.order()) throw DimensionError("pair_contraction: one vector per dim");
  if (i >= f.order() || j >= f.order() || i == j) {
    throw DimensionError("pair_contraction: invalid dimension pair");
  }
  Vector coef = f.weights();
  for (Index k = 0; k < f.order(); ++k) {
    if (k == i || k == j) continue;
    if (static_cast<Index>(factors[k].size()) != f.grid().extent(k)) {
      throw DimensionError("pair_contraction: vector length does not match extent");
    }
    coef = coef.cwiseProduct(f.factor(k).transpose() * factors[k]);
  }
  return f.factor(i) * coef.asDiagonal() * f.factor(j).transpose();
}

namespace {

struct Triplet {
  double sigma = 0.0;
  Vector left;
  Vector right;
};

// Leading singular triplet of a small dense matrix via the smaller Gram.
Triplet leading_triplet(const Matrix& u) {
  Triplet t;
  const bool rows_smaller = u.rows() <= u.cols();
  const Matrix gram = rows_smaller ? Matrix(u * u.transpose()) : Matrix(u.transpose() * u);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) throw NumericalError("eigensolver failed in ASVD update");
  Vector x = eig.eigenvectors().col(gram.rows() - 1);
  Vector y = rows_smaller ? Vector(u.transpose() * x) : Vector(u * x);
  t.sigma = y.norm();
  if (t.sigma > 0.0) y /= t.sigma;
  Eigen::Index pos = 0;
  x.cwiseAbs().maxCoeff(&pos);
  if (x(pos) < 0) {
    x = -x;
    y = -y;
  }
  if (rows_smaller) {
    t.left = std::move(x);
    t.right = std::move(y);
  } else {
    t.left = std::move(y);
    t.right = std::move(x);
  }
  return t;
}

}  // namespace

SolveOutcome asvd_rank1(const CpTensor& f, const FixedPointConfig& cfg) {
  return asvd_rank1(f, cfg, nullptr);
}

SolveOutcome asvd_rank1(const CpTensor& f, const FixedPointConfig& cfg, SolverObserver* observer) {
  cfg.validate();
  require_order(f, "asvd_rank1");
  if (f.rank() == 0) return trivial_outcome(f);

  RankOneState state(f, cfg.rng_seed);
  SolveOutcome out;
  PureTensor previous = state.iterate();
  const Index d = f.order();
  for (Index m = 1; m <= cfg.max_iters; ++m) {
    for (Index i = 0; i + 1 < d; ++i) {
      for (Index j = i + 1; j < d; ++j) {
        const Vector coef = state.coefficients(i, j);
        const Matrix u = f.factor(i) * coef.asDiagonal() * f.factor(j).transpose();
        const Triplet t = leading_triplet(u);
        if (t.sigma > 0.0 && std::isfinite(t.sigma)) {
          state.set_mode(i, t.left);
          state.set_mode(j, t.right);
          state.set_weight(t.sigma);
        } else {
          state.randomize(i);
          state.randomize(j);
          state.set_weight(0.0);
        }
        if (observer) observer->on_update(state.iterate());
      }
    }
    PureTensor current = state.iterate();
    out.iterations = m;
    out.final_eta = relative_eta(current, previous);
    previous = std::move(current);
    if (out.final_eta < cfg.tol) {
      out.converged = true;
      break;
    }
  }
  out.term = std::move(previous);
  return out;
}

}  // namespace cptt
