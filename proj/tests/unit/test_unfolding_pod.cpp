#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cptt/unfolding_pod.hpp"
#include "dense_oracle.hpp"

namespace {

using namespace cptt;

double orthonormality_error(const Matrix& q) {
  return (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff();
}

TEST(FiberPod, OrthonormalFibersReproduceThemselves) {
  const Matrix f = Matrix::Identity(5, 3);
  const FiberPod fp = fiber_pod(f);
  ASSERT_EQ(fp.rank(), 3u);
  EXPECT_LE((fp.basis.cwiseAbs() - f).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((fp.coeffs.cwiseAbs() - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(FiberPod, DuplicateFibersHaveRankOne) {
  Matrix f(4, 2);
  f.col(0) << 1, 2, 3, 4;
  f.col(1) = f.col(0);
  EXPECT_EQ(fiber_pod(f).rank(), 1u);
  EXPECT_EQ(fiber_pod(Matrix::Zero(4, 3)).rank(), 0u);
}

TEST(FiberPod, ReconstructsRandomMatrix) {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 10; ++rep) {
    const auto raw = oracle::random_cp(rng, {8, 2}, 5);
    const Matrix& f = raw.factors[0];
    const FiberPod fp = fiber_pod(f);
    EXPECT_EQ(fp.rank(), 5u);
    EXPECT_LE(orthonormality_error(fp.basis), 1e-12);
    EXPECT_LE((fp.basis * fp.coeffs.transpose() - f).norm(), 1e-12 * f.norm());
    // Same column space as the oracle's left singular vectors.
    EXPECT_LE(oracle::max_principal_angle(oracle::left_singular_vectors(f, 5), fp.basis), 1e-10);
  }
}

TEST(AssembleGramCore, RankOneIsSquaredWeight) {
  const FiberPod fp = fiber_pod(Matrix::Identity(3, 1));
  const std::vector<Matrix> grams = {Matrix::Ones(1, 1), Matrix::Ones(1, 1)};
  const Matrix a = assemble_gram_core(fp, Vector::Constant(1, -2.5), grams);
  ASSERT_EQ(a.rows(), 1);
  EXPECT_NEAR(a(0, 0), 6.25, 1e-14);
}

TEST(AssembleGramCore, OrthogonalTermsGiveDiagonal) {
  const Matrix f = Matrix::Identity(4, 3);
  const CpTensor t(Grid({4, 4, 4}), Vector::LinSpaced(3, 1, 3), {f, f, f});
  const std::vector<Matrix> grams = factor_grams(t);
  const Matrix a = assemble_gram_core(fiber_pod(t.factor(0)), t.weights(), {&grams[1], 2});
  Matrix off = a;
  off.diagonal().setZero();
  EXPECT_LE(off.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(AssembleGramCore, EigenvaluesAreSquaredSingularValues) {
  std::mt19937_64 rng(32);
  const auto raw = oracle::random_cp(rng, {6, 5, 4, 3}, 4);
  const CpTensor t = raw.tensor();
  const std::vector<Matrix> grams = factor_grams(t);
  const Matrix a = assemble_gram_core(fiber_pod(t.factor(0)), t.weights(), {&grams[1], 3});
  EXPECT_LE((a - a.transpose()).cwiseAbs().maxCoeff(), 1e-12 * a.norm());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  const Vector ev = eig.eigenvalues().reverse();
  const Vector sv = oracle::singular_values(
      oracle::unfold(oracle::materialize(raw.dims, raw.weights, raw.factors), 0));
  for (Eigen::Index j = 0; j < ev.size(); ++j) {
    EXPECT_NEAR(ev(j), sv(j) * sv(j), 1e-10 * sv(0) * sv(0));
  }
}

TEST(AssembleGramCore, RejectsMismatchedInputs) {
  const FiberPod fp = fiber_pod(Matrix::Identity(3, 2));
  const std::vector<Matrix> wrong = {Matrix::Ones(3, 3)};
  EXPECT_THROW(assemble_gram_core(fp, Vector::Ones(2), wrong), DimensionError);
  const std::vector<Matrix> ok = {Matrix::Ones(2, 2)};
  EXPECT_THROW(assemble_gram_core(fp, Vector::Ones(3), ok), DimensionError);
}

TEST(UnfoldingPod, RankOneInput) {
  std::mt19937_64 rng(33);
  const auto raw = oracle::random_cp(rng, {4, 5, 3}, 1);
  const CpTensor t = raw.tensor();
  for (Index mode = 0; mode < 3; ++mode) {
    const PodResult pod = unfolding_pod(t, mode, 1);
    EXPECT_NEAR(pod.singular_values[0], std::abs(t.weights()(0)), 1e-13 * std::abs(t.weights()(0)));
    EXPECT_NEAR(std::abs(pod.left_modes.col(0).dot(t.factor(mode).col(0))), 1.0, 1e-13);
    EXPECT_NEAR(pod.tail_energy, 0.0, 1e-13 * pod.total_energy);
  }
}

TEST(UnfoldingPod, TwoDimensionalMatchesDenseSvd) {
  std::mt19937_64 rng(34);
  const auto raw = oracle::random_cp(rng, {7, 9}, 5);
  const Vector sv = oracle::singular_values(
      oracle::unfold(oracle::materialize(raw.dims, raw.weights, raw.factors), 0));
  const PodResult pod = unfolding_pod(raw.tensor(), 0, 5);
  for (Eigen::Index j = 0; j < 5; ++j) EXPECT_NEAR(pod.singular_values[j], sv(j), 1e-10 * sv(0));
}

TEST(UnfoldingPod, PathsAgreeOnLargerInstance) {
  std::mt19937_64 rng(35);
  const auto raw = oracle::random_cp(rng, {6, 7, 8, 9}, 5);
  const CpTensor t = raw.tensor();
  const oracle::Dense dense = oracle::materialize(raw.dims, raw.weights, raw.factors);
  for (Index mode = 0; mode < 4; ++mode) {
    const PodResult direct = unfolding_pod(t, mode, 5, PodPath::Direct);
    const PodResult fiber = unfolding_pod(t, mode, 5, PodPath::Fiber);
    EXPECT_EQ(direct.path, PodPath::Direct);
    EXPECT_EQ(fiber.path, PodPath::Fiber);
    EXPECT_EQ(unfolding_pod(t, mode, 5).path, PodPath::Fiber);  // N > r
    const Vector sv = oracle::singular_values(oracle::unfold(dense, mode));
    for (Index j = 0; j < 5; ++j) {
      EXPECT_NEAR(direct.singular_values[j], fiber.singular_values[j], 1e-10 * sv(0));
      EXPECT_NEAR(direct.singular_values[j], sv(static_cast<Eigen::Index>(j)), 1e-10 * sv(0));
    }
    // Sign-fixed columns coincide, not just up to sign.
    EXPECT_LE((direct.left_modes - fiber.left_modes).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE(orthonormality_error(direct.left_modes), 1e-10);
    EXPECT_LE(orthonormality_error(fiber.left_modes), 1e-10);
  }
}

TEST(UnfoldingPod, AutomaticPicksDirectWhenRankDominates) {
  std::mt19937_64 rng(36);
  const CpTensor t = oracle::random_tensor(rng, {3, 4, 5}, 6);
  EXPECT_EQ(unfolding_pod(t, 0, 2).path, PodPath::Direct);
}

TEST(UnfoldingPod, EnergyIdentityAndBounds) {
  std::mt19937_64 rng(37);
  for (int rep = 0; rep < 40; ++rep) {
    const auto dims = oracle::random_dims(rng, 3 + rep % 2, 1, 7);
    const CpTensor t = oracle::random_tensor(rng, dims, 1 + rep % 6);
    const double n2 = std::pow(norm(t), 2);
    for (Index mode = 0; mode < t.order(); ++mode) {
      const Index k = std::min<Index>(dims[mode], t.rank());
      const PodResult pod = unfolding_pod(t, mode, k);
      double sum = 0.0;
      for (Index j = 0; j < k; ++j) {
        if (j > 0) EXPECT_LE(pod.singular_values[j], pod.singular_values[j - 1]);
        EXPECT_GE(pod.singular_values[j], 0.0);
        sum += pod.singular_values[j] * pod.singular_values[j];
      }
      EXPECT_NEAR(sum, n2, 1e-8 * n2);
      EXPECT_NEAR(pod.total_energy, n2, 1e-8 * n2);
      EXPECT_LE(pod.singular_values[0], norm(t) * (1 + 1e-12));
      // Sign convention: the largest-magnitude entry of every column is positive.
      for (Eigen::Index c = 0; c < pod.left_modes.cols(); ++c) {
        Eigen::Index pos = 0;
        pod.left_modes.col(c).cwiseAbs().maxCoeff(&pos);
        EXPECT_GT(pod.left_modes(pos, c), 0.0);
      }
    }
  }
}

TEST(UnfoldingPod, InvariantUnderPermutingOtherDimensions) {
  std::mt19937_64 rng(38);
  const auto raw = oracle::random_cp(rng, {5, 4, 6}, 3);
  auto swapped = raw;
  std::swap(swapped.dims[1], swapped.dims[2]);
  std::swap(swapped.factors[1], swapped.factors[2]);
  const PodResult a = unfolding_pod(raw.tensor(), 0, 3);
  const PodResult b = unfolding_pod(swapped.tensor(), 0, 3);
  for (Index j = 0; j < 3; ++j) {
    EXPECT_NEAR(a.singular_values[j], b.singular_values[j], 1e-12 * a.singular_values[0]);
  }
}

TEST(UnfoldingPod, ArgumentChecks) {
  std::mt19937_64 rng(39);
  const CpTensor t = oracle::random_tensor(rng, {3, 4}, 2);
  EXPECT_THROW(unfolding_pod(t, 0, 0), ArgumentError);
  EXPECT_THROW(unfolding_pod(t, 0, 3), ArgumentError);
  EXPECT_THROW(unfolding_pod(t, 2, 1), DimensionError);
  const PodResult empty = unfolding_pod(CpTensor(Grid({3, 4})), 0, 1);
  EXPECT_EQ(empty.k(), 0u);
}

TEST(UnfoldingPod, RankDeficientFibersStillFillK) {
  // Two identical columns in mode 0: the fiber basis has one direction but
  // k = 2 left modes are still returned, orthonormal, with sigma_2 = 0.
  Matrix f0(4, 2);
  f0.col(0) << 1, 0, 0, 0;
  f0.col(1) << 1, 0, 0, 0;
  Matrix f1(3, 2);
  f1 << 1, 0, 0, 1, 0, 0;
  const CpTensor t(Grid({4, 3}), Vector::Ones(2), {f0, f1});
  const PodResult pod = unfolding_pod(t, 0, 2, PodPath::Fiber);
  ASSERT_EQ(pod.k(), 2u);
  EXPECT_NEAR(pod.singular_values[0], std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(pod.singular_values[1], 0.0, 1e-14);
  EXPECT_LE(orthonormality_error(pod.left_modes), 1e-12);
}

}  // namespace
