#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "cptt/cptt_iteration.hpp"
#include "dense_oracle.hpp"

namespace {

using namespace cptt;

double dense_residual(const oracle::RawCp& raw, const std::vector<PureTensor>& terms) {
  oracle::Dense r = oracle::materialize(raw.dims, raw.weights, raw.factors);
  for (const PureTensor& t : terms) r = oracle::minus(r, oracle::materialize(t));
  return oracle::norm(r);
}

TEST(CpttRank1, RecoversRankOneExactly) {
  std::mt19937_64 rng(41);
  for (std::size_t d = 2; d <= 5; ++d) {
    const auto raw = oracle::random_cp(rng, oracle::random_dims(rng, d, 2, 6), 1);
    const CpttResult res = cptt_rank1(raw.tensor());
    const double fnorm = std::abs(raw.tensor().weights()(0));
    EXPECT_LE(dense_residual(raw, {res.term}), 1e-12 * fnorm);
    EXPECT_GE(res.term.weight(), 0.0);
  }
}

TEST(CpttRank1, TwoDimensionalIsBestRankOne) {
  std::mt19937_64 rng(42);
  const auto raw = oracle::random_cp(rng, {8, 6}, 4);
  const CpttResult res = cptt_rank1(raw.tensor());
  const Vector sv = oracle::singular_values(
      oracle::unfold(oracle::materialize(raw.dims, raw.weights, raw.factors), 0));
  const double tail = sv.squaredNorm() - sv(0) * sv(0);
  EXPECT_NEAR(std::pow(dense_residual(raw, {res.term}), 2), tail, 1e-10 * sv.squaredNorm());
  EXPECT_NEAR(res.term.weight(), sv(0), 1e-12 * sv(0));
  EXPECT_EQ(res.diagnostics.order, (std::vector<Index>{0, 1}));
}

TEST(CpttRank1, ResidualDecompositionOnSmallInstance) {
  std::mt19937_64 rng(43);
  const auto raw = oracle::random_cp(rng, {5, 5, 5, 5}, 3);
  const CpttResult res = cptt_rank1(raw.tensor());
  const double r2 = std::pow(dense_residual(raw, {res.term}), 2);
  EXPECT_NEAR(res.diagnostics.predicted_residual_sq, r2, 1e-8 * r2);
  double sum = 0.0;
  for (double g : res.diagnostics.residual_G_norms) sum += g * g;
  EXPECT_NEAR(sum, r2, 1e-8 * r2);
  EXPECT_EQ(res.diagnostics.residual_G_norms.size(), 3u);
  EXPECT_EQ(res.diagnostics.top_sigmas.size(), 3u);
}

TEST(CpttRank1, OrderIsPermutation) {
  std::mt19937_64 rng(44);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t d = 2 + rep % 5;
    const CpTensor f = oracle::random_tensor(rng, oracle::random_dims(rng, d, 2, 5), 1 + rep % 4);
    std::vector<Index> order = cptt_rank1(f).diagnostics.order;
    std::sort(order.begin(), order.end());
    std::vector<Index> expected(d);
    std::iota(expected.begin(), expected.end(), 0);
    EXPECT_EQ(order, expected);
  }
}

TEST(CpttRank1, TiesGoToLowestDimension) {
  // Fully symmetric rank-2 tensor: every unfolding has the same spectrum.
  Matrix f(3, 2);
  f << 1, 0, 0, 1, 0, 0;
  const CpTensor t(Grid({3, 3, 3, 3}), Vector::Ones(2) * 2.0, {f, f, f, f});
  const CpttResult res = cptt_rank1(t);
  EXPECT_EQ(res.diagnostics.order.front(), 0u);
}

TEST(CpttRank1, ScalingInvariance) {
  std::mt19937_64 rng(45);
  const CpTensor f = oracle::random_tensor(rng, {4, 5, 3, 6}, 4);
  const CpttResult a = cptt_rank1(f);
  const CpttResult b = cptt_rank1(f.scaled(7.5));
  EXPECT_EQ(a.diagnostics.order, b.diagnostics.order);
  EXPECT_NEAR(b.term.weight(), 7.5 * a.term.weight(), 1e-12 * b.term.weight());
  for (std::size_t n = 0; n < a.diagnostics.top_sigmas.size(); ++n) {
    EXPECT_NEAR(b.diagnostics.top_sigmas[n], 7.5 * a.diagnostics.top_sigmas[n],
                1e-12 * b.diagnostics.top_sigmas[n]);
  }
}

TEST(CpttRank1, NonExpansive) {
  std::mt19937_64 rng(46);
  for (int rep = 0; rep < 20; ++rep) {
    const auto raw = oracle::random_cp(rng, oracle::random_dims(rng, 3, 2, 5), 1 + rep % 5);
    const double fnorm = norm(raw.tensor());
    EXPECT_LE(dense_residual(raw, {cptt_rank1(raw.tensor()).term}), fnorm * (1 + 1e-12));
  }
}

TEST(CpttRank1, ZeroRankAndOrderChecks) {
  const CpttResult z = cptt_rank1(CpTensor(Grid({3, 4, 2})));
  EXPECT_EQ(z.term.weight(), 0.0);
  EXPECT_TRUE(z.diagnostics.order.empty());
  std::mt19937_64 rng(47);
  const CpTensor order1 = contract_mode(oracle::random_tensor(rng, {3, 4}, 2), 0, Vector::Ones(3));
  EXPECT_THROW(cptt_rank1(order1), DimensionError);
}

TEST(CpttRankK, KOneMatchesRankOne) {
  std::mt19937_64 rng(48);
  const CpTensor f = oracle::random_tensor(rng, {5, 4, 6}, 4);
  const CpttResult one = cptt_rank1(f);
  const CpttRankKResult k1 = cptt_rankk(f, 1);
  ASSERT_EQ(k1.terms.size(), 1u);
  EXPECT_EQ(k1.branches[0].order, one.diagnostics.order);
  EXPECT_EQ(k1.terms[0].weight(), one.term.weight());
  EXPECT_EQ(distance(k1.terms[0], one.term), 0.0);
}

TEST(CpttRankK, TermsAreStable) {
  std::mt19937_64 rng(49);
  for (Index k : {2u, 3u}) {
    const auto raw = oracle::random_cp(rng, {6, 5, 4, 5}, 5);
    const CpttRankKResult res = cptt_rankk(raw.tensor(), k);
    ASSERT_EQ(res.terms.size(), k);
    double parts = 0.0;
    for (const PureTensor& t : res.terms) parts += t.norm() * t.norm();
    const std::vector<double> ones(k, 1.0);
    const double whole = std::pow(norm(from_terms(raw.tensor().grid(), res.terms, ones)), 2);
    EXPECT_NEAR(whole, parts, 1e-10 * parts);
    // Split-mode factors are orthonormal.
    for (Index a = 0; a < k; ++a) {
      for (Index b = 0; b < k; ++b) {
        const double ip = res.terms[a].mode(res.split_mode).dot(res.terms[b].mode(res.split_mode));
        EXPECT_NEAR(ip, a == b ? 1.0 : 0.0, 1e-12);
      }
    }
  }
}

TEST(CpttRankK, ResidualMatchesDenseOracle) {
  std::mt19937_64 rng(50);
  const auto raw = oracle::random_cp(rng, {6, 6, 6}, 4);
  const CpttRankKResult res = cptt_rankk(raw.tensor(), 2);
  const double dense = dense_residual(raw, res.terms);
  CpTensor residual = raw.tensor();
  for (const PureTensor& t : res.terms) residual = axpy(-1.0, t.to_cp(), residual);
  EXPECT_NEAR(stable_norm(residual), dense, 1e-10 * norm(raw.tensor()));
  EXPECT_NEAR(res.predicted_residual_sq, dense * dense, 1e-8 * dense * dense);
}

TEST(CpttRankK, BranchesAreIndependent) {
  std::mt19937_64 rng(51);
  const CpTensor f = oracle::random_tensor(rng, {5, 6, 4}, 4);
  const CpttRankKResult res = cptt_rankk(f, 3);
  for (Index j = 3; j-- > 0;) {
    const Vector u = res.terms[j].mode(res.split_mode);
    const CpttResult branch = cptt_branch(f, res.split_mode, u);
    EXPECT_EQ(distance(branch.term, res.terms[j]), 0.0);
  }
}

TEST(CpttRankK, RangeChecks) {
  std::mt19937_64 rng(52);
  const CpTensor f = oracle::random_tensor(rng, {5, 2, 4}, 4);
  EXPECT_THROW(cptt_rankk(f, 0), ArgumentError);
  EXPECT_THROW(cptt_rankk(f, 3), ArgumentError);
  EXPECT_NO_THROW(cptt_rankk(f, 2));
  EXPECT_THROW(cptt_branch(f, 0, Vector::Ones(4)), DimensionError);
}

}  // namespace
