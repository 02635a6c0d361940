#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "cptt/greedy.hpp"
#include "dense_oracle.hpp"

namespace {

using namespace cptt;

constexpr Method kMethods[] = {Method::ALS, Method::ASVD, Method::CPTT};

oracle::Dense dense_residual(const oracle::RawCp& raw, const GreedyTrace& trace,
                             const GreedyStep& step) {
  oracle::Dense r = oracle::materialize(raw.dims, raw.weights, raw.factors);
  for (std::size_t l = 0; l < step.rank(); ++l) {
    const oracle::Dense t = oracle::materialize(trace.terms[l]);
    for (std::size_t i = 0; i < r.size(); ++i) r.values[i] -= step.coefficients[l] * t.values[i];
  }
  return r;
}

TEST(OptimizeCoefficients, SingleTermScale) {
  std::mt19937_64 rng(71);
  const CpTensor base = oracle::random_tensor(rng, {4, 3, 5}, 1);
  const PureTensor t(base.grid(), 1.0, base.term(0).modes());
  const CpTensor f = t.to_cp().scaled(3.0);
  const std::vector<PureTensor> terms = {t};
  const auto c = optimize_coefficients(terms, f);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_NEAR(c[0], 3.0, 1e-13);
}

TEST(OptimizeCoefficients, OrthogonalTermsAreIndependent) {
  std::mt19937_64 rng(72);
  const CpTensor f = oracle::random_tensor(rng, {4, 4, 4}, 3);
  const Grid& g = f.grid();
  std::vector<PureTensor> terms;
  for (Index i = 0; i < 3; ++i) {
    const Vector e = Vector::Unit(4, static_cast<Eigen::Index>(i));
    terms.emplace_back(g, 0.5 + static_cast<double>(i), std::vector<Vector>{e, e, e});
  }
  const auto c = optimize_coefficients(terms, f);
  for (Index l = 0; l < 3; ++l) {
    const double expected = inner(f, terms[l].to_cp()) / std::pow(terms[l].norm(), 2);
    EXPECT_NEAR(c[l], expected, 1e-12 * std::max(1.0, std::abs(expected)));
  }
}

TEST(OptimizeCoefficients, DuplicateTermsShareTheLoad) {
  std::mt19937_64 rng(73);
  const CpTensor f = oracle::random_tensor(rng, {5, 4, 3}, 3);
  const PureTensor t = oracle::random_tensor(rng, {5, 4, 3}, 1).term(0);
  const std::vector<PureTensor> terms = {t, t};
  const auto c = optimize_coefficients(terms, f);
  const double expected = inner(f, t.to_cp()) / std::pow(t.norm(), 2);
  EXPECT_NEAR(c[0] + c[1], expected, 1e-10 * std::max(1.0, std::abs(expected)));
  EXPECT_NEAR(c[0], c[1], 1e-10 * std::max(1.0, std::abs(expected)));  // minimum norm
}

TEST(OptimizeCoefficients, Idempotent) {
  std::mt19937_64 rng(74);
  const CpTensor f = oracle::random_tensor(rng, {5, 4, 3}, 6);
  GreedyConfig cfg;
  cfg.target_rank = 4;
  const GreedyResult res = greedy_decompose(f, cfg);
  const auto c1 = optimize_coefficients(res.trace.terms, f);
  std::vector<PureTensor> scaled;
  for (std::size_t l = 0; l < c1.size(); ++l) scaled.push_back(res.trace.terms[l].scaled(c1[l]));
  const auto c2 = optimize_coefficients(scaled, f);
  for (double x : c2) EXPECT_NEAR(x, 1.0, 1e-12);
}

TEST(Greedy, RankOneInputStopsAfterOneTerm) {
  std::mt19937_64 rng(75);
  const auto raw = oracle::random_cp(rng, {5, 6, 4}, 1);
  for (Method m : kMethods) {
    GreedyConfig cfg;
    cfg.method = m;
    cfg.target_rank = 5;
    const GreedyResult res = greedy_decompose(raw.tensor(), cfg);
    ASSERT_GE(res.trace.steps.size(), 1u);
    EXPECT_LE(res.trace.steps.front().rel_residual, 1e-10) << to_string(m);
    EXPECT_LE(res.trace.steps.size(), 2u);
  }
}

TEST(Greedy, TwoDimensionalCpttIsTruncatedSvd) {
  std::mt19937_64 rng(76);
  const auto raw = oracle::random_cp(rng, {9, 7}, 6);
  const oracle::Dense dense = oracle::materialize(raw.dims, raw.weights, raw.factors);
  const auto tails = oracle::svd_tails(oracle::singular_values(oracle::unfold(dense, 0)));
  GreedyConfig cfg;
  cfg.target_rank = 5;
  const GreedyResult res = greedy_decompose(raw.tensor(), cfg);
  ASSERT_EQ(res.trace.steps.size(), 5u);
  for (const GreedyStep& s : res.trace.steps) {
    EXPECT_NEAR(s.rel_residual, tails[s.rank()] / tails[0], 1e-8 * tails[s.rank()] / tails[0]);
  }
}

TEST(Greedy, MonotoneAndStationaryForEveryMethod) {
  std::mt19937_64 rng(77);
  const auto raw = oracle::random_cp(rng, {5, 5, 5, 5}, 12);
  const double fnorm = norm(raw.tensor());
  for (Method m : kMethods) {
    GreedyConfig cfg;
    cfg.method = m;
    cfg.target_rank = 15;
    cfg.solver.relaxed = m == Method::ALS;
    const GreedyResult res = greedy_decompose(raw.tensor(), cfg);
    double prev = 1.0;
    for (const GreedyStep& s : res.trace.steps) {
      EXPECT_LE(s.rel_residual, prev + 1e-10);
      prev = s.rel_residual;
      const oracle::Dense r = dense_residual(raw, res.trace, s);
      EXPECT_NEAR(oracle::norm(r) / fnorm, s.rel_residual, 1e-10);
      for (std::size_t l = 0; l < s.rank(); ++l) {
        const oracle::Dense t = oracle::materialize(res.trace.terms[l]);
        EXPECT_LE(std::abs(oracle::dot(r, t)) / oracle::norm(t), 1e-8 * fnorm);
      }
    }
    // The returned approximation uses the final coefficients.
    const oracle::Dense approx = oracle::materialize(res.approximation);
    const oracle::Dense f = oracle::materialize(raw.dims, raw.weights, raw.factors);
    EXPECT_NEAR(oracle::norm(oracle::minus(f, approx)) / fnorm, prev, 1e-10);
  }
}

TEST(Greedy, Deterministic) {
  std::mt19937_64 rng(78);
  const CpTensor f = oracle::random_tensor(rng, {5, 4, 6}, 8);
  for (Method m : kMethods) {
    GreedyConfig cfg;
    cfg.method = m;
    cfg.target_rank = 6;
    cfg.solver.rng_seed = 99;
    const GreedyResult a = greedy_decompose(f, cfg);
    const GreedyResult b = greedy_decompose(f, cfg);
    std::ostringstream sa, sb;
    write_trace_csv(a.trace, sa);
    write_trace_csv(b.trace, sb);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_EQ(serialize_cp(a.approximation), serialize_cp(b.approximation));
  }
}

TEST(Greedy, RankKUpdatesAddSeveralTermsJointly) {
  std::mt19937_64 rng(79);
  const auto raw = oracle::random_cp(rng, {6, 6, 6}, 10);
  GreedyConfig cfg;
  cfg.target_rank = 5;
  cfg.rank_k_update = 2;
  const GreedyResult res = greedy_decompose(raw.tensor(), cfg);
  ASSERT_EQ(res.trace.steps.size(), 3u);
  EXPECT_EQ(res.trace.steps[0].rank(), 2u);
  EXPECT_EQ(res.trace.steps[1].rank(), 4u);
  EXPECT_EQ(res.trace.steps[2].rank(), 5u);
  EXPECT_EQ(res.trace.steps[0].cptt.size(), 2u);
  const double fnorm = norm(raw.tensor());
  for (const GreedyStep& s : res.trace.steps) {
    const oracle::Dense r = dense_residual(raw, res.trace, s);
    for (std::size_t l = 0; l < s.rank(); ++l) {
      const oracle::Dense t = oracle::materialize(res.trace.terms[l]);
      EXPECT_LE(std::abs(oracle::dot(r, t)) / oracle::norm(t), 1e-8 * fnorm);
    }
  }
}

TEST(Greedy, RelativeToleranceStopsEarly) {
  std::mt19937_64 rng(80);
  const CpTensor f = oracle::random_tensor(rng, {6, 5}, 5);
  GreedyConfig cfg;
  cfg.target_rank = 5;
  cfg.rel_tol = 0.5;
  const GreedyResult res = greedy_decompose(f, cfg);
  ASSERT_FALSE(res.trace.steps.empty());
  EXPECT_LE(res.trace.steps.back().rel_residual, 0.5);
  for (std::size_t i = 0; i + 1 < res.trace.steps.size(); ++i) {
    EXPECT_GT(res.trace.steps[i].rel_residual, 0.5);
  }
}

TEST(Greedy, ZeroInputAndValidation) {
  const GreedyResult z = greedy_decompose(CpTensor(Grid({3, 3})), GreedyConfig{});
  EXPECT_TRUE(z.trace.steps.empty());
  EXPECT_FALSE(z.trace.note.empty());
  EXPECT_EQ(z.approximation.rank(), 0u);

  std::mt19937_64 rng(81);
  const CpTensor f = oracle::random_tensor(rng, {3, 3}, 2);
  GreedyConfig bad;
  bad.method = Method::ALS;
  bad.rank_k_update = 2;
  EXPECT_THROW(greedy_decompose(f, bad), ArgumentError);
  GreedyConfig zero_rank;
  zero_rank.target_rank = 0;
  EXPECT_THROW(greedy_decompose(f, zero_rank), ArgumentError);
  GreedyConfig neg_tol;
  neg_tol.rel_tol = -1;
  EXPECT_THROW(greedy_decompose(f, neg_tol), ArgumentError);
}

TEST(Greedy, ExactRepresentationEndsWithNote) {
  std::mt19937_64 rng(82);
  const CpTensor f = oracle::random_tensor(rng, {5, 5}, 2);
  GreedyConfig cfg;
  cfg.target_rank = 10;
  const GreedyResult res = greedy_decompose(f, cfg);
  EXPECT_EQ(res.trace.steps.size(), 2u);
  EXPECT_NE(res.trace.note.find("zero"), std::string::npos);
}

TEST(TraceCsv, Columns) {
  std::mt19937_64 rng(83);
  const CpTensor f = oracle::random_tensor(rng, {4, 5, 3}, 4);
  GreedyConfig cfg;
  cfg.target_rank = 2;
  std::ostringstream cptt_csv;
  write_trace_csv(greedy_decompose(f, cfg).trace, cptt_csv);
  std::istringstream in(cptt_csv.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "iter,method,rank,rel_residual,converged,order");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("1,cptt,1,", 0), 0u);
  const std::string order = line.substr(line.rfind(',') + 1);
  EXPECT_EQ(order.size(), 5u);  // e.g. "1-0-2"

  cfg.method = Method::ALS;
  std::ostringstream als_csv;
  write_trace_csv(greedy_decompose(f, cfg).trace, als_csv);
  EXPECT_NE(als_csv.str().find("\n1,als,1,"), std::string::npos);
  EXPECT_EQ(als_csv.str().substr(als_csv.str().size() - 2), ",\n");
}

TEST(Methods, ParseAndPrint) {
  EXPECT_EQ(parse_method("ALS"), Method::ALS);
  EXPECT_EQ(parse_method("asvd"), Method::ASVD);
  EXPECT_EQ(parse_method("CPTT"), Method::CPTT);
  EXPECT_THROW(parse_method("svd"), ArgumentError);
  for (Method m : kMethods) EXPECT_EQ(parse_method(to_string(m)), m);
}

TEST(FormatReal, RoundTrips) {
  std::mt19937_64 rng(84);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 100; ++i) {
    const double x = u(rng) * std::pow(10.0, i % 20 - 10);
    EXPECT_EQ(std::stod(format_real(x)), x);
  }
  EXPECT_EQ(format_real(0.25), "0.25");
}

}  // namespace
