#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "cptt/baselines.hpp"
#include "cptt/bench.hpp"
#include "cptt/cptt_iteration.hpp"
#include "cptt/greedy.hpp"
#include "cptt/unfolding_pod.hpp"

namespace {

using namespace cptt;

// Gaussian CP tensor with d modes of size n and the given rank.
CpTensor gaussian_cp(Index d, Index n, Index rank, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector w(rank);
  for (auto& x : w) x = normal(rng);
  std::vector<Matrix> factors;
  for (Index k = 0; k < d; ++k) {
    Matrix f(n, rank);
    for (Eigen::Index j = 0; j < f.size(); ++j) f.data()[j] = normal(rng);
    factors.push_back(std::move(f));
  }
  return CpTensor(Grid(std::vector<Index>(static_cast<std::size_t>(d), n)), std::move(w),
                  std::move(factors));
}

void BM_UnfoldingPodDirect(benchmark::State& state) {
  const CpTensor a = gaussian_cp(4, state.range(0), state.range(1), 1);
  for (auto _ : state) benchmark::DoNotOptimize(unfolding_pod(a, 0, 1, PodPath::Direct));
}
BENCHMARK(BM_UnfoldingPodDirect)->Args({25, 50})->Args({25, 200});

void BM_UnfoldingPodFiber(benchmark::State& state) {
  const CpTensor a = gaussian_cp(4, state.range(0), state.range(1), 1);
  for (auto _ : state) benchmark::DoNotOptimize(unfolding_pod(a, 0, 1, PodPath::Fiber));
}
BENCHMARK(BM_UnfoldingPodFiber)->Args({25, 50})->Args({25, 200});

void BM_CpttRank1(benchmark::State& state) {
  const CpTensor a = gaussian_cp(state.range(0), 25, 100, 2);
  for (auto _ : state) benchmark::DoNotOptimize(cptt_rank1(a));
}
BENCHMARK(BM_CpttRank1)->Arg(4)->Arg(12);

void BM_AlsRank1(benchmark::State& state) {
  const CpTensor a = gaussian_cp(state.range(0), 25, 100, 3);
  const FixedPointConfig cfg{1e-4, 100, true, 7};
  for (auto _ : state) benchmark::DoNotOptimize(als_rank1(a, cfg));
}
BENCHMARK(BM_AlsRank1)->Arg(4)->Arg(12);

void BM_AsvdRank1(benchmark::State& state) {
  const CpTensor a = gaussian_cp(state.range(0), 25, 100, 4);
  const FixedPointConfig cfg{1e-4, 100, false, 7};
  for (auto _ : state) benchmark::DoNotOptimize(asvd_rank1(a, cfg));
}
BENCHMARK(BM_AsvdRank1)->Arg(4)->Arg(12);

void BM_GreedyTenTerms(benchmark::State& state) {
  const CpTensor a = gaussian_cp(6, 20, 60, 5);
  GreedyConfig cfg;
  cfg.method = static_cast<Method>(state.range(0));
  cfg.target_rank = 10;
  cfg.solver.relaxed = true;
  state.SetLabel(std::string(to_string(cfg.method)));
  for (auto _ : state) benchmark::DoNotOptimize(greedy_decompose(a, cfg));
}
BENCHMARK(BM_GreedyTenTerms)
    ->Arg(static_cast<int>(Method::ALS))
    ->Arg(static_cast<int>(Method::ASVD))
    ->Arg(static_cast<int>(Method::CPTT))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
