#include <benchmark/benchmark.h>

#include <random>

#include "maxk/cbsr.hpp"
#include "maxk/kernels.hpp"
#include "maxk/partition.hpp"
#include "support/oracle.hpp"

using namespace maxk;

namespace {

constexpr std::size_t kNodes = 4096;
constexpr std::size_t kMaxDegree = 32;
constexpr std::size_t kDimOrigin = 256;

struct Problem {
  CsrGraph g;
  Matrix<float> x;
  Matrix<float> dxl;
};

const Problem& problem() {
  static const Problem p = [] {
    std::mt19937_64 rng(42);
    Problem out;
    out.g = oracle::random_degree_graph(kNodes, kMaxDegree, rng);
    out.x = oracle::random_matrix<float>(kNodes, kDimOrigin, rng);
    out.dxl = oracle::random_matrix<float>(kNodes, kDimOrigin, rng);
    return out;
  }();
  return p;
}

ExecOptions options(std::int64_t mode) {
  ExecOptions o;
  o.mode = mode == 0 ? ExecMode::deterministic : ExecMode::parallel;
  return o;
}

void set_edges(benchmark::State& state, std::size_t width) {
  const auto edges = static_cast<std::int64_t>(problem().g.num_edges());
  state.SetItemsProcessed(state.iterations() * edges);
  state.counters["row_width"] = static_cast<double>(width);
}

void BM_DenseSpmm(benchmark::State& state) {
  const Problem& p = problem();
  for (auto _ : state) benchmark::DoNotOptimize(dense_spmm(p.g, p.x));
  set_edges(state, kDimOrigin);
}

void BM_SpgemmForward(benchmark::State& state) {
  const Problem& p = problem();
  const auto k = static_cast<std::size_t>(state.range(0));
  const CbsrMatrix xs = maxk_forward(p.x, k).cbsr;
  const EdgeGroupPlan plan = build_plan(p.g, k);
  const ExecOptions o = options(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(spgemm_forward(p.g, xs, plan, o));
  set_edges(state, k);
}

void BM_SspmmBackward(benchmark::State& state) {
  const Problem& p = problem();
  const auto k = static_cast<std::size_t>(state.range(0));
  const CbsrMatrix xs = maxk_forward(p.x, k).cbsr;
  const EdgeGroupPlan plan = build_plan(p.g, k);
  const ExecOptions o = options(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(sspmm_backward(p.g, p.dxl, xs, plan, o));
  set_edges(state, k);
}

void BM_MaxkForward(benchmark::State& state) {
  const Problem& p = problem();
  const auto k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(maxk_forward(p.x, k));
}

void kernel_args(benchmark::internal::Benchmark* b) {
  b->ArgNames({"k", "parallel"});
  for (std::int64_t k : {8, 16, 32, 64, 128}) {
    for (std::int64_t mode : {0, 1}) b->Args({k, mode});
  }
}

}  // namespace

BENCHMARK(BM_DenseSpmm)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SpgemmForward)->Apply(kernel_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SspmmBackward)->Apply(kernel_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MaxkForward)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
