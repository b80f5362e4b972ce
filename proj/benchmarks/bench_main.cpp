#include <benchmark/benchmark.h>

#include "mecopt/optimizer.hpp"
#include "mecopt/prompting.hpp"
#include "mecopt/scenario.hpp"
#include "mecopt/solvers.hpp"

namespace {

using namespace mecopt;

LatencyMatrix physical(std::size_t m, std::size_t n) {
  PhysicalSpec spec;
  spec.num_servers = m;
  spec.num_users = n;
  spec.seed = 1;
  return Scenario::from_physical("bench", spec).matrix();
}

void BM_BruteForce(benchmark::State& state) {
  const auto L = physical(3, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(brute_force(L));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(*index_space_size(3, L.num_users())));
}
BENCHMARK(BM_BruteForce)->Arg(3)->Arg(6)->Arg(9)->Arg(12);

void BM_GeneticDefault(benchmark::State& state) {
  const auto L = reference_matrix_balanced();
  GAConfig cfg;
  for (auto _ : state) {
    cfg.seed++;
    benchmark::DoNotOptimize(ga_run(L, cfg));
  }
}
BENCHMARK(BM_GeneticDefault);

void BM_BuildPrompt(benchmark::State& state) {
  const auto L = physical(3, 6);
  ObservationBuffer buf;
  for (std::uint64_t s = 0; s < 20; ++s) record(buf, decode_index({s * 31}, 3, 6), L);
  for (auto _ : state) benchmark::DoNotOptimize(build_prompt(L, buf, 5));
}
BENCHMARK(BM_BuildPrompt);

void BM_ParseResponse(benchmark::State& state) {
  const std::string reply =
      "Allocation: [3, 1, 2, 1, 1, 2]\nAllocation: [1, 2, 3, 3, 2, 1]\nallocation: [4, 1]\n"
      "Some prose.\nAllocation: [2, 2, 2, 1, 1, 1]\nAllocation: [3, 3, 3, 3, 3, 3]\n";
  for (auto _ : state) benchmark::DoNotOptimize(parse_response(reply, 3, 6, 5));
}
BENCHMARK(BM_ParseResponse);

void BM_HeuristicLoop(benchmark::State& state) {
  const auto L = reference_matrix_balanced();
  LoopConfig cfg;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    HeuristicBackend b(seed++);
    benchmark::DoNotOptimize(optimize(L, b, cfg));
  }
}
BENCHMARK(BM_HeuristicLoop);

}  // namespace

BENCHMARK_MAIN();
