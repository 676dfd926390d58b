#include <benchmark/benchmark.h>

#include "openpref/belief.hpp"
#include "openpref/query_optimizer.hpp"

using namespace openpref;

namespace {

BeliefState prior(std::size_t particles) {
  PriorConfig c;
  c.particles = particles;
  return init_prior(10, c, prior_seed(1));
}

void BM_SelectOptimalQuery(benchmark::State& state) {
  const auto belief = prior(static_cast<std::size_t>(state.range(0)));
  const auto space = enumerate_queries(10, 2);
  for (auto _ : state) benchmark::DoNotOptimize(select_optimal_query(belief, space));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(space.size()));
}
BENCHMARK(BM_SelectOptimalQuery)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_PosteriorUpdate(benchmark::State& state) {
  const auto belief = prior(static_cast<std::size_t>(state.range(0)));
  const auto space = enumerate_queries(10, 2);
  UpdateConfig uc;
  uc.mode = static_cast<ResampleMode>(state.range(1));
  std::uint64_t t = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(posterior_update(belief, space.queries()[t % space.size()], Choice::a(), update_seed(1, t++), uc));
}
BENCHMARK(BM_PosteriorUpdate)
    ->Args({1000, static_cast<int>(ResampleMode::gaussian_refit)})
    ->Args({1000, static_cast<int>(ResampleMode::importance_only)})
    ->Unit(benchmark::kMicrosecond);

void BM_EnumerateQueries(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_queries(10, 2));
}
BENCHMARK(BM_EnumerateQueries);

}  // namespace
BENCHMARK_MAIN();
