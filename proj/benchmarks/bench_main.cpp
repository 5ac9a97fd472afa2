#include <benchmark/benchmark.h>

#include "concgraph/concurrence.hpp"
#include "concgraph/readout.hpp"
#include "concgraph/symmetry.hpp"

using namespace concgraph;

namespace {

EdgeWorld edge_world(int side) {
  WorldConfig c;
  c.width = c.height = side;
  c.seed = 1;
  return EdgeWorld(c);
}

}  // namespace

static void BM_EdgeDraw(benchmark::State& state) {
  const auto w = edge_world(static_cast<int>(state.range(0)));
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(w.draw(i++));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_EdgeDraw)->Arg(8)->Arg(16)->Arg(32);

static void BM_Record(benchmark::State& state) {
  const auto w = edge_world(16);
  std::vector<Observation> stream;
  for (std::uint64_t i = 0; i < 1000; ++i) stream.push_back(w.draw(i));
  for (auto _ : state) {
    ConcurrenceGraph g(w.n());
    g.record(stream);
    benchmark::DoNotOptimize(g.total());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(stream.size()));
}
BENCHMARK(BM_Record);

static void BM_Accumulate(benchmark::State& state) {
  const auto w = edge_world(16);
  const auto shards = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(accumulate(w, 0, 10'000, shards).total());
  state.SetItemsProcessed(state.iterations() * 10'000);
}
BENCHMARK(BM_Accumulate)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_Distortion(benchmark::State& state) {
  const auto w = edge_world(static_cast<int>(state.range(0)));
  const GraphView v(accumulate(w, 0, 10'000, 4));
  const auto rot = w.rotation90();
  for (auto _ : state) benchmark::DoNotOptimize(distortion(v, rot));
}
BENCHMARK(BM_Distortion)->Arg(8)->Arg(16)->Arg(32);

static void BM_Null(benchmark::State& state) {
  const auto w = edge_world(16);
  const GraphView v(accumulate(w, 0, 10'000, 4));
  for (auto _ : state) benchmark::DoNotOptimize(random_permutation_null(v, {}, 100, 7).quantile(0.01));
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_Null)->Unit(benchmark::kMillisecond);

static void BM_LocalSearch(benchmark::State& state) {
  WorldConfig c;
  c.width = c.height = 16;
  c.toroidal = true;
  c.invariances = {Invariance::rotation90, Invariance::translation};
  c.seed = 2;
  const EdgeWorld w(c);
  const GraphView v(accumulate(w, 0, 30'000, 4));
  const auto rot = w.rotation90();
  std::vector<SeedPair> set;
  for (NodeId u : {w.node(0, 8, 8, 0), w.node(0, 8, 8, 1), w.node(0, 10, 9, 0)}) set.push_back({u, rot[u]});
  const std::vector<std::vector<SeedPair>> seeds{set};
  LocalSearchOptions opt;
  opt.tolerance = 0.3;
  for (auto _ : state) benchmark::DoNotOptimize(local_search(v, seeds, opt).candidates.size());
}
BENCHMARK(BM_LocalSearch)->Unit(benchmark::kMillisecond);

static void BM_ReadoutSweep(benchmark::State& state) {
  const auto r = make_line_retina(64);
  const GraphView v(r.graph);
  const auto [first, second] = r.h_detectors();
  const std::vector<TemplateDetector> templates{first, second};
  PropagateOptions opt;
  opt.max_steps = 64;
  for (auto _ : state) {
    for (int x = 0; x <= r.last_anchor(); ++x) {
      benchmark::DoNotOptimize(propagate(v, std::span(&r.shift, 1), r.letter_h(x), templates, opt).arrivals.size());
    }
  }
}
BENCHMARK(BM_ReadoutSweep)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
