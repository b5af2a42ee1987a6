#include <benchmark/benchmark.h>

#include "dsmfuse/fusion.hpp"
#include "dsmfuse/synth.hpp"

using namespace dsmfuse;

namespace {

struct Stack {
  DepthStack stack;
  RasterGrid ortho;
};

Stack make_stack(int n, int layers) {
  SceneSpec spec;
  spec.seed = 1;
  spec.width = spec.height = n;
  spec.intensity_noise = 4.0;
  spec.buildings = {{n / 4, n / 4, n / 3, n / 5, 18.0, 220.0}, {n / 2, n / 2, n / 4, n / 3, 9.0, 40.0}};
  const Scene scene = gen_scene(spec);
  std::vector<RasterGrid> grids;
  for (int i = 0; i < layers; ++i) {
    DegradeSpec d;
    d.seed = 10 + i;
    d.gaussian_sigma = 0.5;
    d.spike_prob = 0.05;
    d.spike_amp = 10.0;
    d.hole_prob = 0.02;
    grids.push_back(degrade(scene.truth, d));
  }
  return {DepthStack(std::move(grids)), scene.ortho};
}

void BM_AdaptiveReference(benchmark::State& state) {
  const Stack s = make_stack(static_cast<int>(state.range(0)), 5);
  const FusionConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference::adaptive_median_fuse(s.stack, s.ortho, cfg));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_AdaptiveParallel(benchmark::State& state) {
  const Stack s = make_stack(static_cast<int>(state.range(0)), 5);
  const FusionConfig cfg;
  const int jobs = static_cast<int>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(adaptive_median_fuse(s.stack, s.ortho, cfg, jobs));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_MedianReference(benchmark::State& state) {
  const Stack s = make_stack(static_cast<int>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(reference::median_fuse(s.stack));
}

void BM_MedianParallel(benchmark::State& state) {
  const Stack s = make_stack(static_cast<int>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(median_fuse(s.stack, static_cast<int>(state.range(1))));
}

}  // namespace

BENCHMARK(BM_AdaptiveReference)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AdaptiveParallel)
    ->ArgsProduct({{256, 512}, {1, 2, 4}})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MedianReference)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MedianParallel)->ArgsProduct({{512}, {1, 4}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
