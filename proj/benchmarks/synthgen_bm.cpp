#include <benchmark/benchmark.h>

#include "fishforge/augment.hpp"
#include "fishforge/synthgen.hpp"

namespace {

void BM_GeneratePatch(benchmark::State& state) {
  fishforge::GenerationSpec spec;
  spec.counts = {1000, 1000, 1000};
  const fishforge::NucleusLibrary lib;
  std::int64_t index = 0;
  for (auto _ : state) {
    auto g = fishforge::generate_indexed(spec, lib, index);
    benchmark::DoNotOptimize(g.patch);
    index = (index + 1) % spec.total();
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_GeneratePatch)->Unit(benchmark::kMicrosecond);

void BM_AugmentPair(benchmark::State& state) {
  fishforge::GenerationSpec spec;
  const auto patch = fishforge::generate_indexed(spec, {}, 0).patch;
  const auto preset = fishforge::AugmentPreset::heavy();
  fishforge::Rng rng(6);
  for (auto _ : state) {
    auto views = fishforge::augment_pair(patch, preset, rng);
    benchmark::DoNotOptimize(views);
  }
  state.SetItemsProcessed(state.iterations() * 2);
}
BENCHMARK(BM_AugmentPair)->Unit(benchmark::kMicrosecond);

}  // namespace
