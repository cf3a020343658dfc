#include <benchmark/benchmark.h>

#include "fishforge/lossmath.hpp"
#include "fishforge/network.hpp"

namespace {

using fishforge::Matrix;

// One training step of the default architecture on 2N views, without the
// optimizer update.
void BM_ForwardBackward(benchmark::State& state) {
  const auto views = state.range(0);
  const fishforge::Architecture arch;
  fishforge::Rng rng(3);
  const fishforge::Network net(arch, rng);
  Matrix x(views, arch.input_dim());
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
  std::vector<int> labels(views);
  for (auto i = 0; i < views; ++i) labels[i] = (i / 2) % 3;
  const fishforge::LossConfig cfg;
  for (auto _ : state) {
    fishforge::Rng drop(4);
    const auto pass = net.forward(x, fishforge::RunMode::kTrain, &drop);
    const auto loss = fishforge::joint_loss(pass.projection, pass.logits, labels, cfg);
    auto grad = net.backward(pass, loss.grad_z, loss.grad_logits, true);
    benchmark::DoNotOptimize(grad);
  }
  state.SetItemsProcessed(state.iterations() * views);
}
BENCHMARK(BM_ForwardBackward)->Arg(32)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_EvalForward(benchmark::State& state) {
  const auto rows = state.range(0);
  const fishforge::Architecture arch;
  fishforge::Rng rng(5);
  const fishforge::Network net(arch, rng);
  Matrix x(rows, arch.input_dim());
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
  for (auto _ : state) {
    auto pass = net.forward(x, fishforge::RunMode::kEval, nullptr, false, true);
    benchmark::DoNotOptimize(pass.logits);
  }
  state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(BM_EvalForward)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace
