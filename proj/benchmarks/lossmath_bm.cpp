#include <benchmark/benchmark.h>

#include "fishforge/lossmath.hpp"
#include "fishforge/rng.hpp"

namespace {

using fishforge::Matrix;

Matrix random_matrix(fishforge::Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

// Batch of N pairs with 64-d projections.
void BM_NtXent(benchmark::State& state) {
  const auto n = state.range(0);
  fishforge::Rng rng(1);
  const Matrix z = random_matrix(rng, 2 * n, 64);
  for (auto _ : state) {
    auto r = fishforge::nt_xent(z, 0.05);
    benchmark::DoNotOptimize(r.loss);
  }
  state.SetItemsProcessed(state.iterations() * 2 * n);
}
BENCHMARK(BM_NtXent)->RangeMultiplier(2)->Range(8, 128);

void BM_JointLoss(benchmark::State& state) {
  const auto n = state.range(0);
  fishforge::Rng rng(2);
  const Matrix z = random_matrix(rng, 2 * n, 64);
  const Matrix logits = random_matrix(rng, 2 * n, 3);
  std::vector<int> labels(2 * n);
  for (auto i = 0; i < 2 * n; ++i) labels[i] = (i / 2) % 3;
  const fishforge::LossConfig cfg;
  for (auto _ : state) {
    auto r = fishforge::joint_loss(z, logits, labels, cfg);
    benchmark::DoNotOptimize(r.total);
  }
  state.SetItemsProcessed(state.iterations() * 2 * n);
}
BENCHMARK(BM_JointLoss)->RangeMultiplier(2)->Range(8, 128);

}  // namespace
