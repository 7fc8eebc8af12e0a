#include <benchmark/benchmark.h>

#include "poesup/fusion.hpp"
#include "poesup/losses.hpp"
#include "poesup/model.hpp"
#include "poesup/rng.hpp"

namespace {

using namespace poesup;

Matrix random_matrix(Rng& rng, Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

void BM_Matmul(benchmark::State& state) {
  const Index n = state.range(0);
  Rng rng(1);
  const Matrix a = random_matrix(rng, 16, n);
  const Matrix b = random_matrix(rng, n, 256);
  for (auto _ : state) {
    Matrix c = a * b;
    benchmark::DoNotOptimize(c.data());
  }
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(384)->Arg(768);

void BM_SupCon(benchmark::State& state) {
  const Index n = state.range(0);
  Rng rng(2);
  const Matrix h = normalize_rows(random_matrix(rng, n, 128)).unit;
  std::vector<int> ids(static_cast<std::size_t>(n));
  for (int& id : ids) id = 1 + static_cast<int>(rng.below(6));
  for (auto _ : state) {
    LossAndGrad r = supcon_loss({h, ids, 0.07, SupConVariant::Standard});
    benchmark::DoNotOptimize(r.loss);
  }
}
BENCHMARK(BM_SupCon)->Arg(16)->Arg(64)->Arg(256);

void BM_PoeFuse(benchmark::State& state) {
  Rng rng(3);
  std::vector<Matrix> experts;
  for (int e = 0; e < 4; ++e) experts.push_back(random_matrix(rng, 16, 2));
  for (auto _ : state) {
    FusedLogits f = poe_fuse(experts);
    benchmark::DoNotOptimize(f.fused.data());
  }
}
BENCHMARK(BM_PoeFuse);

void BM_FfnForwardBackward(benchmark::State& state) {
  const Index in = state.range(0);
  Rng rng(4);
  const FfnHead head = FfnHead::he_init("bench", {in, 256, 2, 128}, rng);
  const Matrix x = random_matrix(rng, 16, in);
  const Matrix d_logits = random_matrix(rng, 16, 2);
  const Matrix d_proj = random_matrix(rng, 16, 128);
  for (auto _ : state) {
    const FfnForward fwd = ffn_forward(head, x);
    FfnGradients g = ffn_backward(head, fwd.cache, d_logits, &d_proj);
    benchmark::DoNotOptimize(g.w1.data());
  }
}
BENCHMARK(BM_FfnForwardBackward)->Arg(64)->Arg(768)->Arg(1728);

}  // namespace
BENCHMARK_MAIN();
