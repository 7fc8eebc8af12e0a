#include <benchmark/benchmark.h>

#include "poesup/kfold.hpp"
#include "poesup/synth.hpp"
#include "poesup/trainer.hpp"

namespace {

using namespace poesup;

// One epoch on one fold of the full-size synthetic corpus (384/64/768/512 dims).
void BM_TrainEpoch(benchmark::State& state) {
  const Dataset ds = generate_synthetic(SynthConfig{});
  ExperimentConfig cfg;
  cfg.epochs = 1;
  cfg.fusion = state.range(0) == 0 ? Fusion::Concat : Fusion::PoE;
  cfg.use_cl = state.range(1) != 0;
  const FoldSplit split = stratified_kfold(ds, cfg).front();
  for (auto _ : state) {
    TrainedFold fold = train_fold(ds, split, cfg);
    benchmark::DoNotOptimize(fold.report.epoch_losses.data());
  }
}
BENCHMARK(BM_TrainEpoch)->ArgNames({"poe", "cl"})->Args({0, 0})->Args({0, 1})->Args({1, 1})->Unit(benchmark::kMillisecond);

}  // namespace
