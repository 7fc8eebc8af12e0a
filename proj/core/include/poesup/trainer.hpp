#pragma once

#include <string>
#include <vector>

#include "poesup/adam.hpp"
#include "poesup/checkpoint.hpp"
#include "poesup/config.hpp"
#include "poesup/dataset.hpp"
#include "poesup/kfold.hpp"
#include "poesup/pipeline.hpp"
#include "poesup/report.hpp"

namespace poesup {

struct TrainedFold {
  FoldReport report;
  MultimodalModel model;
  AdamState optimizer;
};

/// Trains fresh heads on split.train for cfg.epochs epochs and evaluates the
/// final-epoch model on split.validation.
///
/// Each epoch reshuffles the training positions (seeded by cfg.seed and the
/// fold index) and walks them in batches of cfg.batch_size, keeping the last
/// partial batch. A non-finite objective throws NumericError naming the
/// epoch, batch and loss components.
TrainedFold train_fold(const Dataset& ds, const FoldSplit& split, const ExperimentConfig& cfg);

/// Everything the optimizer touches, as named tensors: parameters, then Adam
/// first and second moments (suffixes ".adam_m" / ".adam_v").
Checkpoint make_checkpoint(const TrainedFold& fold, bool with_projection);

struct RunOptions {
  /// Folds trained concurrently; 0 means one thread per fold.
  unsigned jobs = 0;
  std::string label;
  /// When set, receives one checkpoint per fold, in fold order.
  std::vector<Checkpoint>* checkpoints = nullptr;
};

/// Cross-validated run: splits, trains every fold and aggregates metrics per
/// subgroup. The result depends only on the dataset and config, never on `jobs`.
RunReport run_experiment(const Dataset& ds, const ExperimentConfig& cfg, const RunOptions& opts = {});

}  // namespace poesup
