#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "poesup/config.hpp"
#include "poesup/dataset.hpp"

namespace poesup {

/// Train and validation positions into Dataset::samples, each sorted ascending.
struct FoldSplit {
  int fold_index = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Deterministic stratified k-fold partition.
///
/// Units are samples, or participants when cfg.group_by_participant is set (a
/// participant's stratum comes from its first sample). Within each stratum the
/// units are shuffled with the seed and dealt round-robin, and the dealing
/// position carries over from one stratum to the next. Per-stratum counts per
/// fold therefore differ by at most one, and so do total fold sizes when units
/// are samples.
///
/// Throws InputError if any stratum has fewer than k_folds units.
std::vector<FoldSplit> stratified_kfold(const Dataset& ds, const ExperimentConfig& cfg);

std::vector<std::string> sample_ids(const Dataset& ds, const std::vector<std::size_t>& positions);

}  // namespace poesup
