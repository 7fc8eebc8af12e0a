#include "poesup/kfold.hpp"

#include <algorithm>
#include <map>

#include "poesup/errors.hpp"
#include "poesup/rng.hpp"

namespace poesup {
namespace {

std::string stratum_key(const Sample& s, StratifyBy by) {
  std::string key(to_string(s.label));
  if (by == StratifyBy::LabelAndLanguage) key += "/" + std::string(to_string(s.language));
  return key;
}

}  // namespace

std::vector<FoldSplit> stratified_kfold(const Dataset& ds, const ExperimentConfig& cfg) {
  const int k = cfg.k_folds;
  if (k < 2) throw InputError("stratified_kfold: k_folds must be >= 2");

  // unit -> member sample positions; units keep first-appearance order.
  std::vector<std::vector<std::size_t>> units;
  if (cfg.group_by_participant) {
    std::map<std::string, std::size_t> unit_of;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
      const auto [it, inserted] = unit_of.emplace(ds.samples[i].participant_id, units.size());
      if (inserted) units.emplace_back();
      units[it->second].push_back(i);
    }
  } else {
    for (std::size_t i = 0; i < ds.samples.size(); ++i) units.push_back({i});
  }

  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t u = 0; u < units.size(); ++u) {
    strata[stratum_key(ds.samples[units[u].front()], cfg.stratify_by)].push_back(u);
  }
  for (const auto& [key, members] : strata) {
    if (members.size() < static_cast<std::size_t>(k)) {
      throw InputError("stratified_kfold: stratum " + key + " has " + std::to_string(members.size()) +
                       (cfg.group_by_participant ? " participants" : " samples") + ", fewer than k_folds=" +
                       std::to_string(k));
    }
  }

  std::vector<int> fold_of_unit(units.size(), 0);
  const Rng root = Rng(cfg.seed).split("kfold");
  std::size_t dealt = 0;
  for (auto& [key, members] : strata) {
    Rng rng = root.split(key);
    rng.shuffle(std::span(members));
    for (std::size_t u : members) fold_of_unit[u] = static_cast<int>(dealt++ % static_cast<std::size_t>(k));
  }

  std::vector<FoldSplit> folds(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) folds[static_cast<std::size_t>(f)].fold_index = f;
  for (std::size_t u = 0; u < units.size(); ++u) {
    for (std::size_t i : units[u]) {
      for (int f = 0; f < k; ++f) {
        auto& fold = folds[static_cast<std::size_t>(f)];
        (f == fold_of_unit[u] ? fold.validation : fold.train).push_back(i);
      }
    }
  }
  for (auto& fold : folds) {
    std::sort(fold.train.begin(), fold.train.end());
    std::sort(fold.validation.begin(), fold.validation.end());
  }
  return folds;
}

std::vector<std::string> sample_ids(const Dataset& ds, const std::vector<std::size_t>& positions) {
  std::vector<std::string> out;
  out.reserve(positions.size());
  for (std::size_t i : positions) out.push_back(ds.samples.at(i).sample_id);
  return out;
}

}  // namespace poesup
