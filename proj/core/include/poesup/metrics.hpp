#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "poesup/dataset.hpp"

namespace poesup {

/// MCI is the positive class: tp counts MCI samples predicted MCI.
struct ConfusionMatrix {
  std::int64_t tp = 0;
  std::int64_t tn = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + tn + fp + fn; }
  void add(CognitiveLabel truth, CognitiveLabel predicted);
  ConfusionMatrix& operator+=(const ConfusionMatrix& o);
  bool operator==(const ConfusionMatrix&) const = default;
};

/// nullopt marks a metric whose denominator is zero ("n/a" in reports).
struct MetricSet {
  std::optional<double> sensitivity;  // TP / (TP + FN)
  std::optional<double> specificity;  // TN / (TN + FP)
  std::optional<double> precision;    // TP / (TP + FP)
  std::optional<double> uar;          // (specificity + sensitivity) / 2
  std::optional<double> f1;           // 2 precision sensitivity / (precision + sensitivity)

  bool operator==(const MetricSet&) const = default;
};

MetricSet compute_metrics(const ConfusionMatrix& cm);

enum class Subgroup { Both, En, Zh, M, F };
inline constexpr std::array<Subgroup, 5> kAllSubgroups = {Subgroup::Both, Subgroup::En, Subgroup::Zh,
                                                         Subgroup::M, Subgroup::F};

std::string_view to_string(Subgroup g);
/// Throws InputError on an unknown key.
Subgroup parse_subgroup(std::string_view key);
bool in_subgroup(const Sample& s, Subgroup g);

struct Prediction {
  std::string sample_id;
  int fold = 0;
  CognitiveLabel truth = CognitiveLabel::NC;
  CognitiveLabel predicted = CognitiveLabel::NC;
  double prob_mci = 0.0;

  bool operator==(const Prediction&) const = default;
};

struct SubgroupMetrics {
  Subgroup subgroup = Subgroup::Both;
  std::int64_t size = 0;
  ConfusionMatrix counts;
  MetricSet metrics;

  bool operator==(const SubgroupMetrics&) const = default;
};

/// Metrics over the predictions whose sample falls in the subgroup. Throws
/// InputError if a prediction names a sample absent from `ds`.
SubgroupMetrics subgroup_metrics(std::span<const Prediction> predictions, const Dataset& ds, Subgroup g);
SubgroupMetrics subgroup_metrics(std::span<const Prediction> predictions, const Dataset& ds,
                                 std::string_view subgroup_key);

}  // namespace poesup
