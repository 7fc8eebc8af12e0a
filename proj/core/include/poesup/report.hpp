#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "poesup/config.hpp"
#include "poesup/metrics.hpp"

namespace poesup {

enum class Aggregation {
  /// Unweighted mean over folds of each fold's metric (folds where it is
  /// undefined are skipped; all undefined gives undefined).
  Mean,
  /// Metrics of the summed confusion counts.
  Pooled,
};

std::string_view to_string(Aggregation a);

struct FoldReport {
  int fold_index = 0;
  std::size_t train_size = 0;
  std::vector<std::string> validation_ids;
  /// Mean training objective per epoch.
  std::vector<double> epoch_losses;
  /// One entry per subgroup, in kAllSubgroups order.
  std::vector<SubgroupMetrics> subgroups;
  /// Picture silhouette of the contrastive representation on the validation rows.
  std::optional<double> separability;
  std::vector<Prediction> predictions;

  const SubgroupMetrics& subgroup(Subgroup g) const;
  bool operator==(const FoldReport&) const = default;
};

struct SubgroupSummary {
  Subgroup subgroup = Subgroup::Both;
  std::int64_t size = 0;
  MetricSet metrics;

  bool operator==(const SubgroupSummary&) const = default;
};

struct RunReport {
  std::string label;
  ExperimentConfig config;
  std::vector<FoldReport> folds;
  Aggregation aggregation = Aggregation::Mean;
  std::vector<SubgroupSummary> aggregate;
  std::optional<double> mean_separability;

  const SubgroupSummary& summary(Subgroup g) const;
  bool operator==(const RunReport&) const = default;
};

/// Fills report.aggregate and report.mean_separability from the folds.
void aggregate_folds(RunReport& report, Aggregation mode);

/// Recomputes every fold's subgroup metrics from its predictions, then aggregates.
void rescore(RunReport& report, const Dataset& ds, Aggregation mode);

std::string report_to_json(const RunReport& report);
RunReport report_from_json(std::string_view text);

/// One row per report x subgroup:
/// label,fusion,use_cl,use_image,subgroup,size,uar,f1,sensitivity,specificity,precision
std::string reports_to_csv(std::span<const RunReport> reports);

/// gnuplot-friendly: `fold<TAB>Both<TAB>En<TAB>Zh<TAB>M<TAB>F` with per-fold UARs.
std::string fold_uar_tsv(const RunReport& report);

/// Formats an optional metric as "n/a" or with `precision` decimals.
std::string format_metric(const std::optional<double>& v, int precision = 6);

enum class DisparityAxis { Language, Gender };

/// |UAR_a - UAR_b| between the two aggregate subgroups of the axis.
/// Throws std::domain_error if either UAR is undefined.
double disparity(const RunReport& report, DisparityAxis axis);
double disparity(double uar_a, double uar_b);

}  // namespace poesup
