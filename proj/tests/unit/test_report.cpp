#include <gtest/gtest.h>

#include "poesup/report.hpp"
#include "poesup/synth.hpp"
#include "poesup/trainer.hpp"
#include "test_support.hpp"

namespace poesup {
namespace {

using testing::small_synth;

RunReport two_fold_report() {
  RunReport r;
  r.label = "demo";
  for (int f = 0; f < 2; ++f) {
    FoldReport fold;
    fold.fold_index = f;
    for (Subgroup g : kAllSubgroups) {
      SubgroupMetrics sm;
      sm.subgroup = g;
      sm.counts = f == 0 ? ConfusionMatrix{.tp = 3, .tn = 2, .fp = 2, .fn = 1}
                         : ConfusionMatrix{.tp = 4, .tn = 4, .fp = 0, .fn = 0};
      if (g == Subgroup::Zh && f == 1) sm.counts = {.tp = 0, .tn = 3, .fp = 0, .fn = 0};
      sm.size = sm.counts.total();
      sm.metrics = compute_metrics(sm.counts);
      fold.subgroups.push_back(sm);
    }
    fold.separability = f == 0 ? std::optional<double>(0.2) : std::nullopt;
    r.folds.push_back(fold);
  }
  return r;
}

TEST(Aggregate, MeanOfFoldMetricsSkippingUndefined) {
  RunReport r = two_fold_report();
  aggregate_folds(r, Aggregation::Mean);
  EXPECT_NEAR(*r.summary(Subgroup::Both).metrics.uar, (0.625 + 1.0) / 2.0, 1e-15);
  EXPECT_EQ(r.summary(Subgroup::Both).size, 16);
  // Fold 1 has no MCI in Zh: its UAR is undefined and skipped.
  EXPECT_NEAR(*r.summary(Subgroup::Zh).metrics.uar, 0.625, 1e-15);
  EXPECT_NEAR(*r.mean_separability, 0.2, 1e-15);
}

TEST(Aggregate, PooledCounts) {
  RunReport r = two_fold_report();
  aggregate_folds(r, Aggregation::Pooled);
  // tp 7, tn 6, fp 2, fn 1
  EXPECT_NEAR(*r.summary(Subgroup::Both).metrics.sensitivity, 7.0 / 8.0, 1e-15);
  EXPECT_NEAR(*r.summary(Subgroup::Both).metrics.specificity, 6.0 / 8.0, 1e-15);
}

TEST(Disparity, SubgroupGapFixtures) {
  EXPECT_NEAR(disparity(0.58, 0.834), 0.254, 1e-12);
  EXPECT_NEAR(disparity(0.785, 0.732), 0.053, 1e-12);
  EXPECT_EQ(disparity(0.7, 0.7), 0.0);
}

TEST(Disparity, FromReportAndUndefined) {
  RunReport r = two_fold_report();
  aggregate_folds(r, Aggregation::Mean);
  EXPECT_NEAR(disparity(r, DisparityAxis::Language),
              std::abs(*r.summary(Subgroup::En).metrics.uar - *r.summary(Subgroup::Zh).metrics.uar), 1e-15);
  r.aggregate[2].metrics.uar.reset();
  EXPECT_THROW(disparity(r, DisparityAxis::Language), std::domain_error);
}

TEST(ReportJson, RoundTripsLosslessly) {
  const Dataset ds = generate_synthetic(small_synth());
  ExperimentConfig cfg;
  cfg.k_folds = 3;
  cfg.epochs = 2;
  cfg.lr = 1e-3;
  cfg.hidden = 8;
  cfg.projection_dim = 4;
  const RunReport r = run_experiment(ds, cfg, {1, "roundtrip", nullptr});
  const std::string text = report_to_json(r);
  const RunReport back = report_from_json(text);
  EXPECT_EQ(back, r);
  EXPECT_EQ(report_to_json(back), text);
}

TEST(ReportJson, UndefinedMetricsAreNa) {
  RunReport r = two_fold_report();
  aggregate_folds(r, Aggregation::Mean);
  const std::string text = report_to_json(r);
  EXPECT_NE(text.find("\"n/a\""), std::string::npos);
  EXPECT_EQ(text.find("NaN"), std::string::npos);
  EXPECT_EQ(report_from_json(text), r);
}

TEST(ReportCsv, OneRowPerSubgroup) {
  RunReport r = two_fold_report();
  aggregate_folds(r, Aggregation::Mean);
  const std::string csv = reports_to_csv(std::span(&r, 1));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  EXPECT_EQ(csv.rfind("label,fusion,use_cl,use_image,subgroup,size,uar,f1", 0), 0u);
  EXPECT_NE(csv.find("demo,poe,true,true,Both,16,0.812500,"), std::string::npos) << csv;
}

TEST(ReportTsv, PerFoldUars) {
  RunReport r = two_fold_report();
  const std::string tsv = fold_uar_tsv(r);
  EXPECT_EQ(tsv.rfind("# fold\tBoth\tEn\tZh\tM\tF\n", 0), 0u);
  EXPECT_NE(tsv.find("1\t1.000000\t1.000000\tNaN\t"), std::string::npos) << tsv;
}

TEST(FormatMetric, NaAndPrecision) {
  EXPECT_EQ(format_metric(std::nullopt), "n/a");
  EXPECT_EQ(format_metric(0.5, 3), "0.500");
}

}  // namespace
}  // namespace poesup
