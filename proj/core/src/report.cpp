#include "poesup/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "poesup/errors.hpp"

namespace poesup {
namespace {

using nlohmann::json;

json metric_json(const std::optional<double>& v) { return v ? json(*v) : json("n/a"); }

std::optional<double> metric_from_json(const json& v) {
  if (v.is_number()) return v.get<double>();
  return std::nullopt;
}

json metrics_json(const MetricSet& m) {
  return {{"sensitivity", metric_json(m.sensitivity)},
          {"specificity", metric_json(m.specificity)},
          {"precision", metric_json(m.precision)},
          {"uar", metric_json(m.uar)},
          {"f1", metric_json(m.f1)}};
}

MetricSet metrics_from_json(const json& j) {
  MetricSet m;
  m.sensitivity = metric_from_json(j.at("sensitivity"));
  m.specificity = metric_from_json(j.at("specificity"));
  m.precision = metric_from_json(j.at("precision"));
  m.uar = metric_from_json(j.at("uar"));
  m.f1 = metric_from_json(j.at("f1"));
  return m;
}

std::optional<double> mean_of(const std::vector<std::optional<double>>& values) {
  double sum = 0.0;
  int n = 0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

}  // namespace

std::string_view to_string(Aggregation a) { return a == Aggregation::Mean ? "mean" : "pooled"; }

const SubgroupMetrics& FoldReport::subgroup(Subgroup g) const {
  for (const auto& s : subgroups) {
    if (s.subgroup == g) return s;
  }
  throw std::out_of_range("fold report has no subgroup " + std::string(to_string(g)));
}

const SubgroupSummary& RunReport::summary(Subgroup g) const {
  for (const auto& s : aggregate) {
    if (s.subgroup == g) return s;
  }
  throw std::out_of_range("run report has no aggregate for subgroup " + std::string(to_string(g)));
}

void aggregate_folds(RunReport& report, Aggregation mode) {
  report.aggregation = mode;
  report.aggregate.clear();
  for (Subgroup g : kAllSubgroups) {
    SubgroupSummary summary;
    summary.subgroup = g;
    ConfusionMatrix pooled;
    std::vector<std::optional<double>> sens, spec, prec, uar, f1;
    for (const FoldReport& fold : report.folds) {
      const SubgroupMetrics& sm = fold.subgroup(g);
      summary.size += sm.size;
      pooled += sm.counts;
      sens.push_back(sm.metrics.sensitivity);
      spec.push_back(sm.metrics.specificity);
      prec.push_back(sm.metrics.precision);
      uar.push_back(sm.metrics.uar);
      f1.push_back(sm.metrics.f1);
    }
    if (mode == Aggregation::Pooled) {
      summary.metrics = compute_metrics(pooled);
    } else {
      summary.metrics = {mean_of(sens), mean_of(spec), mean_of(prec), mean_of(uar), mean_of(f1)};
    }
    report.aggregate.push_back(summary);
  }
  std::vector<std::optional<double>> sep;
  for (const FoldReport& fold : report.folds) sep.push_back(fold.separability);
  report.mean_separability = mean_of(sep);
}

void rescore(RunReport& report, const Dataset& ds, Aggregation mode) {
  for (FoldReport& fold : report.folds) {
    fold.subgroups.clear();
    for (Subgroup g : kAllSubgroups) fold.subgroups.push_back(subgroup_metrics(fold.predictions, ds, g));
  }
  aggregate_folds(report, mode);
}

std::string report_to_json(const RunReport& report) {
  json doc;
  doc["label"] = report.label;
  doc["config"] = json::parse(config_to_json(report.config));
  doc["aggregation"] = std::string(to_string(report.aggregation));
  doc["aggregate"] = json::array();
  for (const SubgroupSummary& s : report.aggregate) {
    json row = metrics_json(s.metrics);
    row["subgroup"] = std::string(to_string(s.subgroup));
    row["size"] = s.size;
    doc["aggregate"].push_back(std::move(row));
  }
  doc["mean_separability"] = report.mean_separability ? json(*report.mean_separability) : json(nullptr);
  doc["folds"] = json::array();
  for (const FoldReport& fold : report.folds) {
    json jf;
    jf["fold_index"] = fold.fold_index;
    jf["train_size"] = fold.train_size;
    jf["validation_ids"] = fold.validation_ids;
    jf["epoch_losses"] = fold.epoch_losses;
    jf["separability"] = fold.separability ? json(*fold.separability) : json(nullptr);
    jf["subgroups"] = json::array();
    for (const SubgroupMetrics& sm : fold.subgroups) {
      json row = metrics_json(sm.metrics);
      row["subgroup"] = std::string(to_string(sm.subgroup));
      row["size"] = sm.size;
      row["tp"] = sm.counts.tp;
      row["tn"] = sm.counts.tn;
      row["fp"] = sm.counts.fp;
      row["fn"] = sm.counts.fn;
      jf["subgroups"].push_back(std::move(row));
    }
    jf["predictions"] = json::array();
    for (const Prediction& p : fold.predictions) {
      jf["predictions"].push_back({{"sample_id", p.sample_id},
                                   {"truth", std::string(to_string(p.truth))},
                                   {"predicted", std::string(to_string(p.predicted))},
                                   {"prob_mci", p.prob_mci}});
    }
    doc["folds"].push_back(std::move(jf));
  }
  return doc.dump(2) + "\n";
}

RunReport report_from_json(std::string_view text) {
  RunReport report;
  try {
    const json doc = json::parse(text);
    report.label = doc.at("label").get<std::string>();
    report.config = config_from_json(doc.at("config").dump());
    report.aggregation = doc.at("aggregation").get<std::string>() == "pooled" ? Aggregation::Pooled : Aggregation::Mean;
    for (const json& row : doc.at("aggregate")) {
      report.aggregate.push_back({parse_subgroup(row.at("subgroup").get<std::string>()),
                                  row.at("size").get<std::int64_t>(), metrics_from_json(row)});
    }
    report.mean_separability = metric_from_json(doc.at("mean_separability"));
    for (const json& jf : doc.at("folds")) {
      FoldReport fold;
      fold.fold_index = jf.at("fold_index").get<int>();
      fold.train_size = jf.at("train_size").get<std::size_t>();
      fold.validation_ids = jf.at("validation_ids").get<std::vector<std::string>>();
      fold.epoch_losses = jf.at("epoch_losses").get<std::vector<double>>();
      fold.separability = metric_from_json(jf.at("separability"));
      for (const json& row : jf.at("subgroups")) {
        SubgroupMetrics sm;
        sm.subgroup = parse_subgroup(row.at("subgroup").get<std::string>());
        sm.size = row.at("size").get<std::int64_t>();
        sm.counts = {row.at("tp").get<std::int64_t>(), row.at("tn").get<std::int64_t>(),
                     row.at("fp").get<std::int64_t>(), row.at("fn").get<std::int64_t>()};
        sm.metrics = metrics_from_json(row);
        fold.subgroups.push_back(sm);
      }
      for (const json& jp : jf.at("predictions")) {
        fold.predictions.push_back({jp.at("sample_id").get<std::string>(), fold.fold_index,
                                    parse_label(jp.at("truth").get<std::string>()),
                                    parse_label(jp.at("predicted").get<std::string>()),
                                    jp.at("prob_mci").get<double>()});
      }
      report.folds.push_back(std::move(fold));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("run report: malformed JSON (") + e.what() + ")");
  }
  return report;
}

std::string format_metric(const std::optional<double>& v, int precision) {
  if (!v) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, *v);
  return buf;
}

std::string reports_to_csv(std::span<const RunReport> reports) {
  std::ostringstream out;
  out << "label,fusion,use_cl,use_image,subgroup,size,uar,f1,sensitivity,specificity,precision\n";
  for (const RunReport& r : reports) {
    for (const SubgroupSummary& s : r.aggregate) {
      out << r.label << ',' << to_string(r.config.fusion) << ',' << (r.config.use_cl ? "true" : "false") << ','
          << (r.config.use_image ? "true" : "false") << ',' << to_string(s.subgroup) << ',' << s.size << ','
          << format_metric(s.metrics.uar) << ',' << format_metric(s.metrics.f1) << ','
          << format_metric(s.metrics.sensitivity) << ',' << format_metric(s.metrics.specificity) << ','
          << format_metric(s.metrics.precision) << '\n';
    }
  }
  return out.str();
}

std::string fold_uar_tsv(const RunReport& report) {
  std::ostringstream out;
  out << "# fold";
  for (Subgroup g : kAllSubgroups) out << '\t' << to_string(g);
  out << '\n';
  for (const FoldReport& fold : report.folds) {
    out << fold.fold_index;
    for (Subgroup g : kAllSubgroups) {
      const auto& uar = fold.subgroup(g).metrics.uar;
      out << '\t' << (uar ? format_metric(uar) : std::string("NaN"));
    }
    out << '\n';
  }
  return out.str();
}

double disparity(double uar_a, double uar_b) { return std::abs(uar_a - uar_b); }

double disparity(const RunReport& report, DisparityAxis axis) {
  const Subgroup a = axis == DisparityAxis::Language ? Subgroup::En : Subgroup::M;
  const Subgroup b = axis == DisparityAxis::Language ? Subgroup::Zh : Subgroup::F;
  const auto& ua = report.summary(a).metrics.uar;
  const auto& ub = report.summary(b).metrics.uar;
  if (!ua || !ub) {
    throw std::domain_error("disparity: UAR undefined for subgroup " +
                            std::string(to_string(!ua ? a : b)));
  }
  return disparity(*ua, *ub);
}

}  // namespace poesup
