#include "poesup/metrics.hpp"

#include <unordered_map>

#include "poesup/errors.hpp"

namespace poesup {
namespace {

std::optional<double> ratio(std::int64_t num, std::int64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

void ConfusionMatrix::add(CognitiveLabel truth, CognitiveLabel predicted) {
  const bool actual = truth == CognitiveLabel::MCI;
  const bool flagged = predicted == CognitiveLabel::MCI;
  if (actual && flagged) ++tp;
  else if (actual) ++fn;
  else if (flagged) ++fp;
  else ++tn;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  tp += o.tp;
  tn += o.tn;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

MetricSet compute_metrics(const ConfusionMatrix& cm) {
  MetricSet m;
  m.sensitivity = ratio(cm.tp, cm.tp + cm.fn);
  m.specificity = ratio(cm.tn, cm.tn + cm.fp);
  m.precision = ratio(cm.tp, cm.tp + cm.fp);
  if (m.sensitivity && m.specificity) m.uar = (*m.specificity + *m.sensitivity) / 2.0;
  if (m.precision && m.sensitivity && (*m.precision + *m.sensitivity) > 0.0) {
    m.f1 = 2.0 * *m.precision * *m.sensitivity / (*m.precision + *m.sensitivity);
  }
  return m;
}

std::string_view to_string(Subgroup g) {
  switch (g) {
    case Subgroup::Both: return "Both";
    case Subgroup::En: return "En";
    case Subgroup::Zh: return "Zh";
    case Subgroup::M: return "M";
    case Subgroup::F: return "F";
  }
  return "?";
}

Subgroup parse_subgroup(std::string_view key) {
  for (Subgroup g : kAllSubgroups) {
    if (key == to_string(g)) return g;
  }
  throw InputError("unknown subgroup key '" + std::string(key) + "' (expected Both, En, Zh, M or F)");
}

bool in_subgroup(const Sample& s, Subgroup g) {
  switch (g) {
    case Subgroup::Both: return true;
    case Subgroup::En: return s.language == Language::En;
    case Subgroup::Zh: return s.language == Language::Zh;
    case Subgroup::M: return s.gender == Gender::M;
    case Subgroup::F: return s.gender == Gender::F;
  }
  return false;
}

SubgroupMetrics subgroup_metrics(std::span<const Prediction> predictions, const Dataset& ds, Subgroup g) {
  std::unordered_map<std::string_view, const Sample*> by_id;
  by_id.reserve(ds.samples.size());
  for (const Sample& s : ds.samples) by_id.emplace(s.sample_id, &s);

  SubgroupMetrics out;
  out.subgroup = g;
  for (const Prediction& p : predictions) {
    const auto it = by_id.find(p.sample_id);
    if (it == by_id.end()) throw InputError("prediction for unknown sample '" + p.sample_id + "'");
    if (!in_subgroup(*it->second, g)) continue;
    out.counts.add(p.truth, p.predicted);
  }
  out.size = out.counts.total();
  out.metrics = compute_metrics(out.counts);
  return out;
}

SubgroupMetrics subgroup_metrics(std::span<const Prediction> predictions, const Dataset& ds,
                                 std::string_view subgroup_key) {
  return subgroup_metrics(predictions, ds, parse_subgroup(subgroup_key));
}

}  // namespace poesup
