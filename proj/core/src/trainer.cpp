#include "poesup/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include "poesup/errors.hpp"
#include "poesup/separability.hpp"

namespace poesup {
namespace {

std::map<Modality, Index> dims_of(const Dataset& ds) {
  std::map<Modality, Index> dims;
  for (const auto& [m, block] : ds.blocks) dims[m] = block.dim();
  return dims;
}

TrainedFold train_fold_with(const Dataset& ds, const FoldSplit& split, const ExperimentConfig& cfg,
                            const FeatureTable& train_rows, const FeatureTable& validation_rows) {
  TrainedFold out{FoldReport{}, MultimodalModel::create(cfg, dims_of(ds)), AdamState{}};
  MultimodalModel& model = out.model;
  const LossOptions loss_opt = LossOptions::from(cfg);
  const bool with_projection = cfg.use_cl;
  AdamOptions adam;
  adam.lr = cfg.lr;
  adam.l2 = cfg.l2;
  adam.decoupled_l2 = cfg.decoupled_l2;

  const std::vector<Matrix*> params = model.parameters(with_projection);
  const std::vector<std::string> names = model.parameter_names(with_projection);

  std::vector<std::size_t> order = split.train;
  Rng shuffler = Rng(cfg.seed).split("shuffle").split(static_cast<std::uint64_t>(split.fold_index));
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
  std::vector<FfnGradients> grads;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffler.shuffle(std::span(order));
    double loss_sum = 0.0;
    int batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      const std::span<const std::size_t> positions(order.data() + start, end - start);
      const Batch batch = gather_batch(train_rows, ds, positions);
      const LossBreakdown loss = loss_and_gradients(model, batch, loss_opt, &grads);
      if (!std::isfinite(loss.total)) {
        std::ostringstream msg;
        msg << "fold " << split.fold_index << ", epoch " << epoch << ", batch " << batch_index
            << ": non-finite loss (ce=" << loss.ce << ", supcon=" << loss.supcon << ", total=" << loss.total << ")";
        throw NumericError(msg.str());
      }
      const std::vector<const Matrix*> g = gradient_tensors(grads, with_projection);
      std::vector<ParamSlot> slots;
      slots.reserve(params.size());
      for (std::size_t i = 0; i < params.size(); ++i) slots.push_back({names[i], params[i], g[i]});
      adam_step(slots, out.optimizer, adam);
      loss_sum += loss.total * static_cast<double>(positions.size());
    }
    out.report.epoch_losses.push_back(order.empty() ? 0.0 : loss_sum / static_cast<double>(order.size()));
  }

  FoldReport& report = out.report;
  report.fold_index = split.fold_index;
  report.train_size = split.train.size();
  report.validation_ids = sample_ids(ds, split.validation);
  if (!split.validation.empty()) {
    const Batch val = gather_batch(validation_rows, ds, split.validation);
    const ForwardPass pass = forward(model, val);
    for (std::size_t r = 0; r < split.validation.size(); ++r) {
      const Sample& s = ds.samples[split.validation[r]];
      const auto row = static_cast<Index>(r);
      const bool mci = pass.log_probs(row, 1) > pass.log_probs(row, 0);
      report.predictions.push_back({s.sample_id, split.fold_index, s.label,
                                    mci ? CognitiveLabel::MCI : CognitiveLabel::NC,
                                    std::exp(pass.log_probs(row, 1))});
    }
    if (const auto head = model.representation_head()) {
      try {
        report.separability =
            picture_separability(contrastive_embedding(model, pass, *head), val.picture_ids).mean_silhouette;
      } catch (const std::invalid_argument&) {
        report.separability.reset();
      }
    }
  }
  for (Subgroup g : kAllSubgroups) report.subgroups.push_back(subgroup_metrics(report.predictions, ds, g));
  return out;
}

}  // namespace

TrainedFold train_fold(const Dataset& ds, const FoldSplit& split, const ExperimentConfig& cfg) {
  validate(cfg);
  const std::vector<Modality> mods = effective_modalities(cfg);
  const FeatureTable train_rows = build_features(ds, mods, false);
  if (cfg.bias_flipped_validation) {
    return train_fold_with(ds, split, cfg, train_rows, build_features(ds, mods, true));
  }
  return train_fold_with(ds, split, cfg, train_rows, train_rows);
}

Checkpoint make_checkpoint(const TrainedFold& fold, bool with_projection) {
  Checkpoint ckpt;
  ckpt.optimizer_step = fold.optimizer.step;
  const auto params = fold.model.parameters(with_projection);
  const auto names = fold.model.parameter_names(with_projection);
  for (std::size_t i = 0; i < params.size(); ++i) ckpt.tensors.push_back({names[i], *params[i]});
  for (std::size_t i = 0; i < fold.optimizer.m.size() && i < names.size(); ++i) {
    ckpt.tensors.push_back({names[i] + ".adam_m", fold.optimizer.m[i]});
    ckpt.tensors.push_back({names[i] + ".adam_v", fold.optimizer.v[i]});
  }
  return ckpt;
}

RunReport run_experiment(const Dataset& ds, const ExperimentConfig& cfg, const RunOptions& opts) {
  validate(cfg);
  const std::vector<FoldSplit> splits = stratified_kfold(ds, cfg);
  const std::vector<Modality> mods = effective_modalities(cfg);
  const FeatureTable train_rows = build_features(ds, mods, false);
  FeatureTable flipped_rows;
  if (cfg.bias_flipped_validation) flipped_rows = build_features(ds, mods, true);
  const FeatureTable& validation_rows = cfg.bias_flipped_validation ? flipped_rows : train_rows;

  std::vector<std::optional<TrainedFold>> results(splits.size());
  std::vector<std::exception_ptr> errors(splits.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < splits.size(); i = next++) {
      try {
        results[i] = train_fold_with(ds, splits[i], cfg, train_rows, validation_rows);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(opts.jobs == 0 ? splits.size() : opts.jobs, 1, splits.size());
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  RunReport report;
  report.label = opts.label;
  report.config = cfg;
  for (auto& r : results) {
    if (opts.checkpoints != nullptr) opts.checkpoints->push_back(make_checkpoint(*r, cfg.use_cl));
    report.folds.push_back(std::move(r->report));
  }
  aggregate_folds(report, cfg.pooled_metrics ? Aggregation::Pooled : Aggregation::Mean);
  return report;
}

}  // namespace poesup
