#include "poesup/pipeline.hpp"

#include <algorithm>

#include "poesup/errors.hpp"

namespace poesup {
namespace {

std::string head_key(const std::vector<Modality>& inputs) {
  std::string key;
  for (Modality m : inputs) {
    if (!key.empty()) key += "+";
    key += to_string(m);
  }
  return key;
}

bool eligible_for_contrastive(const std::vector<Modality>& inputs) {
  return !(inputs.size() == 1 && inputs.front() == Modality::Acoustic);
}

}  // namespace

MultimodalModel MultimodalModel::create(const ExperimentConfig& cfg, const std::map<Modality, Index>& dims) {
  const std::vector<Modality> mods = effective_modalities(cfg);
  if (mods.empty()) throw InputError("model needs at least one modality");

  MultimodalModel model;
  model.fusion = cfg.fusion;
  std::vector<std::vector<Modality>> head_inputs;
  if (cfg.fusion == Fusion::Concat) {
    head_inputs.push_back(mods);
  } else {
    for (Modality m : mods) head_inputs.push_back({m});
    if (cfg.include_joint_expert && mods.size() > 1) head_inputs.push_back(mods);
  }

  const Rng root = Rng(cfg.seed).split("init");
  for (const auto& inputs : head_inputs) {
    Index in_dim = 0;
    for (Modality m : inputs) {
      const auto it = dims.find(m);
      if (it == dims.end()) throw InputError("no dimension known for modality '" + std::string(to_string(m)) + "'");
      in_dim += it->second;
    }
    HeadRole role{inputs, eligible_for_contrastive(inputs)};
    FfnHeadShape shape{in_dim, cfg.hidden, 2, role.contrastive ? cfg.projection_dim : 0};
    const std::string key = head_key(inputs);
    Rng rng = root.split(key);
    model.heads.push_back(FfnHead::he_init(key, shape, rng));
    model.roles.push_back(std::move(role));
  }
  return model;
}

std::vector<Matrix*> MultimodalModel::parameters(bool with_projection) {
  std::vector<Matrix*> out;
  for (FfnHead& h : heads) {
    const auto p = h.params();
    out.insert(out.end(), p.begin(), p.begin() + 4);
    if (with_projection && h.has_projection()) out.insert(out.end(), p.begin() + 4, p.end());
  }
  return out;
}

std::vector<const Matrix*> MultimodalModel::parameters(bool with_projection) const {
  std::vector<const Matrix*> out;
  for (const FfnHead& h : heads) {
    const auto p = h.params();
    out.insert(out.end(), p.begin(), p.begin() + 4);
    if (with_projection && h.has_projection()) out.insert(out.end(), p.begin() + 4, p.end());
  }
  return out;
}

std::vector<std::string> MultimodalModel::parameter_names(bool with_projection) const {
  std::vector<std::string> out;
  for (const FfnHead& h : heads) {
    const std::size_t n = (with_projection && h.has_projection()) ? 6 : 4;
    for (std::size_t i = 0; i < n; ++i) out.push_back(h.name + "." + std::string(FfnHead::kParamNames[i]));
  }
  return out;
}

std::optional<std::size_t> MultimodalModel::representation_head() const {
  if (fusion == Fusion::Concat) {
    return roles.front().contrastive ? std::optional<std::size_t>(0) : std::nullopt;
  }
  for (std::size_t i = 0; i < roles.size(); ++i) {
    if (roles[i].contrastive && roles[i].inputs == std::vector<Modality>{Modality::Text}) return i;
  }
  for (std::size_t i = 0; i < roles.size(); ++i) {
    if (roles[i].contrastive) return i;
  }
  return std::nullopt;
}

FeatureTable build_features(const Dataset& ds, std::span<const Modality> modalities, bool bias_flipped) {
  FeatureTable table;
  for (Modality m : modalities) {
    const ModalityBlock& block = ds.block(m);
    if (bias_flipped && !block.bias_flipped) {
      throw InputError("bias-flipped validation requested but modality '" + std::string(to_string(m)) +
                       "' has no bias-flipped rows");
    }
    const MatrixF& src = bias_flipped ? *block.bias_flipped : block.data;
    Matrix rows(static_cast<Index>(ds.samples.size()), src.cols());
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
      rows.row(static_cast<Index>(i)) = src.row(ds.samples[i].row_index).cast<double>();
    }
    table.rows.emplace(m, std::move(rows));
  }
  return table;
}

Batch gather_batch(const FeatureTable& table, const Dataset& ds, std::span<const std::size_t> positions) {
  Batch batch;
  const auto n = static_cast<Index>(positions.size());
  for (const auto& [m, rows] : table.rows) {
    Matrix x(n, rows.cols());
    for (Index r = 0; r < n; ++r) x.row(r) = rows.row(static_cast<Index>(positions[static_cast<std::size_t>(r)]));
    batch.features.emplace(m, std::move(x));
  }
  for (std::size_t i : positions) {
    const Sample& s = ds.samples.at(i);
    batch.labels.push_back(static_cast<int>(s.label));
    batch.picture_ids.push_back(s.picture_id);
  }
  return batch;
}

Matrix head_input(const HeadRole& role, const Batch& batch) {
  if (role.inputs.size() == 1) return batch.features.at(role.inputs.front());
  Index cols = 0;
  for (Modality m : role.inputs) cols += batch.features.at(m).cols();
  Matrix x(batch.size(), cols);
  Index offset = 0;
  for (Modality m : role.inputs) {
    const Matrix& part = batch.features.at(m);
    x.middleCols(offset, part.cols()) = part;
    offset += part.cols();
  }
  return x;
}

LossOptions LossOptions::from(const ExperimentConfig& cfg) {
  return LossOptions{cfg.use_cl, cfg.lambda, cfg.tau, cfg.supcon_variant, cfg.aux_modality_ce};
}

ForwardPass forward(const MultimodalModel& model, const Batch& batch) {
  ForwardPass pass;
  std::vector<Matrix> logits;
  for (std::size_t h = 0; h < model.heads.size(); ++h) {
    pass.heads.push_back(ffn_forward(model.heads[h], head_input(model.roles[h], batch)));
    logits.push_back(pass.heads.back().logits);
  }
  if (model.fusion == Fusion::Concat) {
    pass.log_probs = log_softmax_rows(logits.front());
  } else {
    pass.fused = poe_fuse(logits);
    pass.log_probs = pass.fused->fused;
  }
  return pass;
}

Matrix contrastive_embedding(const MultimodalModel& model, const ForwardPass& pass, std::size_t head_index) {
  return normalize_rows(ffn_project(model.heads.at(head_index), pass.heads.at(head_index).cache)).unit;
}

LossBreakdown loss_and_gradients(const MultimodalModel& model, const Batch& batch, const LossOptions& opt,
                                 std::vector<FfnGradients>* grads) {
  const ForwardPass pass = forward(model, batch);
  const std::size_t n_heads = model.heads.size();
  LossBreakdown out;

  std::vector<Matrix> d_logits(n_heads);
  if (model.fusion == Fusion::Concat) {
    LossAndGrad ce = cross_entropy(pass.heads.front().logits, batch.labels);
    out.ce = ce.loss;
    d_logits.front() = std::move(ce.grad);
  } else {
    LossAndGrad ce = cross_entropy(pass.log_probs, batch.labels);
    out.ce = ce.loss;
    d_logits = poe_fuse_backward(*pass.fused, ce.grad);
    if (opt.aux_modality_ce) {
      const double w = 1.0 / static_cast<double>(n_heads);
      for (std::size_t h = 0; h < n_heads; ++h) {
        LossAndGrad aux = cross_entropy(pass.heads[h].logits, batch.labels);
        out.ce += w * aux.loss;
        d_logits[h] += w * aux.grad;
      }
    }
  }

  std::vector<std::optional<Matrix>> d_projection(n_heads);
  if (opt.use_cl) {
    for (std::size_t h = 0; h < n_heads; ++h) {
      if (!model.roles[h].contrastive) continue;
      const NormalizedRows normalized = normalize_rows(ffn_project(model.heads[h], pass.heads[h].cache));
      ContrastiveBatch cb{normalized.unit, batch.picture_ids, opt.tau, opt.variant};
      LossAndGrad sc = supcon_loss(cb);
      out.supcon += sc.loss;
      if (grads != nullptr) d_projection[h] = normalize_rows_backward(normalized, opt.lambda * sc.grad);
    }
  }
  out.total = total_loss(out.ce, out.supcon, opt.lambda);

  if (grads != nullptr) {
    grads->clear();
    for (std::size_t h = 0; h < n_heads; ++h) {
      grads->push_back(ffn_backward(model.heads[h], pass.heads[h].cache, d_logits[h],
                                    d_projection[h] ? &*d_projection[h] : nullptr));
    }
  }
  return out;
}

std::vector<const Matrix*> gradient_tensors(const std::vector<FfnGradients>& grads, bool with_projection) {
  std::vector<const Matrix*> out;
  for (const FfnGradients& g : grads) {
    const auto p = g.params();
    out.insert(out.end(), p.begin(), p.begin() + 4);
    if (with_projection && g.wp.size() > 0) out.insert(out.end(), p.begin() + 4, p.end());
  }
  return out;
}

}  // namespace poesup
