#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "poesup/adam.hpp"
#include "poesup/config.hpp"
#include "poesup/dataset.hpp"
#include "poesup/fusion.hpp"
#include "poesup/losses.hpp"
#include "poesup/model.hpp"

namespace poesup {

/// What a head consumes and which objectives reach it.
struct HeadRole {
  /// Modalities concatenated (in this order) to form the head input.
  std::vector<Modality> inputs;
  /// Handcrafted acoustic features alone are not trained contrastively.
  bool contrastive = false;
};

/// The trainable part of one run.
///
///   Concat: a single head over the concatenation of all selected modalities;
///           its logits are the prediction.
///   PoE:    one head per modality (plus the concatenation head when
///           include_joint_expert is set); predictions are the
///           Product-of-Experts fusion of every head's logits.
///
/// With contrastive learning on, every contrastive head's unit-normalized
/// projection gets its own supervised contrastive term (summed).
struct MultimodalModel {
  Fusion fusion = Fusion::PoE;
  std::vector<FfnHead> heads;
  std::vector<HeadRole> roles;

  /// Heads are initialized from the seed and the head's input list only, so a
  /// single-modality Concat head and the matching PoE expert start identical.
  static MultimodalModel create(const ExperimentConfig& cfg, const std::map<Modality, Index>& dims);

  /// Parameters the optimizer updates, head by head. Projection weights are
  /// included only when `with_projection` (they receive no other gradient).
  std::vector<Matrix*> parameters(bool with_projection);
  std::vector<const Matrix*> parameters(bool with_projection) const;
  std::vector<std::string> parameter_names(bool with_projection) const;

  /// Index of the head whose projection is reported as the contrastive
  /// representation (the concatenation head for Concat, else text if present,
  /// else the first contrastive head). nullopt when no head is contrastive.
  std::optional<std::size_t> representation_head() const;
};

/// Upcast embedding rows for every selected modality, indexed by sample position.
struct FeatureTable {
  std::map<Modality, Matrix> rows;
};

/// Throws InputError if a modality is missing, or if bias-flipped rows are
/// requested but the dataset has none.
FeatureTable build_features(const Dataset& ds, std::span<const Modality> modalities, bool bias_flipped);

struct Batch {
  std::map<Modality, Matrix> features;
  std::vector<int> labels;
  std::vector<int> picture_ids;

  Index size() const { return static_cast<Index>(labels.size()); }
};

Batch gather_batch(const FeatureTable& table, const Dataset& ds, std::span<const std::size_t> positions);

/// Concatenated input of one head.
Matrix head_input(const HeadRole& role, const Batch& batch);

struct LossOptions {
  bool use_cl = false;
  double lambda = 1.0;
  double tau = 0.07;
  SupConVariant variant = SupConVariant::Standard;
  bool aux_modality_ce = false;

  static LossOptions from(const ExperimentConfig& cfg);
};

struct LossBreakdown {
  double ce = 0.0;
  double supcon = 0.0;
  double total = 0.0;
};

struct ForwardPass {
  std::vector<FfnForward> heads;
  /// Prediction log-probabilities, batch x 2.
  Matrix log_probs;
  std::optional<FusedLogits> fused;
};

ForwardPass forward(const MultimodalModel& model, const Batch& batch);

/// Unit-normalized projection of head `head_index` for every batch row.
Matrix contrastive_embedding(const MultimodalModel& model, const ForwardPass& pass, std::size_t head_index);

/// Total objective ce + lambda * supcon for one batch. When `grads` is not
/// null it receives one FfnGradients per head.
LossBreakdown loss_and_gradients(const MultimodalModel& model, const Batch& batch, const LossOptions& opt,
                                 std::vector<FfnGradients>* grads);

/// Gradient tensors matching MultimodalModel::parameters(with_projection).
std::vector<const Matrix*> gradient_tensors(const std::vector<FfnGradients>& grads, bool with_projection);

}  // namespace poesup
