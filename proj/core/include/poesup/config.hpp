#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "poesup/dataset.hpp"
#include "poesup/losses.hpp"

namespace poesup {

enum class Fusion { Concat, PoE };
enum class StratifyBy { Label, LabelAndLanguage };

std::string_view to_string(Fusion fusion);
std::string_view to_string(StratifyBy key);

/// Hyperparameters and ablation switches for one cross-validated run.
/// Defaults: 10 folds, Adam at lr 1e-5,
/// batch 16, L2 0.01, 10 epochs, lambda 1.
struct ExperimentConfig {
  int k_folds = 10;
  double lr = 1e-5;
  int batch_size = 16;
  int epochs = 10;
  double l2 = 0.01;
  double lambda = 1.0;
  double tau = 0.07;
  Fusion fusion = Fusion::PoE;
  bool use_cl = true;
  /// Adds (true) or removes (false) the image modality regardless of `modalities`.
  bool use_image = true;
  std::vector<Modality> modalities = {Modality::Speech, Modality::Acoustic, Modality::Text, Modality::Image};
  SupConVariant supcon_variant = SupConVariant::Standard;
  /// PoE only: the concatenation head joins the unimodal experts.
  bool include_joint_expert = false;
  StratifyBy stratify_by = StratifyBy::Label;
  bool group_by_participant = false;
  std::uint64_t seed = 0;

  int hidden = 256;
  int projection_dim = 128;
  bool decoupled_l2 = false;
  /// PoE only: add the mean per-expert cross-entropy to the fused one.
  bool aux_modality_ce = false;
  /// Aggregate folds from pooled confusion counts instead of averaging metrics.
  bool pooled_metrics = false;
  /// Evaluate on the bias-flipped copy of each block when the dataset has one.
  bool bias_flipped_validation = false;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Throws InputError on the first violated constraint.
void validate(const ExperimentConfig& cfg);

/// `modalities` with image added or removed per `use_image`, in canonical order.
std::vector<Modality> effective_modalities(const ExperimentConfig& cfg);

struct ConfigField {
  std::string_view name;
  std::string_view help;
  bool is_bool;
};

/// Every settable field, in declaration order.
const std::vector<ConfigField>& config_fields();

/// Sets one field from its textual form. Booleans accept true/false/1/0,
/// modalities a comma-separated list. Throws InputError on unknown keys or bad values.
void set_config_field(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Current value of a field in the form set_config_field accepts.
std::string get_config_field(const ExperimentConfig& cfg, std::string_view key);

ExperimentConfig config_from_json(std::string_view text);
std::string config_to_json(const ExperimentConfig& cfg);

/// Flat TOML subset: `key = value` lines, `#` comments, strings, booleans,
/// numbers and arrays of strings. Tables are rejected.
ExperimentConfig config_from_toml(std::string_view text);

/// Dispatches on extension: .toml is TOML, anything else JSON.
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace poesup
