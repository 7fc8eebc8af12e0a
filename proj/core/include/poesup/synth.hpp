#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "poesup/dataset.hpp"

namespace poesup {

/// Synthetic corpus with planted structure.
///
/// Participant counts default to the TAUKADIAL-2024 composition: 129 speakers
/// (74 MCI, 55 NC), 62 English and 67 Chinese, three picture descriptions each,
/// for 387 samples (222 MCI, 165 NC).
///
/// For modality m and sample i with picture p, label sign y (+1 MCI, -1 NC):
///
///   row = picture_signal_strength * centroid_m[p]
///       + label_signal_strength   * y * label_direction_m
///       + spurious_subgroup_bias  * y * shift_m      (spurious subgroup and modalities only)
///       + noise_std * N(0, I)
///
/// Centroids and directions are unit vectors drawn from the seed. When the bias
/// is positive every block also carries a bias-flipped copy in which the shift
/// term has the opposite sign (same noise), so validation rows can break the
/// spurious correlation seen in training.
struct SynthConfig {
  int n_participants = 129;
  int n_english = 62;
  int n_mci = 74;
  int n_english_mci = 41;
  int n_male_mci = 29;
  int n_male_nc = 21;
  std::map<Modality, int> dims = {
      {Modality::Speech, 384}, {Modality::Acoustic, 64}, {Modality::Text, 768}, {Modality::Image, 512}};
  double picture_signal_strength = 1.0;
  double label_signal_strength = 0.5;
  double spurious_subgroup_bias = 0.0;
  Language spurious_language = Language::Zh;
  std::vector<Modality> spurious_modalities = {Modality::Speech, Modality::Acoustic, Modality::Text,
                                               Modality::Image};
  double noise_std = 1.0;
  std::uint64_t seed = 0;

  bool operator==(const SynthConfig&) const = default;
};

/// Throws InputError describing the first invalid field.
void validate(const SynthConfig& cfg);

Dataset generate_synthetic(const SynthConfig& cfg);

/// JSON form uses the field names above; `dims` is an object keyed by modality
/// name. Missing fields keep their defaults, unknown fields are rejected.
SynthConfig synth_config_from_json(std::string_view text);
std::string synth_config_to_json(const SynthConfig& cfg);

}  // namespace poesup
