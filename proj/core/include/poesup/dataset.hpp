#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "poesup/numerics.hpp"

namespace poesup {

/// MCI is the positive class.
enum class CognitiveLabel : int { NC = 0, MCI = 1 };

enum class Language { En, Zh };
enum class Gender { M, F };
enum class Modality { Speech, Acoustic, Text, Image };

inline constexpr std::array<Modality, 4> kAllModalities = {Modality::Speech, Modality::Acoustic,
                                                           Modality::Text, Modality::Image};

std::string_view to_string(CognitiveLabel label);
std::string_view to_string(Language language);
std::string_view to_string(Gender gender);
std::string_view to_string(Modality modality);

/// Parsers accept the canonical names above (case-insensitive); labels also
/// accept "0"/"1". Throw InputError on anything else.
CognitiveLabel parse_label(std::string_view text);
Language parse_language(std::string_view text);
Gender parse_gender(std::string_view text);
Modality parse_modality(std::string_view text);

/// Pictures 1-3 are described in English, 4-6 in Chinese.
bool picture_matches_language(int picture_id, Language language);

struct Sample {
  std::string sample_id;
  std::string participant_id;
  int picture_id = 1;
  Language language = Language::En;
  Gender gender = Gender::M;
  CognitiveLabel label = CognitiveLabel::NC;
  std::int64_t row_index = 0;

  bool operator==(const Sample&) const = default;
};

struct ModalityBlock {
  Modality modality = Modality::Text;
  MatrixF data;
  /// Same rows with the planted subgroup shift reversed; present only for
  /// synthetic corpora generated with a spurious bias.
  std::optional<MatrixF> bias_flipped;

  Index dim() const { return data.cols(); }
};

bool operator==(const ModalityBlock& a, const ModalityBlock& b);

/// Immutable once built; folds share it read-only.
struct Dataset {
  std::vector<Sample> samples;
  std::map<Modality, ModalityBlock> blocks;

  std::size_t size() const { return samples.size(); }
  bool has(Modality m) const { return blocks.contains(m); }
  const ModalityBlock& block(Modality m) const;
  /// Position of a sample id in `samples`, if present.
  std::optional<std::size_t> find(std::string_view sample_id) const;

  bool operator==(const Dataset&) const = default;
};

/// Checks every hard invariant (unique ids, row ranges, row counts, finite
/// values, picture range) and throws InputError on the first violation.
/// Returns soft findings: picture/language mismatches and participants
/// without exactly three distinct pictures.
std::vector<std::string> validate_dataset(const Dataset& ds);

struct LoadedDataset {
  Dataset dataset;
  std::vector<std::string> warnings;
};

/// Reads a manifest JSON and the containers it references (paths relative to
/// the manifest's directory). Errors name the offending file and row.
LoadedDataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes manifest.json plus one container per modality into `dir`
/// (created if absent). Reloading yields a bit-identical Dataset.
void write_dataset(const Dataset& ds, const std::filesystem::path& dir);

inline constexpr std::string_view kManifestFileName = "manifest.json";

/// Upcasts a block to double precision, optionally selecting the bias-flipped rows.
Matrix to_double(const MatrixF& data);

}  // namespace poesup
