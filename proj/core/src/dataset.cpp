#include "poesup/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "poesup/errors.hpp"

namespace poesup {
namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view to_string(CognitiveLabel label) { return label == CognitiveLabel::MCI ? "MCI" : "NC"; }

std::string_view to_string(Language language) { return language == Language::En ? "En" : "Zh"; }

std::string_view to_string(Gender gender) { return gender == Gender::M ? "M" : "F"; }

std::string_view to_string(Modality modality) {
  switch (modality) {
    case Modality::Speech: return "speech";
    case Modality::Acoustic: return "acoustic";
    case Modality::Text: return "text";
    case Modality::Image: return "image";
  }
  return "unknown";
}

CognitiveLabel parse_label(std::string_view text) {
  const std::string t = lower(text);
  if (t == "mci" || t == "1") return CognitiveLabel::MCI;
  if (t == "nc" || t == "0") return CognitiveLabel::NC;
  throw InputError("unknown cognitive label '" + std::string(text) + "' (expected NC or MCI)");
}

Language parse_language(std::string_view text) {
  const std::string t = lower(text);
  if (t == "en") return Language::En;
  if (t == "zh") return Language::Zh;
  throw InputError("unknown language '" + std::string(text) + "' (expected En or Zh)");
}

Gender parse_gender(std::string_view text) {
  const std::string t = lower(text);
  if (t == "m") return Gender::M;
  if (t == "f") return Gender::F;
  throw InputError("unknown gender '" + std::string(text) + "' (expected M or F)");
}

Modality parse_modality(std::string_view text) {
  const std::string t = lower(text);
  for (Modality m : kAllModalities) {
    if (t == to_string(m)) return m;
  }
  throw InputError("unknown modality '" + std::string(text) +
                   "' (expected speech, acoustic, text or image)");
}

bool picture_matches_language(int picture_id, Language language) {
  return language == Language::En ? (picture_id >= 1 && picture_id <= 3)
                                  : (picture_id >= 4 && picture_id <= 6);
}

bool operator==(const ModalityBlock& a, const ModalityBlock& b) {
  auto same = [](const MatrixF& x, const MatrixF& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() &&
           std::memcmp(x.data(), y.data(), sizeof(float) * static_cast<std::size_t>(x.size())) == 0;
  };
  if (a.modality != b.modality || !same(a.data, b.data)) return false;
  if (a.bias_flipped.has_value() != b.bias_flipped.has_value()) return false;
  return !a.bias_flipped || same(*a.bias_flipped, *b.bias_flipped);
}

const ModalityBlock& Dataset::block(Modality m) const {
  const auto it = blocks.find(m);
  if (it == blocks.end()) {
    throw InputError("dataset has no '" + std::string(to_string(m)) + "' modality block");
  }
  return it->second;
}

std::optional<std::size_t> Dataset::find(std::string_view sample_id) const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].sample_id == sample_id) return i;
  }
  return std::nullopt;
}

std::vector<std::string> validate_dataset(const Dataset& ds) {
  std::unordered_set<std::string> ids;
  for (const Sample& s : ds.samples) {
    if (!ids.insert(s.sample_id).second) throw InputError("duplicate sample_id '" + s.sample_id + "'");
    if (s.picture_id < 1 || s.picture_id > 6) {
      throw InputError("sample '" + s.sample_id + "': picture_id " + std::to_string(s.picture_id) +
                       " outside 1..6");
    }
  }
  for (const auto& [modality, block] : ds.blocks) {
    const std::string name(to_string(modality));
    if (block.modality != modality) throw InputError("block keyed '" + name + "' holds another modality");
    if (block.dim() <= 0) throw InputError("modality '" + name + "' has non-positive dim");
    if (static_cast<std::size_t>(block.data.rows()) != ds.samples.size()) {
      throw InputError("modality '" + name + "' has " + std::to_string(block.data.rows()) +
                       " rows but the manifest lists " + std::to_string(ds.samples.size()) + " samples");
    }
    if (block.bias_flipped && (block.bias_flipped->rows() != block.data.rows() ||
                               block.bias_flipped->cols() != block.data.cols())) {
      throw InputError("modality '" + name + "': bias-flipped rows do not match the primary block shape");
    }
    for (Index r = 0; r < block.data.rows(); ++r) {
      if (!block.data.row(r).allFinite()) {
        throw InputError("modality '" + name + "': non-finite value at row " + std::to_string(r));
      }
    }
    for (const Sample& s : ds.samples) {
      if (s.row_index < 0 || s.row_index >= block.data.rows()) {
        throw InputError("sample '" + s.sample_id + "': row_index " + std::to_string(s.row_index) +
                         " out of range for modality '" + name + "'");
      }
    }
  }

  std::vector<std::string> warnings;
  std::map<std::string, std::vector<const Sample*>> by_participant;
  for (const Sample& s : ds.samples) {
    if (!picture_matches_language(s.picture_id, s.language)) {
      warnings.push_back("sample '" + s.sample_id + "': picture " + std::to_string(s.picture_id) +
                         " is not in the " + std::string(to_string(s.language)) + " picture triple");
    }
    by_participant[s.participant_id].push_back(&s);
  }
  for (const auto& [participant, rows] : by_participant) {
    std::set<int> pictures;
    for (const Sample* s : rows) pictures.insert(s->picture_id);
    if (rows.size() != 3 || pictures.size() != 3) {
      warnings.push_back("participant '" + participant + "' has " + std::to_string(rows.size()) +
                         " samples covering " + std::to_string(pictures.size()) +
                         " distinct pictures (expected 3 and 3)");
    }
  }
  return warnings;
}

Matrix to_double(const MatrixF& data) { return data.cast<double>(); }

}  // namespace poesup
