#include "poesup/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

#include "poesup/errors.hpp"
#include "poesup/rng.hpp"

namespace poesup {
namespace {

using nlohmann::json;

Vector unit_vector(Rng& rng, int dim) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.normal();
  const double norm = v.norm();
  return norm > 0.0 ? Vector(v / norm) : v;
}

std::string participant_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "P%03d", i + 1);
  return buf;
}

struct Participant {
  Language language;
  CognitiveLabel label;
  Gender gender = Gender::F;
};

}  // namespace

void validate(const SynthConfig& cfg) {
  auto fail = [](const std::string& msg) { throw InputError("invalid synth config: " + msg); };
  if (cfg.n_participants < 0) fail("n_participants must be non-negative");
  if (cfg.n_english < 0 || cfg.n_english > cfg.n_participants) fail("n_english must be in [0, n_participants]");
  if (cfg.n_mci < 0 || cfg.n_mci > cfg.n_participants) fail("n_mci must be in [0, n_participants]");
  if (cfg.n_english_mci < 0 || cfg.n_english_mci > std::min(cfg.n_english, cfg.n_mci)) {
    fail("n_english_mci must be in [0, min(n_english, n_mci)]");
  }
  if (cfg.n_mci - cfg.n_english_mci > cfg.n_participants - cfg.n_english) {
    fail("more Chinese MCI participants than Chinese participants");
  }
  if (cfg.n_male_mci < 0 || cfg.n_male_mci > cfg.n_mci) fail("n_male_mci must be in [0, n_mci]");
  if (cfg.n_male_nc < 0 || cfg.n_male_nc > cfg.n_participants - cfg.n_mci) {
    fail("n_male_nc must be in [0, n_participants - n_mci]");
  }
  if (cfg.dims.empty()) fail("dims must list at least one modality");
  for (const auto& [m, d] : cfg.dims) {
    if (d <= 0) fail("dim for '" + std::string(to_string(m)) + "' must be positive");
  }
  if (!(cfg.picture_signal_strength >= 0.0)) fail("picture_signal_strength must be >= 0");
  if (!(cfg.label_signal_strength >= 0.0)) fail("label_signal_strength must be >= 0");
  if (!(cfg.spurious_subgroup_bias >= 0.0 && cfg.spurious_subgroup_bias <= 1.0)) {
    fail("spurious_subgroup_bias must be in [0, 1]");
  }
  if (!(cfg.noise_std > 0.0) || !std::isfinite(cfg.noise_std)) fail("noise_std must be > 0");
}

Dataset generate_synthetic(const SynthConfig& cfg) {
  validate(cfg);
  const Rng root(cfg.seed);

  std::vector<Participant> people(static_cast<std::size_t>(cfg.n_participants));
  const int zh_mci = cfg.n_mci - cfg.n_english_mci;
  for (int i = 0; i < cfg.n_participants; ++i) {
    auto& p = people[static_cast<std::size_t>(i)];
    p.language = i < cfg.n_english ? Language::En : Language::Zh;
    const bool mci = p.language == Language::En ? i < cfg.n_english_mci : (i - cfg.n_english) < zh_mci;
    p.label = mci ? CognitiveLabel::MCI : CognitiveLabel::NC;
  }
  // Spread genders over languages at random, within each diagnosis.
  for (CognitiveLabel label : {CognitiveLabel::MCI, CognitiveLabel::NC}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < people.size(); ++i) {
      if (people[i].label == label) members.push_back(i);
    }
    Rng rng = root.split(label == CognitiveLabel::MCI ? "gender:mci" : "gender:nc");
    rng.shuffle(std::span(members));
    const auto males =
        static_cast<std::size_t>(label == CognitiveLabel::MCI ? cfg.n_male_mci : cfg.n_male_nc);
    for (std::size_t k = 0; k < males; ++k) people[members[k]].gender = Gender::M;
  }

  Dataset ds;
  for (std::size_t i = 0; i < people.size(); ++i) {
    const auto& p = people[i];
    const int first_picture = p.language == Language::En ? 1 : 4;
    for (int k = 0; k < 3; ++k) {
      Sample s;
      s.participant_id = participant_name(static_cast<int>(i));
      s.picture_id = first_picture + k;
      s.sample_id = s.participant_id + "_" + std::to_string(s.picture_id);
      s.language = p.language;
      s.gender = p.gender;
      s.label = p.label;
      s.row_index = static_cast<std::int64_t>(ds.samples.size());
      ds.samples.push_back(std::move(s));
    }
  }

  const bool emit_flipped = cfg.spurious_subgroup_bias > 0.0;
  for (const auto& [modality, dim] : cfg.dims) {
    Rng rng = root.split("modality:" + std::string(to_string(modality)));
    std::vector<Vector> centroids;
    for (int p = 0; p < 6; ++p) centroids.push_back(unit_vector(rng, dim));
    const Vector label_dir = unit_vector(rng, dim);
    const Vector shift = unit_vector(rng, dim);
    const bool spurious = std::find(cfg.spurious_modalities.begin(), cfg.spurious_modalities.end(),
                                    modality) != cfg.spurious_modalities.end();

    ModalityBlock block;
    block.modality = modality;
    block.data.resize(static_cast<Index>(ds.samples.size()), dim);
    if (emit_flipped) block.bias_flipped = MatrixF(static_cast<Index>(ds.samples.size()), dim);
    Rng noise = rng.split("noise");
    for (const Sample& s : ds.samples) {
      const double y = s.label == CognitiveLabel::MCI ? 1.0 : -1.0;
      Vector base = cfg.picture_signal_strength * centroids[static_cast<std::size_t>(s.picture_id - 1)] +
                    cfg.label_signal_strength * y * label_dir;
      for (int c = 0; c < dim; ++c) base(c) += cfg.noise_std * noise.normal();
      Vector planted = Vector::Zero(dim);
      if (spurious && s.language == cfg.spurious_language) planted = cfg.spurious_subgroup_bias * y * shift;
      block.data.row(s.row_index) = (base + planted).cast<float>().transpose();
      if (emit_flipped) block.bias_flipped->row(s.row_index) = (base - planted).cast<float>().transpose();
    }
    ds.blocks.emplace(modality, std::move(block));
  }
  return ds;
}

SynthConfig synth_config_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("synth config: invalid JSON (") + e.what() + ")");
  }
  if (!doc.is_object()) throw InputError("synth config: expected a JSON object");
  SynthConfig cfg;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "n_participants") cfg.n_participants = value.get<int>();
      else if (key == "n_english") cfg.n_english = value.get<int>();
      else if (key == "n_mci") cfg.n_mci = value.get<int>();
      else if (key == "n_english_mci") cfg.n_english_mci = value.get<int>();
      else if (key == "n_male_mci") cfg.n_male_mci = value.get<int>();
      else if (key == "n_male_nc") cfg.n_male_nc = value.get<int>();
      else if (key == "picture_signal_strength") cfg.picture_signal_strength = value.get<double>();
      else if (key == "label_signal_strength") cfg.label_signal_strength = value.get<double>();
      else if (key == "spurious_subgroup_bias") cfg.spurious_subgroup_bias = value.get<double>();
      else if (key == "spurious_language") cfg.spurious_language = parse_language(value.get<std::string>());
      else if (key == "noise_std") cfg.noise_std = value.get<double>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "dims") {
        cfg.dims.clear();
        for (const auto& [name, d] : value.items()) cfg.dims[parse_modality(name)] = d.get<int>();
      } else if (key == "spurious_modalities") {
        cfg.spurious_modalities.clear();
        for (const auto& name : value) cfg.spurious_modalities.push_back(parse_modality(name.get<std::string>()));
      } else {
        throw InputError("synth config: unknown field '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("synth config: wrong value type (") + e.what() + ")");
  }
  return cfg;
}

std::string synth_config_to_json(const SynthConfig& cfg) {
  json dims = json::object();
  for (const auto& [m, d] : cfg.dims) dims[std::string(to_string(m))] = d;
  json spurious = json::array();
  for (Modality m : cfg.spurious_modalities) spurious.push_back(std::string(to_string(m)));
  const json doc = {{"n_participants", cfg.n_participants},
                    {"n_english", cfg.n_english},
                    {"n_mci", cfg.n_mci},
                    {"n_english_mci", cfg.n_english_mci},
                    {"n_male_mci", cfg.n_male_mci},
                    {"n_male_nc", cfg.n_male_nc},
                    {"dims", dims},
                    {"picture_signal_strength", cfg.picture_signal_strength},
                    {"label_signal_strength", cfg.label_signal_strength},
                    {"spurious_subgroup_bias", cfg.spurious_subgroup_bias},
                    {"spurious_language", std::string(to_string(cfg.spurious_language))},
                    {"spurious_modalities", spurious},
                    {"noise_std", cfg.noise_std},
                    {"seed", cfg.seed}};
  return doc.dump(2);
}

}  // namespace poesup
