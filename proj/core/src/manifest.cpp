#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "poesup/container.hpp"
#include "poesup/dataset.hpp"
#include "poesup/errors.hpp"

namespace poesup {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

MatrixF read_block(const fs::path& path, Index declared_dim, std::size_t expected_rows,
                   const std::string& modality) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("container file not found for modality '" + modality + "': " + path.string());
  const std::string source = path.string();
  const ContainerHeader header = read_container_header(in, source);
  if (static_cast<Index>(header.dim) != declared_dim) {
    throw InputError(source + ": dim mismatch for modality '" + modality + "': manifest declares " +
                     std::to_string(declared_dim) + ", container header has " +
                     std::to_string(header.dim));
  }
  if (header.rows != expected_rows) {
    throw InputError(source + ": row count mismatch for modality '" + modality + "': manifest lists " +
                     std::to_string(expected_rows) + " samples, container header has " +
                     std::to_string(header.rows) + " rows");
  }
  MatrixF m = read_container_f32(in, header, source);
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (!std::isfinite(m(r, c))) {
        throw InputError(source + ": NaN/Inf in embeddings at row " + std::to_string(r) + ", column " +
                         std::to_string(c));
      }
    }
  }
  return m;
}

template <typename T>
T field(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw InputError(where + ": missing field '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError(where + ": field '" + key + "' has the wrong type (" + e.what() + ")");
  }
}

std::string label_field(const json& obj, const std::string& where) {
  if (!obj.contains("label")) throw InputError(where + ": missing field 'label'");
  const json& v = obj.at("label");
  if (v.is_number_integer()) return std::to_string(v.get<int>());
  if (v.is_string()) return v.get<std::string>();
  throw InputError(where + ": field 'label' must be a string or 0/1");
}

}  // namespace

LoadedDataset load_dataset(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("manifest not found: " + manifest_path.string());
  const std::string mpath = manifest_path.string();
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(mpath + ": invalid JSON (" + e.what() + ")");
  }
  if (!doc.is_object() || !doc.contains("samples") || !doc.contains("modalities") ||
      !doc["samples"].is_array() || !doc["modalities"].is_array()) {
    throw InputError(mpath + ": manifest must be an object with 'samples' and 'modalities' arrays");
  }

  LoadedDataset out;
  Dataset& ds = out.dataset;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < doc["samples"].size(); ++i) {
    const json& js = doc["samples"][i];
    const std::string where = mpath + ": samples[" + std::to_string(i) + "]";
    Sample s;
    s.sample_id = field<std::string>(js, "sample_id", where);
    s.participant_id = field<std::string>(js, "participant_id", where);
    s.picture_id = field<int>(js, "picture_id", where);
    s.language = parse_language(field<std::string>(js, "language", where));
    s.gender = parse_gender(field<std::string>(js, "gender", where));
    s.label = parse_label(label_field(js, where));
    s.row_index = field<std::int64_t>(js, "row_index", where);
    if (!seen.insert(s.sample_id).second) {
      throw InputError(where + ": duplicate sample_id '" + s.sample_id + "'");
    }
    ds.samples.push_back(std::move(s));
  }

  const fs::path base = manifest_path.parent_path();
  for (std::size_t i = 0; i < doc["modalities"].size(); ++i) {
    const json& jm = doc["modalities"][i];
    const std::string where = mpath + ": modalities[" + std::to_string(i) + "]";
    const std::string name = field<std::string>(jm, "name", where);
    const Modality modality = parse_modality(name);
    const auto dim = field<std::int64_t>(jm, "dim", where);
    if (dim <= 0) throw InputError(where + ": dim must be positive");
    if (ds.blocks.contains(modality)) throw InputError(where + ": modality '" + name + "' listed twice");
    ModalityBlock block;
    block.modality = modality;
    block.data = read_block(base / field<std::string>(jm, "file", where), dim, ds.samples.size(), name);
    if (jm.contains("bias_flipped_file")) {
      block.bias_flipped =
          read_block(base / field<std::string>(jm, "bias_flipped_file", where), dim, ds.samples.size(), name);
    }
    ds.blocks.emplace(modality, std::move(block));
  }

  out.warnings = validate_dataset(ds);
  return out;
}

void write_dataset(const Dataset& ds, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());

  json doc;
  doc["samples"] = json::array();
  for (const Sample& s : ds.samples) {
    doc["samples"].push_back({{"sample_id", s.sample_id},
                              {"participant_id", s.participant_id},
                              {"picture_id", s.picture_id},
                              {"language", to_string(s.language)},
                              {"gender", to_string(s.gender)},
                              {"label", to_string(s.label)},
                              {"row_index", s.row_index}});
  }
  doc["modalities"] = json::array();
  for (const auto& [modality, block] : ds.blocks) {
    const std::string name(to_string(modality));
    json jm = {{"name", name}, {"dim", block.dim()}, {"file", name + ".mceb"}};
    write_container_file(dir / (name + ".mceb"), block.data);
    if (block.bias_flipped) {
      jm["bias_flipped_file"] = name + ".flipped.mceb";
      write_container_file(dir / (name + ".flipped.mceb"), *block.bias_flipped);
    }
    doc["modalities"].push_back(std::move(jm));
  }

  const fs::path path = dir / kManifestFileName;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace poesup
