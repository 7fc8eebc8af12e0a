#include "poesup/checkpoint.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "poesup/container.hpp"
#include "poesup/errors.hpp"

namespace poesup {
namespace {

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  return std::filesystem::path(stem.string() + suffix);
}

}  // namespace

void write_checkpoint(const std::filesystem::path& stem, const Checkpoint& ckpt) {
  const auto bin_path = with_suffix(stem, ".bin");
  std::ofstream bin(bin_path, std::ios::binary | std::ios::trunc);
  if (!bin) throw IoError("cannot open " + bin_path.string() + " for writing");

  nlohmann::json index;
  index["format"] = "poesup-checkpoint";
  index["file"] = bin_path.filename().string();
  index["optimizer_step"] = ckpt.optimizer_step;
  index["tensors"] = nlohmann::json::array();
  for (const NamedTensor& t : ckpt.tensors) {
    const auto offset = static_cast<std::int64_t>(bin.tellp());
    write_container(bin, t.value);
    index["tensors"].push_back({{"name", t.name}, {"rows", t.value.rows()}, {"cols", t.value.cols()},
                                {"offset", offset}});
  }
  bin.flush();
  if (!bin) throw IoError("failed writing " + bin_path.string());

  const auto json_path = with_suffix(stem, ".json");
  std::ofstream js(json_path, std::ios::trunc);
  if (!js) throw IoError("cannot open " + json_path.string() + " for writing");
  js << index.dump(2) << '\n';
  if (!js) throw IoError("failed writing " + json_path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& stem) {
  const auto json_path = with_suffix(stem, ".json");
  std::ifstream js(json_path);
  if (!js) throw IoError("checkpoint index not found: " + json_path.string());
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(json_path.string() + ": invalid JSON (" + e.what() + ")");
  }

  const auto bin_path = json_path.parent_path() / index.at("file").get<std::string>();
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw IoError("checkpoint data not found: " + bin_path.string());

  Checkpoint ckpt;
  ckpt.optimizer_step = index.value("optimizer_step", std::int64_t{0});
  for (const auto& entry : index.at("tensors")) {
    const std::string name = entry.at("name").get<std::string>();
    bin.seekg(entry.at("offset").get<std::int64_t>());
    const std::string source = bin_path.string() + " [" + name + "]";
    const ContainerHeader header = read_container_header(bin, source);
    if (header.rows != entry.at("rows").get<std::uint32_t>() || header.dim != entry.at("cols").get<std::uint32_t>()) {
      throw InputError(source + ": record shape disagrees with the index");
    }
    ckpt.tensors.push_back({name, read_container_f64(bin, header, source)});
  }
  return ckpt;
}

}  // namespace poesup
