#include "poesup/csv_import.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "poesup/errors.hpp"

namespace poesup {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string at_line(const std::filesystem::path& path, std::size_t line_no) {
  return path.string() + ":" + std::to_string(line_no);
}

float parse_float(const std::string& cell, const std::string& where) {
  char* end = nullptr;
  const float v = std::strtof(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size()) {
    throw InputError(where + ": '" + cell + "' is not a number");
  }
  if (!std::isfinite(v)) throw InputError(where + ": NaN/Inf in embeddings");
  return v;
}

int parse_int(const std::string& cell, const std::string& where) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
    throw InputError(where + ": '" + cell + "' is not an integer");
  }
  return v;
}

}  // namespace

LoadedDataset import_csv(const CsvImportSpec& spec) {
  std::ifstream in(spec.samples_csv);
  if (!in) throw IoError("samples CSV not found: " + spec.samples_csv.string());

  static const std::vector<std::string> kHeader = {"sample_id", "participant_id", "picture_id",
                                                   "language",  "gender",         "label"};
  LoadedDataset out;
  Dataset& ds = out.dataset;
  std::unordered_map<std::string, std::size_t> index_of;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    const std::string where = at_line(spec.samples_csv, line_no);
    if (!header_seen) {
      if (cells != kHeader) {
        throw InputError(where + ": expected header sample_id,participant_id,picture_id,language,gender,label");
      }
      header_seen = true;
      continue;
    }
    if (cells.size() != kHeader.size()) {
      throw InputError(where + ": expected 6 columns, found " + std::to_string(cells.size()));
    }
    Sample s;
    s.sample_id = cells[0];
    s.participant_id = cells[1];
    s.picture_id = parse_int(cells[2], where);
    try {
      s.language = parse_language(cells[3]);
      s.gender = parse_gender(cells[4]);
      s.label = parse_label(cells[5]);
    } catch (const InputError& e) {
      throw InputError(where + ": " + e.what());
    }
    s.row_index = static_cast<std::int64_t>(ds.samples.size());
    if (!index_of.emplace(s.sample_id, ds.samples.size()).second) {
      throw InputError(where + ": duplicate sample_id '" + s.sample_id + "'");
    }
    ds.samples.push_back(std::move(s));
  }
  if (!header_seen) throw InputError(spec.samples_csv.string() + ": empty samples CSV");

  for (const auto& [modality, path] : spec.embeddings) {
    std::ifstream emb(path);
    if (!emb) throw IoError("embedding CSV not found: " + path.string());
    std::vector<std::vector<float>> rows(ds.samples.size());
    std::vector<bool> filled(ds.samples.size(), false);
    Index dim = -1;
    line_no = 0;
    while (std::getline(emb, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      const auto cells = split_csv_line(line);
      const std::string where = at_line(path, line_no);
      if (cells.front() == "sample_id") continue;
      if (cells.size() < 2) throw InputError(where + ": expected sample_id followed by values");
      const auto it = index_of.find(cells[0]);
      if (it == index_of.end()) throw InputError(where + ": unknown sample_id '" + cells[0] + "'");
      if (filled[it->second]) throw InputError(where + ": second row for sample_id '" + cells[0] + "'");
      const auto n = static_cast<Index>(cells.size()) - 1;
      if (dim < 0) dim = n;
      if (n != dim) {
        throw InputError(where + ": row has " + std::to_string(n) + " values, expected " + std::to_string(dim));
      }
      auto& row = rows[it->second];
      row.reserve(static_cast<std::size_t>(n));
      for (std::size_t c = 1; c < cells.size(); ++c) {
        row.push_back(parse_float(cells[c], where + " column " + std::to_string(c)));
      }
      filled[it->second] = true;
    }
    for (std::size_t i = 0; i < filled.size(); ++i) {
      if (!filled[i]) {
        throw InputError(path.string() + ": no embedding row for sample_id '" + ds.samples[i].sample_id + "'");
      }
    }
    if (dim < 0) throw InputError(path.string() + ": no embedding rows");
    ModalityBlock block;
    block.modality = modality;
    block.data.resize(static_cast<Index>(rows.size()), dim);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (Index c = 0; c < dim; ++c) block.data(static_cast<Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    }
    ds.blocks.emplace(modality, std::move(block));
  }

  out.warnings = validate_dataset(ds);
  return out;
}

}  // namespace poesup
