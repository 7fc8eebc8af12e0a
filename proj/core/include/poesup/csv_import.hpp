#pragma once

#include <filesystem>
#include <map>

#include "poesup/dataset.hpp"

namespace poesup {

/// Interoperability path for corpora exported as CSV.
///
/// `samples_csv` has the header `sample_id,participant_id,picture_id,language,gender,label`;
/// rows are assigned row_index in file order. Each sidecar CSV holds one line per
/// sample: `sample_id,v1,...,vD`, optionally preceded by a header whose first cell is
/// `sample_id`. Sidecar lines may come in any order; every sample needs exactly one.
struct CsvImportSpec {
  std::filesystem::path samples_csv;
  std::map<Modality, std::filesystem::path> embeddings;
};

/// Builds and validates a Dataset. Errors cite file and line.
LoadedDataset import_csv(const CsvImportSpec& spec);

}  // namespace poesup
