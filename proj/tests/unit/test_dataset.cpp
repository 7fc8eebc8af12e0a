#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "poesup/container.hpp"
#include "poesup/csv_import.hpp"
#include "poesup/dataset.hpp"
#include "poesup/errors.hpp"
#include "poesup/synth.hpp"
#include "test_support.hpp"

namespace poesup {
namespace {

using testing::small_synth;
using testing::TempDir;
namespace fs = std::filesystem;

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

// ---------------------------------------------------------------- synthetic

TEST(Synth, DefaultCountsMatchCorpus) {
  const Dataset ds = generate_synthetic(SynthConfig{});
  EXPECT_EQ(ds.size(), 387u);
  int mci = 0;
  for (const Sample& s : ds.samples) mci += s.label == CognitiveLabel::MCI;
  EXPECT_EQ(mci, 222);
  EXPECT_EQ(static_cast<int>(ds.size()) - mci, 165);
  EXPECT_EQ(ds.block(Modality::Text).dim(), 768);
  EXPECT_TRUE(validate_dataset(ds).empty());
}

TEST(Synth, SameSeedBitIdentical) {
  EXPECT_EQ(generate_synthetic(small_synth(5)), generate_synthetic(small_synth(5)));
  EXPECT_FALSE(generate_synthetic(small_synth(5)) == generate_synthetic(small_synth(6)));
}

TEST(Synth, EveryParticipantHasItsLanguageTriple) {
  const Dataset ds = generate_synthetic(SynthConfig{});
  std::map<std::string, std::set<int>> pictures;
  std::map<std::string, Language> language;
  for (const Sample& s : ds.samples) {
    pictures[s.participant_id].insert(s.picture_id);
    language[s.participant_id] = s.language;
  }
  EXPECT_EQ(pictures.size(), 129u);
  for (const auto& [pid, pics] : pictures) {
    const std::set<int> expected = language[pid] == Language::En ? std::set<int>{1, 2, 3} : std::set<int>{4, 5, 6};
    EXPECT_EQ(pics, expected) << pid;
  }
}

// Rows of one picture, as a matrix in double precision.
Matrix picture_rows(const Dataset& ds, Modality m, int picture) {
  std::vector<Index> rows;
  for (const Sample& s : ds.samples) {
    if (s.picture_id == picture) rows.push_back(s.row_index);
  }
  Matrix out(static_cast<Index>(rows.size()), ds.block(m).dim());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Index>(i)) = ds.block(m).data.row(rows[i]).cast<double>();
  }
  return out;
}

TEST(Synth, ZeroSignalPictureMeansIndistinguishable) {
  // Known-variance two-sample test of equal mean vectors: under H0,
  // |m1 - m2|^2 / (sigma^2 (1/n1 + 1/n2)) ~ chi^2_d, approximated as normal for large d.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SynthConfig cfg;
    cfg.picture_signal_strength = 0.0;
    cfg.label_signal_strength = 0.0;
    cfg.noise_std = 1.0;
    cfg.seed = seed;
    const Dataset ds = generate_synthetic(cfg);
    for (auto [a, b] : {std::pair{1, 2}, std::pair{4, 6}}) {
      const Matrix x = picture_rows(ds, Modality::Text, a);
      const Matrix y = picture_rows(ds, Modality::Text, b);
      const double d = static_cast<double>(x.cols());
      const double scale = 1.0 / static_cast<double>(x.rows()) + 1.0 / static_cast<double>(y.rows());
      const double stat = (x.colwise().mean() - y.colwise().mean()).squaredNorm() / scale;
      const double z = (stat - d) / std::sqrt(2.0 * d);
      const double p = std::erfc(std::abs(z) / std::sqrt(2.0));
      EXPECT_GT(p, 0.01) << "seed " << seed << " pictures " << a << "/" << b;
    }
  }
}

double mean_centroid_distance(const Dataset& ds, Modality m) {
  std::vector<RowVector> centroids;
  for (int p = 1; p <= 6; ++p) centroids.push_back(picture_rows(ds, m, p).colwise().mean());
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < centroids.size(); ++i) {
    for (std::size_t j = i + 1; j < centroids.size(); ++j, ++n) sum += (centroids[i] - centroids[j]).norm();
  }
  return sum / n;
}

TEST(Synth, PictureStrengthIncreasesCentroidDistance) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    double previous = -1.0;
    for (double strength : {0.5, 1.0, 2.0}) {
      SynthConfig cfg;
      cfg.picture_signal_strength = strength;
      cfg.seed = seed;
      const double d = mean_centroid_distance(generate_synthetic(cfg), Modality::Image);
      EXPECT_GT(d, previous) << "seed " << seed << " strength " << strength;
      previous = d;
    }
  }
}

TEST(Synth, BiasFlippedCopyOnlyWhenBiased) {
  SynthConfig cfg = small_synth();
  EXPECT_FALSE(generate_synthetic(cfg).block(Modality::Text).bias_flipped.has_value());
  cfg.spurious_subgroup_bias = 0.5;
  cfg.spurious_modalities = {Modality::Text};
  const Dataset ds = generate_synthetic(cfg);
  const ModalityBlock& text = ds.block(Modality::Text);
  ASSERT_TRUE(text.bias_flipped.has_value());
  for (const Sample& s : ds.samples) {
    const bool same = text.data.row(s.row_index) == text.bias_flipped->row(s.row_index);
    EXPECT_EQ(same, s.language != cfg.spurious_language) << s.sample_id;
  }
  // Modalities outside the spurious set keep identical rows.
  const ModalityBlock& speech = ds.block(Modality::Speech);
  EXPECT_EQ(speech.data, *speech.bias_flipped);
}

TEST(Synth, InvalidConfigRejected) {
  SynthConfig cfg;
  cfg.noise_std = 0.0;
  EXPECT_THROW(generate_synthetic(cfg), InputError);
  cfg = SynthConfig{};
  cfg.spurious_subgroup_bias = 1.5;
  EXPECT_THROW(validate(cfg), InputError);
  cfg = SynthConfig{};
  cfg.dims[Modality::Text] = 0;
  EXPECT_THROW(validate(cfg), InputError);
}

TEST(Synth, ConfigJsonRoundTrip) {
  SynthConfig cfg = small_synth(9);
  cfg.spurious_subgroup_bias = 0.25;
  cfg.spurious_modalities = {Modality::Speech, Modality::Text};
  EXPECT_EQ(synth_config_from_json(synth_config_to_json(cfg)), cfg);
  EXPECT_THROW(synth_config_from_json(R"({"bogus": 1})"), InputError);
}

// ----------------------------------------------------------------- storage

TEST(Container, HeaderLayout) {
  MatrixF m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  std::ostringstream out;
  write_container(out, m);
  const std::string bytes = out.str();
  ASSERT_EQ(bytes.size(), kContainerHeaderBytes + 6 * 4);
  EXPECT_EQ(bytes.substr(0, 4), "MCEB");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 0x01);
  EXPECT_EQ(static_cast<unsigned char>(bytes[5]), 2);
  EXPECT_EQ(static_cast<unsigned char>(bytes[9]), 3);
  float first = 0.0f;
  std::memcpy(&first, bytes.data() + kContainerHeaderBytes, 4);
  EXPECT_EQ(first, 1.0f);
}

TEST(Container, BadMagicRejected) {
  std::istringstream in(std::string("XXXX\x01\0\0\0\0\0\0\0\0", 13));
  EXPECT_THROW(read_container_header(in, "mem"), InputError);
}

TEST(Dataset, WriteLoadRoundTripIsBitExact) {
  TempDir dir;
  SynthConfig cfg = small_synth(3);
  cfg.spurious_subgroup_bias = 0.4;
  const Dataset ds = generate_synthetic(cfg);
  write_dataset(ds, dir.path());
  const LoadedDataset loaded = load_dataset(dir.path() / "manifest.json");
  EXPECT_TRUE(loaded.warnings.empty());
  EXPECT_EQ(loaded.dataset, ds);
}

TEST(Dataset, EmptyDatasetRoundTrips) {
  TempDir dir;
  Dataset ds;
  ModalityBlock block;
  block.modality = Modality::Text;
  block.data.resize(0, 4);
  ds.blocks.emplace(Modality::Text, block);
  write_dataset(ds, dir.path());
  const LoadedDataset loaded = load_dataset(dir.path() / "manifest.json");
  EXPECT_EQ(loaded.dataset.size(), 0u);
  EXPECT_EQ(loaded.dataset.block(Modality::Text).dim(), 4);
}

TEST(Dataset, WriteToReadOnlyDirFails) {
  if (::geteuid() == 0) GTEST_SKIP() << "root ignores directory permissions";
  TempDir dir;
  fs::permissions(dir.path(), fs::perms::owner_read | fs::perms::owner_exec);
  EXPECT_THROW(write_dataset(generate_synthetic(small_synth()), dir.path() / "sub"), IoError);
}

TEST(Dataset, WriteOverRegularFileFails) {
  TempDir dir;
  write_file(dir.path() / "occupied", "x");
  EXPECT_THROW(write_dataset(generate_synthetic(small_synth()), dir.path() / "occupied"), IoError);
}

TEST(Dataset, MissingManifest) {
  TempDir dir;
  const std::string msg = error_of([&] { load_dataset(dir.path() / "manifest.json"); });
  EXPECT_NE(msg.find("manifest not found"), std::string::npos) << msg;
  EXPECT_THROW(load_dataset(dir.path() / "manifest.json"), IoError);
}

TEST(Dataset, SixSamplesTwoModalities) {
  TempDir dir;
  Dataset ds = generate_synthetic(small_synth());
  ds.samples.resize(6);
  for (Modality m : {Modality::Speech, Modality::Image}) ds.blocks.erase(m);
  for (auto& [m, block] : ds.blocks) block.data.conservativeResize(6, block.data.cols());
  write_dataset(ds, dir.path());
  const LoadedDataset loaded = load_dataset(dir.path() / "manifest.json");
  EXPECT_EQ(loaded.dataset.size(), 6u);
  EXPECT_EQ(loaded.dataset.blocks.size(), 2u);
  EXPECT_EQ(loaded.dataset.block(Modality::Text).dim(), 8);
  EXPECT_EQ(loaded.dataset.block(Modality::Acoustic).dim(), 4);
}

TEST(Dataset, DimMismatchNamesBothValues) {
  TempDir dir;
  write_dataset(generate_synthetic(small_synth()), dir.path());
  nlohmann::json manifest = read_json(dir.path() / "manifest.json");
  for (auto& m : manifest["modalities"]) {
    if (m["name"] == "text") m["dim"] = 768;
  }
  write_file(dir.path() / "manifest.json", manifest.dump());
  // Container for text declares 8 columns.
  const std::string msg = error_of([&] { load_dataset(dir.path() / "manifest.json"); });
  EXPECT_NE(msg.find("dim mismatch"), std::string::npos) << msg;
  EXPECT_NE(msg.find("768"), std::string::npos) << msg;
  EXPECT_NE(msg.find("8"), std::string::npos) << msg;
  EXPECT_NE(msg.find("text.mceb"), std::string::npos) << msg;
}

TEST(Dataset, NanCitesRow) {
  TempDir dir;
  const Dataset ds = generate_synthetic(small_synth());
  write_dataset(ds, dir.path());
  MatrixF bad = ds.block(Modality::Speech).data;
  bad(3, 2) = std::nanf("");
  write_container_file(dir.path() / "speech.mceb", bad);
  const std::string msg = error_of([&] { load_dataset(dir.path() / "manifest.json"); });
  EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("speech.mceb"), std::string::npos) << msg;
}

TEST(Dataset, DuplicateSampleIdRejected) {
  TempDir dir;
  write_dataset(generate_synthetic(small_synth()), dir.path());
  nlohmann::json manifest = read_json(dir.path() / "manifest.json");
  manifest["samples"][4]["sample_id"] = manifest["samples"][1]["sample_id"];
  write_file(dir.path() / "manifest.json", manifest.dump());
  const std::string msg = error_of([&] { load_dataset(dir.path() / "manifest.json"); });
  EXPECT_NE(msg.find("duplicate sample_id"), std::string::npos) << msg;
  EXPECT_NE(msg.find("samples[4]"), std::string::npos) << msg;
}

TEST(Dataset, MissingContainerFile) {
  TempDir dir;
  write_dataset(generate_synthetic(small_synth()), dir.path());
  fs::remove(dir.path() / "image.mceb");
  EXPECT_THROW(load_dataset(dir.path() / "manifest.json"), IoError);
}

TEST(Dataset, PictureLanguageMismatchIsWarning) {
  Dataset ds = generate_synthetic(small_synth());
  ds.samples[0].picture_id = 5;  // English participant describing a Chinese picture
  const std::vector<std::string> warnings = validate_dataset(ds);
  EXPECT_FALSE(warnings.empty());
  ds.samples[0].picture_id = 7;
  EXPECT_THROW(validate_dataset(ds), InputError);
}

TEST(Dataset, RowIndexOutOfRangeIsError) {
  Dataset ds = generate_synthetic(small_synth());
  ds.samples[2].row_index = 1000;
  EXPECT_THROW(validate_dataset(ds), InputError);
}

// -------------------------------------------------------------- CSV import

TEST(CsvImport, BuildsDatasetAndWritesContainers) {
  TempDir dir;
  write_file(dir.path() / "samples.csv",
             "sample_id,participant_id,picture_id,language,gender,label\n"
             "a,p1,1,En,F,MCI\n"
             "b,p1,2,En,F,1\n"
             "c,p2,4,Zh,M,NC\n");
  write_file(dir.path() / "text.csv", "sample_id,t0,t1\nc,5,6\na,1,2\nb,3,4\n");
  CsvImportSpec spec{dir.path() / "samples.csv", {{Modality::Text, dir.path() / "text.csv"}}};
  const LoadedDataset loaded = import_csv(spec);
  const Dataset& ds = loaded.dataset;
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.samples[1].label, CognitiveLabel::MCI);
  EXPECT_EQ(ds.samples[2].language, Language::Zh);
  const MatrixF& text = ds.block(Modality::Text).data;
  EXPECT_EQ(text(ds.samples[0].row_index, 0), 1.0f);
  EXPECT_EQ(text(ds.samples[2].row_index, 1), 6.0f);
  // Participants with fewer than three pictures are only a warning.
  EXPECT_FALSE(loaded.warnings.empty());

  write_dataset(ds, dir.path() / "out");
  EXPECT_EQ(load_dataset(dir.path() / "out" / "manifest.json").dataset, ds);
}

TEST(CsvImport, ErrorsCiteFileAndLine) {
  TempDir dir;
  write_file(dir.path() / "samples.csv",
             "sample_id,participant_id,picture_id,language,gender,label\n"
             "a,p1,1,En,F,MCI\n"
             "b,p1,2,En,X,NC\n");
  write_file(dir.path() / "text.csv", "a,1\nb,2\n");
  CsvImportSpec spec{dir.path() / "samples.csv", {{Modality::Text, dir.path() / "text.csv"}}};
  const std::string msg = error_of([&] { import_csv(spec); });
  EXPECT_NE(msg.find("samples.csv:3"), std::string::npos) << msg;
}

TEST(CsvImport, MissingEmbeddingRow) {
  TempDir dir;
  write_file(dir.path() / "samples.csv",
             "sample_id,participant_id,picture_id,language,gender,label\n"
             "a,p1,1,En,F,MCI\n"
             "b,p1,2,En,F,NC\n");
  write_file(dir.path() / "text.csv", "a,1,2\n");
  CsvImportSpec spec{dir.path() / "samples.csv", {{Modality::Text, dir.path() / "text.csv"}}};
  EXPECT_THROW(import_csv(spec), InputError);
}

}  // namespace
}  // namespace poesup
