#pragma once

#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "poesup/numerics.hpp"
#include "poesup/rng.hpp"
#include "poesup/synth.hpp"

namespace poesup::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    std::string name = "poesup_";
    if (info != nullptr) name += std::string(info->test_suite_name()) + "_" + info->name();
    path_ = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::permissions(path_, std::filesystem::perms::owner_all, ec);
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline Matrix random_matrix(Rng& rng, Index rows, Index cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

/// Small synthetic corpus: 20 participants (60 samples) with low dims.
inline SynthConfig small_synth(std::uint64_t seed = 0) {
  SynthConfig cfg;
  cfg.n_participants = 20;
  cfg.n_english = 10;
  cfg.n_mci = 10;
  cfg.n_english_mci = 5;
  cfg.n_male_mci = 5;
  cfg.n_male_nc = 5;
  cfg.dims = {{Modality::Speech, 6}, {Modality::Acoustic, 4}, {Modality::Text, 8}, {Modality::Image, 5}};
  cfg.seed = seed;
  return cfg;
}

}  // namespace poesup::testing
