#include <cmath>

#include <gtest/gtest.h>

#include "poesup/errors.hpp"
#include "poesup/fusion.hpp"
#include "test_support.hpp"

namespace poesup {
namespace {

using testing::random_matrix;

Matrix log_row(double a, double b) {
  Matrix m(1, 2);
  m << std::log(a), std::log(b);
  return m;
}

TEST(Poe, SingleExpertIsItsLogSoftmax) {
  Rng rng(31);
  const Matrix z = random_matrix(rng, 6, 2, 3.0);
  const FusedLogits f = poe_fuse(std::vector<Matrix>{z});
  EXPECT_LE((f.fused - log_softmax_rows(z)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Poe, UniformExpertsStayUniform) {
  const FusedLogits f = poe_fuse(std::vector<Matrix>{log_row(0.5, 0.5), log_row(0.5, 0.5)});
  EXPECT_NEAR(std::exp(f.fused(0, 0)), 0.5, 1e-15);
  EXPECT_NEAR(std::exp(f.fused(0, 1)), 0.5, 1e-15);
}

TEST(Poe, HandProductAndNormalize) {
  const FusedLogits f = poe_fuse(std::vector<Matrix>{log_row(0.8, 0.2), log_row(0.6, 0.4)});
  EXPECT_NEAR(std::exp(f.fused(0, 0)), 0.48 / 0.56, 1e-12);
  EXPECT_NEAR(std::exp(f.fused(0, 0)), 0.857142857, 1e-6);
  EXPECT_NEAR(std::exp(f.fused(0, 1)), 0.142857143, 1e-6);
}

TEST(Poe, FusedRowsNormalized) {
  Rng rng(32);
  const FusedLogits f =
      poe_fuse(std::vector<Matrix>{random_matrix(rng, 5, 2, 4.0), random_matrix(rng, 5, 2, 4.0)});
  for (Index r = 0; r < 5; ++r) EXPECT_NEAR(f.fused.row(r).array().exp().sum(), 1.0, 1e-12);
}

TEST(Poe, ArgmaxInvariantToPerExpertShift) {
  Rng rng(33);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Matrix> experts;
    for (int e = 0; e < 3; ++e) experts.push_back(random_matrix(rng, 4, 2, 3.0));
    const Matrix before = poe_fuse(experts).fused;
    std::vector<Matrix> shifted = experts;
    for (Matrix& m : shifted) m.array() += (200.0 * rng.uniform() - 100.0);
    const Matrix after = poe_fuse(shifted).fused;
    for (Index r = 0; r < 4; ++r) {
      Index a = 0, b = 0;
      before.row(r).maxCoeff(&a);
      after.row(r).maxCoeff(&b);
      ASSERT_EQ(a, b);
    }
  }
}

TEST(Poe, Errors) {
  EXPECT_THROW(poe_fuse(std::vector<Matrix>{}), std::invalid_argument);
  EXPECT_THROW(poe_fuse(std::vector<Matrix>{Matrix::Zero(2, 2), Matrix::Zero(3, 2)}), ShapeError);
}

TEST(Poe, BackwardSumsToZeroPerRow) {
  // Each expert's logits enter through log_softmax, so a common shift has no effect.
  Rng rng(34);
  const FusedLogits f = poe_fuse(std::vector<Matrix>{random_matrix(rng, 3, 2), random_matrix(rng, 3, 2)});
  const std::vector<Matrix> d = poe_fuse_backward(f, random_matrix(rng, 3, 2));
  for (const Matrix& m : d) {
    for (Index r = 0; r < 3; ++r) EXPECT_NEAR(m.row(r).sum(), 0.0, 1e-14);
  }
}

}  // namespace
}  // namespace poesup
