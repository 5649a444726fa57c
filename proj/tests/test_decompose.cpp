#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "mol/decompose.hpp"
#include "mol/workload.hpp"

using namespace mol;

namespace {

Eigen::MatrixXd random_matrix(std::uint64_t seed, std::int64_t rows,
                              std::int64_t cols) {
  SplitMix64 rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (std::int64_t i = 0; i < rows; ++i) {
    for (std::int64_t j = 0; j < cols; ++j) m(i, j) = rng.gaussian();
  }
  return m;
}

double matrix_rank_relative_tail(const Eigen::MatrixXd& m, int d) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (d >= s.size()) return 0.0;
  return s(d) / s(0);
}

// Max abs reconstruction error relative to the matrix magnitude.
double scaled_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-30);
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

TEST(Decompose, RankDeficientSingleComponent) {
  Eigen::MatrixXd a(2, 2);
  a << 1, 2, 2, 4;  // rank 1
  auto dec = decompose(a, 2);
  EXPECT_TRUE(dec.rank_deficient);
  EXPECT_EQ(dec.lambda_min, dec.lambda_max);
  EXPECT_TRUE((dec.pi.array() == 1.0).all());
  EXPECT_LT(scaled_error(a, dec.reconstruct()), 1e-12);
}

TEST(Decompose, UniformScalingOfLowRankMatrix) {
  // A = c * T with T of rank exactly d: the rank test folds this into the
  // single-component branch with constant lambda.
  Eigen::MatrixXd left = random_matrix(1, 8, 2);
  Eigen::MatrixXd right = random_matrix(2, 2, 11);
  Eigen::MatrixXd a = 3.0 * left * right;
  auto dec = decompose(a, 2);
  EXPECT_TRUE(dec.rank_deficient);
  EXPECT_EQ(dec.lambda_min, dec.lambda_max);
  EXPECT_TRUE((dec.pi.array() == 1.0).all());
  EXPECT_LT(scaled_error(a, dec.reconstruct()), 1e-9);
}

TEST(Decompose, RandomFullRankDirectAssembly) {
  Eigen::MatrixXd a = random_matrix(7, 6, 9);
  auto dec = decompose(a, 2);
  EXPECT_FALSE(dec.rank_deficient);
  EXPECT_TRUE(dec.degenerate_entries.empty());
  EXPECT_GE(dec.pi.minCoeff(), 0.0);
  EXPECT_LE(dec.pi.maxCoeff(), 1.0);

  // Direct assembly from the certificate parts.
  Eigen::MatrixXd assembled =
      (dec.pi.array() * dec.b1().array() +
       (1.0 - dec.pi.array()) * dec.b2().array())
          .matrix();
  EXPECT_LT(scaled_error(a, assembled), 1e-6);
  EXPECT_LT(scaled_error(a, dec.reconstruct()), 1e-6);
}

TEST(Decompose, FactorRanksStayBounded) {
  Eigen::MatrixXd a = random_matrix(8, 12, 20);
  for (int d : {1, 2, 5}) {
    auto dec = decompose(a, d);
    EXPECT_LT(matrix_rank_relative_tail(dec.b1(), d), 1e-8);
    EXPECT_LT(matrix_rank_relative_tail(dec.b2(), d), 1e-8);
  }
}

TEST(Decompose, LemmaOneBranchTracksNumericalRank) {
  // Rank exactly 3: d = 3 goes single-component, d = 2 does not.
  Eigen::MatrixXd a = random_matrix(9, 10, 3) * random_matrix(10, 3, 14);
  EXPECT_TRUE(decompose(a, 3).rank_deficient);
  EXPECT_FALSE(decompose(a, 2).rank_deficient);
}

TEST(Decompose, ArgumentErrors) {
  Eigen::MatrixXd a = random_matrix(11, 4, 6);
  EXPECT_THROW(decompose(a, 0), ArgumentError);
  EXPECT_THROW(decompose(a, 5), ArgumentError);
  Eigen::MatrixXd bad = a;
  bad(1, 2) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(decompose(bad, 2), ArgumentError);
}

TEST(Decompose, TallInputIsTransposedInternally) {
  Eigen::MatrixXd a = random_matrix(12, 9, 5);  // 9 rows > 5 cols
  auto dec = decompose(a, 2);
  EXPECT_TRUE(dec.transposed);
  EXPECT_EQ(dec.rows, 5);
  EXPECT_EQ(dec.cols, 9);
  Eigen::MatrixXd recon = dec.reconstruct();
  EXPECT_EQ(recon.rows(), 9);
  EXPECT_EQ(recon.cols(), 5);
  EXPECT_LT(scaled_error(a, recon), 1e-6);
}

TEST(ToMolInstance, RankDeficientScoresExactly) {
  Eigen::MatrixXd a(2, 3);
  a << 1, 2, 3, 2, 4, 6;  // rank 1
  auto dec = decompose(a, 2);
  auto instance = to_mol_instance(dec);
  for (std::int64_t i = 0; i < 2; ++i) {
    for (std::int64_t j = 0; j < 3; ++j) {
      EXPECT_NEAR(mol_score(instance.queries[size_t(i)], instance.index, j,
                            instance.gate),
                  a(i, j), 1e-9);
    }
  }
}

TEST(ToMolInstance, ConstantLambdaAnyPiWorks) {
  Eigen::MatrixXd a = 3.0 * random_matrix(21, 6, 2) * random_matrix(22, 2, 9);
  auto dec = decompose(a, 2);
  auto instance = to_mol_instance(dec);
  // Both components hold the same scaled column, so scores agree with A
  // regardless of the blend.
  const double scale = a.cwiseAbs().maxCoeff();
  for (std::int64_t i = 0; i < a.rows(); ++i) {
    for (std::int64_t j = 0; j < a.cols(); ++j) {
      auto dots = component_dots(instance.queries[size_t(i)], instance.index, j);
      EXPECT_NEAR(dots[0], dots[1], 1e-9 * scale);
      EXPECT_NEAR(mol_score(instance.queries[size_t(i)], instance.index, j,
                            instance.gate),
                  a(i, j), 1e-9 * scale);
    }
  }
}

TEST(ToMolInstance, RandomFullRankScoreMatrixMatches) {
  Eigen::MatrixXd a = random_matrix(23, 6, 9);
  auto dec = decompose(a, 2);
  ASSERT_TRUE(dec.degenerate_entries.empty());
  auto instance = to_mol_instance(dec);
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-30);
  for (std::int64_t i = 0; i < a.rows(); ++i) {
    for (std::int64_t j = 0; j < a.cols(); ++j) {
      const double s = mol_score(instance.queries[size_t(i)], instance.index,
                                 j, instance.gate);
      EXPECT_LE(std::abs(s - a(i, j)) / scale, 1e-6)
          << "entry (" << i << "," << j << ")";
    }
  }
}

// Round-trip property over a spread of shapes and ranks.
TEST(ToMolInstance, RoundTripProperty) {
  SplitMix64 pick(31);
  for (int trial = 0; trial < 24; ++trial) {
    const std::int64_t rows = 3 + std::int64_t(pick.below(30));
    const std::int64_t cols = rows + std::int64_t(pick.below(33));
    for (int d : {1, 2, 8}) {
      if (d > std::min(rows, cols)) continue;
      Eigen::MatrixXd a = random_matrix(1000 + std::uint64_t(trial) * 7 +
                                            std::uint64_t(d),
                                        rows, cols);
      auto dec = decompose(a, d);
      ASSERT_GE(dec.pi.minCoeff(), 0.0);
      ASSERT_LE(dec.pi.maxCoeff(), 1.0);
      ASSERT_TRUE(dec.degenerate_entries.empty());
      auto instance = to_mol_instance(dec);
      const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-30);
      double max_err = 0.0;
      for (std::int64_t i = 0; i < rows; ++i) {
        for (std::int64_t j = 0; j < cols; ++j) {
          const double s = mol_score(instance.queries[size_t(i)],
                                     instance.index, j, instance.gate);
          max_err = std::max(max_err, std::abs(s - a(i, j)) / scale);
        }
      }
      ASSERT_LE(max_err, 1e-6) << rows << "x" << cols << " d=" << d;
    }
  }
}
