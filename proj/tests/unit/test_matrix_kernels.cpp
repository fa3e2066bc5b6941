#include <gtest/gtest.h>

#include <random>

#include "lrcox/errors.hpp"
#include "lrcox/matrix_kernels.hpp"
#include "oracles.hpp"

using namespace lrcox;

TEST(Svd, ReconstructsAndIsOrthonormal) {
  std::mt19937_64 gen(3);
  const Matrix B = oracle::random_matrix(gen, 7, 4);
  const auto f = svd(B);
  EXPECT_EQ(f.rank(), 4);
  EXPECT_LT((f.reconstruct() - B).norm(), 1e-12);
  EXPECT_LT((f.left.transpose() * f.left - Matrix::Identity(4, 4)).norm(), 1e-12);
  EXPECT_LT((f.right.transpose() * f.right - Matrix::Identity(4, 4)).norm(), 1e-12);
  for (int k = 1; k < f.rank(); ++k) EXPECT_GE(f.singular_values(k - 1), f.singular_values(k));
}

TEST(Svd, SignConventionMakesLargestLeftEntryNonnegative) {
  std::mt19937_64 gen(5);
  const Matrix B = oracle::random_matrix(gen, 6, 3);
  const auto a = svd(B);
  const auto b = svd(-B);
  for (int k = 0; k < a.rank(); ++k) {
    Eigen::Index idx;
    a.left.col(k).cwiseAbs().maxCoeff(&idx);
    EXPECT_GE(a.left(idx, k), 0.0);
  }
  EXPECT_LT((a.left - b.left).norm(), 1e-12);
  EXPECT_LT((a.right + b.right).norm(), 1e-12);
}

TEST(ProjectRank, MatchesEigenOracle) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix B = oracle::random_matrix(gen, 8, 5);
    for (int r = 1; r <= 5; ++r) {
      EXPECT_LT((project_rank(B, r) - oracle::rank_projection(B, r)).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(ProjectRank, FullRankIsIdentityAndIdempotent) {
  std::mt19937_64 gen(8);
  const Matrix B = oracle::random_matrix(gen, 5, 3);
  EXPECT_LT((project_rank(B, 3) - B).norm(), 1e-12);
  const Matrix P = project_rank(B, 2);
  EXPECT_LT((project_rank(P, 2) - P).norm(), 1e-12);
}

TEST(ProjectRank, PreservesZeroRows) {
  std::mt19937_64 gen(9);
  Matrix B = oracle::random_matrix(gen, 6, 4);
  B.row(2).setZero();
  B.row(5).setZero();
  const Matrix P = project_rank(B, 1);
  EXPECT_EQ(P.row(2).squaredNorm(), 0.0);
  EXPECT_EQ(P.row(5).squaredNorm(), 0.0);
}

TEST(ProjectRowsparse, MatchesExhaustiveOracle) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix B = oracle::random_matrix(gen, 6, 3);
    for (int s = 1; s <= 6; ++s) {
      EXPECT_EQ((project_rowsparse(B, s) - oracle::rowsparse_projection(B, s)).cwiseAbs().maxCoeff(), 0.0);
    }
  }
}

TEST(ProjectRowsparse, TiesKeepLowestIndex) {
  Matrix B(3, 1);
  B << 1.0, -1.0, 1.0;
  const Matrix P = project_rowsparse(B, 2);
  EXPECT_EQ(P(0, 0), 1.0);
  EXPECT_EQ(P(1, 0), -1.0);
  EXPECT_EQ(P(2, 0), 0.0);
  EXPECT_EQ(count_nonzero_rows(P), 2);
}

TEST(Distance, MatchesProjectionResidual) {
  std::mt19937_64 gen(12);
  const Matrix B = oracle::random_matrix(gen, 5, 4);
  EXPECT_NEAR(distance_squared(B, ConstraintSet::Rank, 2), (B - project_rank(B, 2)).squaredNorm(), 1e-12);
  EXPECT_NEAR(distance_squared(B, ConstraintSet::RowSparse, 3), (B - project_rowsparse(B, 3)).squaredNorm(), 1e-12);
  EXPECT_EQ(distance_squared(B, ConstraintSet::RowSparse, 5), 0.0);
}

TEST(RidgeSolve, DirectAndWoodburyAgreeWithDenseSolve) {
  std::mt19937_64 gen(13);
  for (auto [n, p] : {std::pair{20, 5}, std::pair{6, 30}}) {
    const Matrix X = oracle::random_matrix(gen, n, p);
    const Vector w = oracle::random_matrix(gen, n, 1).cwiseAbs().array() + 0.1;
    const Vector rhs = oracle::random_matrix(gen, p, 1);
    const double lambda = 0.7;
    const Matrix A = X.transpose() * w.asDiagonal() * X + lambda * Matrix::Identity(p, p);
    const Vector expected = A.fullPivLu().solve(rhs);
    for (auto path : {RidgePath::Auto, RidgePath::Direct, RidgePath::Woodbury}) {
      EXPECT_LT((ridge_regularized_solve(X, w, rhs, lambda, path) - expected).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(Constraints, ValidateRejectsOutOfRange) {
  EXPECT_THROW((ConstraintPair{0, 3}.validate(5, 4)), ConfigError);
  EXPECT_THROW((ConstraintPair{5, 3}.validate(5, 4)), ConfigError);
  EXPECT_THROW((ConstraintPair{2, 6}.validate(5, 4)), ConfigError);
  EXPECT_NO_THROW((ConstraintPair{4, 5}.validate(5, 4)));
}

TEST(RequireFinite, ThrowsOnNan) {
  Matrix B = Matrix::Zero(2, 2);
  B(1, 0) = std::nan("");
  EXPECT_THROW(require_finite(B, "B"), DataError);
}
