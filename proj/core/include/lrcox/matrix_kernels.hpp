#pragma once

#include <Eigen/Dense>

namespace lrcox {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Target constraint set: rank(B) <= max_rank and at most max_rows nonzero rows.
struct ConstraintPair {
  int max_rank = 1;
  int max_rows = 1;

  /// Throws ConfigError unless 1 <= max_rank <= min(p, J) and 1 <= max_rows <= p.
  void validate(Eigen::Index p, Eigen::Index J) const;
};

/// Thin SVD view U * diag(D) * W' of a rank-r matrix.
///
/// Columns of `left` and `right` are orthonormal, `singular_values` is
/// nonincreasing, and the largest-magnitude entry of every left singular
/// vector is nonnegative so the output is reproducible.
struct Factorization {
  Matrix left;              // p x r
  Vector singular_values;   // r
  Matrix right;             // J x r

  [[nodiscard]] int rank() const { return static_cast<int>(singular_values.size()); }
  [[nodiscard]] Matrix reconstruct() const;
};

enum class ConstraintSet { Rank, RowSparse };

/// Full thin SVD of B with the sign convention above; rank = min(p, J).
Factorization svd(const Matrix& B);

/// Truncated SVD keeping the r leading triplets.
Factorization truncated_svd(const Matrix& B, int r);

/// Nearest (Frobenius) matrix of rank <= r.
Matrix project_rank(const Matrix& B, int r);

/// Keeps the s rows of largest Euclidean norm (lowest index wins ties) and zeroes the rest.
Matrix project_rowsparse(const Matrix& B, int s);

Matrix project(const Matrix& B, ConstraintSet set, int bound);

/// ||B - P_set(B)||_F^2.
double distance_squared(const Matrix& B, ConstraintSet set, int bound);

/// Solves (X' diag(w) X + lambda I) x = rhs.
///
/// Uses the p x p Cholesky system when p <= n and the Woodbury form
///   lambda^{-1} (rhs - X~' (lambda I_n + X~ X~')^{-1} X~ rhs),  X~ = diag(sqrt(w)) X
/// when p > n. Throws SolverError if the inner system is numerically singular.
Vector ridge_regularized_solve(const Matrix& X, const Vector& w, const Vector& rhs, double lambda);

enum class RidgePath { Auto, Direct, Woodbury };

Vector ridge_regularized_solve(const Matrix& X, const Vector& w, const Vector& rhs, double lambda,
                               RidgePath path);

/// Number of rows with any nonzero entry.
int count_nonzero_rows(const Matrix& B);

void require_finite(const Matrix& B, const char* what);

}  // namespace lrcox
