#include "lrcox/matrix_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "lrcox/errors.hpp"

namespace lrcox {

void ConstraintPair::validate(Eigen::Index p, Eigen::Index J) const {
  const auto max_r = std::min(p, J);
  if (max_rank < 1 || max_rank > max_r) {
    throw ConfigError("rank bound must lie in [1, " + std::to_string(max_r) + "], got " +
                      std::to_string(max_rank));
  }
  if (max_rows < 1 || max_rows > p) {
    throw ConfigError("row-sparsity bound must lie in [1, " + std::to_string(p) + "], got " +
                      std::to_string(max_rows));
  }
}

Matrix Factorization::reconstruct() const {
  return left * singular_values.asDiagonal() * right.transpose();
}

void require_finite(const Matrix& B, const char* what) {
  if (!B.allFinite()) throw DataError(std::string(what) + " contains non-finite entries");
}

Factorization svd(const Matrix& B) {
  require_finite(B, "matrix");
  Eigen::JacobiSVD<Matrix> decomposition(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Factorization f{decomposition.matrixU(), decomposition.singularValues(),
                  decomposition.matrixV()};
  for (Eigen::Index k = 0; k < f.left.cols(); ++k) {
    Eigen::Index arg = 0;
    f.left.col(k).cwiseAbs().maxCoeff(&arg);
    if (f.left(arg, k) < 0.0) {
      f.left.col(k) *= -1.0;
      f.right.col(k) *= -1.0;
    }
  }
  return f;
}

Factorization truncated_svd(const Matrix& B, int r) {
  const auto full_rank = std::min(B.rows(), B.cols());
  if (r < 1 || r > full_rank) {
    throw ConfigError("rank bound must lie in [1, " + std::to_string(full_rank) + "], got " +
                      std::to_string(r));
  }
  Factorization f = svd(B);
  return Factorization{f.left.leftCols(r), f.singular_values.head(r), f.right.leftCols(r)};
}

Matrix project_rank(const Matrix& B, int r) {
  const auto full_rank = std::min(B.rows(), B.cols());
  if (r < 1 || r > full_rank) {
    throw ConfigError("rank bound must lie in [1, " + std::to_string(full_rank) + "], got " +
                      std::to_string(r));
  }
  require_finite(B, "matrix");
  if (r == full_rank) return B;
  Matrix out = truncated_svd(B, r).reconstruct();
  // Zero rows of B lie outside its column space; keep them exactly zero.
  for (Eigen::Index i = 0; i < B.rows(); ++i) {
    if ((B.row(i).array() == 0.0).all()) out.row(i).setZero();
  }
  return out;
}

Matrix project_rowsparse(const Matrix& B, int s) {
  const auto p = B.rows();
  if (s < 1 || s > p) {
    throw ConfigError("row-sparsity bound must lie in [1, " + std::to_string(p) + "], got " +
                      std::to_string(s));
  }
  require_finite(B, "matrix");
  if (s == p) return B;
  const Vector norms = B.rowwise().squaredNorm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return norms(a) > norms(b); });
  Matrix out = B;
  for (auto it = order.begin() + s; it != order.end(); ++it) out.row(*it).setZero();
  return out;
}

Matrix project(const Matrix& B, ConstraintSet set, int bound) {
  return set == ConstraintSet::Rank ? project_rank(B, bound) : project_rowsparse(B, bound);
}

double distance_squared(const Matrix& B, ConstraintSet set, int bound) {
  return (B - project(B, set, bound)).squaredNorm();
}

int count_nonzero_rows(const Matrix& B) {
  int count = 0;
  for (Eigen::Index i = 0; i < B.rows(); ++i) {
    if ((B.row(i).array() != 0.0).any()) ++count;
  }
  return count;
}

Vector ridge_regularized_solve(const Matrix& X, const Vector& w, const Vector& rhs, double lambda) {
  return ridge_regularized_solve(X, w, rhs, lambda, RidgePath::Auto);
}

Vector ridge_regularized_solve(const Matrix& X, const Vector& w, const Vector& rhs, double lambda,
                               RidgePath path) {
  const auto n = X.rows();
  const auto p = X.cols();
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("ridge solve needs a positive finite lambda");
  }
  if (w.size() != n || rhs.size() != p) throw DataError("ridge solve: dimension mismatch");
  if (!X.allFinite() || !rhs.allFinite()) throw DataError("ridge solve: non-finite input");
  if (!w.allFinite() || (w.array() <= 0.0).any()) {
    throw DataError("ridge solve: weights must be positive and finite");
  }
  if (path == RidgePath::Auto) path = p > n ? RidgePath::Woodbury : RidgePath::Direct;

  Vector x;
  if (path == RidgePath::Direct) {
    const Matrix Xt = w.cwiseSqrt().asDiagonal() * X;
    Matrix A = Matrix::Zero(p, p);
    A.selfadjointView<Eigen::Lower>().rankUpdate(Xt.transpose());
    A.diagonal().array() += lambda;
    Eigen::LLT<Matrix, Eigen::Lower> llt(A);
    if (llt.info() != Eigen::Success) throw SolverError("ridge solve: p x p system is singular");
    x = llt.solve(rhs);
  } else {
    const Matrix Xt = w.cwiseSqrt().asDiagonal() * X;
    Matrix K = Xt * Xt.transpose();
    K.diagonal().array() += lambda;
    Eigen::LLT<Matrix> llt(K);
    if (llt.info() != Eigen::Success) {
      throw SolverError("ridge solve: n x n Woodbury system is numerically singular; increase lambda");
    }
    const Vector inner = llt.solve(Xt * rhs);
    x = (rhs - Xt.transpose() * inner) / lambda;
  }
  if (!x.allFinite()) throw SolverError("ridge solve produced non-finite values; increase lambda");
  return x;
}

}  // namespace lrcox
