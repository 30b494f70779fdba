#pragma once

// Semantic matrix types and the symmetric eigendecomposition contract shared
// by every estimator in the library.

#include <cstdint>

#include <Eigen/Dense>

#include "robshrink/errors.hpp"

namespace robshrink {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// n observations (rows) by p variables (columns). All entries finite, n >= 2,
// p >= 1.
class DataMatrix {
public:
  explicit DataMatrix(Matrix values);

  const Matrix &values() const noexcept { return values_; }
  Index n() const noexcept { return values_.rows(); }
  Index p() const noexcept { return values_.cols(); }

private:
  Matrix values_;
};

// Square, finite, symmetric to 1e-12 relative to its largest entry.
class SymMatrix {
public:
  explicit SymMatrix(Matrix values);

  // Averages M with its transpose. Used for products like X'X whose rounding
  // leaves a few ulps of asymmetry.
  static SymMatrix symmetrized(const Matrix &m);

  const Matrix &values() const noexcept { return values_; }
  Index dim() const noexcept { return values_.rows(); }
  double trace() const { return values_.trace(); }

private:
  struct Unchecked {};
  SymMatrix(Matrix values, Unchecked) : values_(std::move(values)) {}

  Matrix values_;
};

// Symmetric positive definite; positivity is verified by a Cholesky
// factorization at construction.
class SpdMatrix {
public:
  explicit SpdMatrix(SymMatrix base);
  explicit SpdMatrix(Matrix values) : SpdMatrix(SymMatrix(std::move(values))) {}

  const SymMatrix &sym() const noexcept { return base_; }
  const Matrix &values() const noexcept { return base_.values(); }
  Index dim() const noexcept { return base_.dim(); }
  double trace() const { return base_.trace(); }

  operator const SymMatrix &() const noexcept { return base_; }

private:
  SymMatrix base_;
};

// Orthonormal eigenvectors (columns) with eigenvalues in ascending order.
// Each column's largest-magnitude entry is positive.
struct EigenSystem {
  Matrix vectors;
  Vector values;
};

// Ascending symmetric eigendecomposition with the deterministic sign
// convention applied. Throws DecompositionError if the solver fails.
EigenSystem eig_sym(const SymMatrix &a);
EigenSystem eig_sym(const Matrix &symmetric);

// Flips columns so that each column's largest-magnitude entry is positive.
// Ties in magnitude resolve to the lowest row index.
void apply_sign_convention(Matrix &vectors);

// target * A / Tr(A).
SpdMatrix trace_normalize(const SpdMatrix &a, double target);

// Haar-distributed rotation (det = +1) from the QR factorization of a
// standard Gaussian matrix with the diagonal of R forced positive.
Matrix random_rotation(Index p, std::uint64_t seed);

// V diag(values) V'.
Matrix reconstruct(const Matrix &vectors, const Vector &values);

} // namespace robshrink
