#include "robshrink/numkit.hpp"

#include <cmath>
#include <random>
#include <string>

namespace robshrink {

namespace {

bool all_finite(const Matrix &m) { return m.allFinite(); }

} // namespace

DataMatrix::DataMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 2) {
    throw InvalidInput("DataMatrix: need at least 2 observations, got " +
                       std::to_string(values_.rows()));
  }
  if (values_.cols() < 1) {
    throw InvalidInput("DataMatrix: need at least 1 variable");
  }
  if (!all_finite(values_)) {
    throw InvalidInput("DataMatrix: non-finite entry");
  }
}

SymMatrix::SymMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() != values_.cols() || values_.rows() == 0) {
    throw InvalidInput("SymMatrix: matrix must be square and non-empty");
  }
  if (!all_finite(values_)) {
    throw InvalidInput("SymMatrix: non-finite entry");
  }
  const double scale = values_.cwiseAbs().maxCoeff();
  const double asym = (values_ - values_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    throw InvalidInput("SymMatrix: matrix is not symmetric (max |A - A'| = " +
                       std::to_string(asym) + ")");
  }
}

SymMatrix SymMatrix::symmetrized(const Matrix &m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw InvalidInput("SymMatrix: matrix must be square and non-empty");
  }
  if (!all_finite(m)) {
    throw InvalidInput("SymMatrix: non-finite entry");
  }
  Matrix s = 0.5 * (m + m.transpose());
  return SymMatrix(std::move(s), Unchecked{});
}

SpdMatrix::SpdMatrix(SymMatrix base) : base_(std::move(base)) {
  Eigen::LLT<Matrix> llt(base_.values());
  if (llt.info() != Eigen::Success) {
    throw InvalidInput("SpdMatrix: matrix is not positive definite");
  }
}

void apply_sign_convention(Matrix &vectors) {
  for (Index j = 0; j < vectors.cols(); ++j) {
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < vectors.rows(); ++i) {
      const double a = std::abs(vectors(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (vectors(arg, j) < 0.0) {
      vectors.col(j) *= -1.0;
    }
  }
}

EigenSystem eig_sym(const Matrix &symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric);
  if (solver.info() != Eigen::Success) {
    throw DecompositionError("eig_sym: symmetric eigensolver did not converge");
  }
  EigenSystem es{solver.eigenvectors(), solver.eigenvalues()};
  apply_sign_convention(es.vectors);
  return es;
}

EigenSystem eig_sym(const SymMatrix &a) { return eig_sym(a.values()); }

SpdMatrix trace_normalize(const SpdMatrix &a, double target) {
  if (!(target > 0.0)) {
    throw InvalidInput("trace_normalize: target must be positive");
  }
  const double tr = a.trace();
  if (!(tr > 0.0)) {
    throw InvalidInput("trace_normalize: trace must be positive");
  }
  return SpdMatrix(SymMatrix::symmetrized(a.values() * (target / tr)));
}

Matrix random_rotation(Index p, std::uint64_t seed) {
  if (p < 2) {
    throw InvalidInput("random_rotation: need p >= 2");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix g(p, p);
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < p; ++i) {
      g(i, j) = normal(rng);
    }
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < p; ++j) {
    if (r(j, j) < 0.0) {
      q.col(j) *= -1.0;
    }
  }
  // Haar on O(p); flip one column to land in SO(p).
  if (q.determinant() < 0.0) {
    q.col(0) *= -1.0;
  }
  return q;
}

Matrix reconstruct(const Matrix &vectors, const Vector &values) {
  return vectors * values.asDiagonal() * vectors.transpose();
}

} // namespace robshrink
