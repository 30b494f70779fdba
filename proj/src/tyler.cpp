#include "robshrink/tyler.hpp"

#include <string>

namespace robshrink {

void FixedPointConfig::validate() const {
  if (!(tol > 0.0)) {
    throw InvalidInput("FixedPointConfig: tol must be positive");
  }
  if (max_iter < 1) {
    throw InvalidInput("FixedPointConfig: max_iter must be at least 1");
  }
}

namespace {

// z_t' H^{-1} z_t for every row, through the Cholesky factor of H.
Vector quadratic_forms(const AngularData &z, const Matrix &h) {
  Eigen::LLT<Matrix> llt(h);
  if (llt.info() != Eigen::Success) {
    throw DecompositionError("Tyler iteration: scatter lost positive definiteness");
  }
  const Matrix solved = llt.matrixL().solve(z.values().transpose());
  return solved.colwise().squaredNorm().transpose();
}

Matrix weighted_scatter(const AngularData &z, const Matrix &h) {
  const Vector q = quadratic_forms(z, h);
  if ((q.array() <= 0.0).any() || !q.allFinite()) {
    throw NumericalError("Tyler iteration: non-positive quadratic form");
  }
  const Matrix weighted = z.values().array().colwise() / q.array();
  const double scale =
      static_cast<double>(z.p()) / static_cast<double>(z.n());
  Matrix s = scale * (weighted.transpose() * z.values());
  return 0.5 * (s + s.transpose());
}

// Shared driver for the plain (rho = 0) and regularized iterations.
SpdMatrix iterate(const AngularData &z, double rho, const FixedPointConfig &cfg,
                  const char *label) {
  cfg.validate();
  const Index p = z.p();
  const auto pd = static_cast<double>(p);
  Matrix h = Matrix::Identity(p, p);
  double residual = 0.0;
  for (int it = 0; it < cfg.max_iter; ++it) {
    Matrix next = weighted_scatter(z, h);
    if (rho > 0.0) {
      next *= (1.0 - rho);
      next.diagonal().array() += rho;
    }
    next *= pd / next.trace();
    residual = (next - h).norm();
    if (residual <= cfg.tol * pd) {
      return SpdMatrix(SymMatrix::symmetrized(h));
    }
    h = std::move(next);
  }
  throw NonConvergence(std::string(label) + ": no convergence after " +
                           std::to_string(cfg.max_iter) +
                           " iterations (residual " + std::to_string(residual) +
                           ")",
                       cfg.max_iter, residual);
}

} // namespace

Matrix tyler_map(const AngularData &z, const SpdMatrix &h) {
  return weighted_scatter(z, h.values());
}

SpdMatrix tyler_estimate(const AngularData &z, const FixedPointConfig &cfg) {
  if (z.p() > z.n()) {
    throw UnsupportedRegime("tyler_estimate: needs p <= n, got p=" +
                            std::to_string(z.p()) +
                            ", n=" + std::to_string(z.n()));
  }
  return iterate(z, 0.0, cfg, "tyler_estimate");
}

SpdMatrix robust_linear_shrinkage(const AngularData &z, double rho,
                                  const FixedPointConfig &cfg) {
  if (!(rho > 0.0 && rho <= 1.0)) {
    throw InvalidInput("robust_linear_shrinkage: rho must lie in (0, 1]");
  }
  return iterate(z, rho, cfg, "robust_linear_shrinkage");
}

} // namespace robshrink
