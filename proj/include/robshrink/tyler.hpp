#pragma once

#include "robshrink/angular.hpp"

namespace robshrink {

struct FixedPointConfig {
  double tol = 1e-8;  // on ||H_{k+1} - H_k||_F / p
  int max_iter = 1000;

  void validate() const;
};

// Tyler's scatter fixed point, started from the identity and trace-normalized
// to p on every step. The returned H satisfies
//   ||H - tr_p((p/n) sum_t z_t z_t' / (z_t' H^{-1} z_t))||_F <= tol * p.
// Throws UnsupportedRegime for p > n and NonConvergence when max_iter is
// exhausted. p == n is accepted but only converges for degenerate designs
// such as an orthonormal basis.
SpdMatrix tyler_estimate(const AngularData &z, const FixedPointConfig &cfg = {});

// Regularized Tyler iteration shrinking toward the identity at each step:
//   H <- tr_p((1 - rho) (p/n) sum_t z_t z_t' / (z_t' H^{-1} z_t) + rho I).
// Valid for any p, n when rho in (0, 1].
SpdMatrix robust_linear_shrinkage(const AngularData &z, double rho,
                                  const FixedPointConfig &cfg = {});

// One application of the (unnormalized) Tyler map (p/n) sum z z'/(z'H^{-1}z).
// Exposed for residual checks.
Matrix tyler_map(const AngularData &z, const SpdMatrix &h);

} // namespace robshrink
