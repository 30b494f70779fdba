#pragma once

// Robust nonlinear shrinkage of a dispersion matrix.
//
// Observations are projected onto the unit sphere, an initial shrunken
// spectrum Lambda0 is fixed, and the eigenvectors are found by minimizing the
// angular-Gaussian negative log-likelihood over the orthogonal group with
// Lambda0 held fixed:
//
//   f(U) = (1/n) sum_t ln(z_t' U Lambda0^{-1} U' z_t).
//
// The minimization is a majorize-minimize scheme: each step takes the
// ascending eigenvectors of the weighted scatter
//
//   F(U) = (1/n) sum_t z_t z_t' / (z_t' U Lambda0^{-1} U' z_t),
//
// which never increases f. Once converged the data are re-standardized and
// shrunk again to produce the final spectrum.

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "robshrink/angular.hpp"
#include "robshrink/shrinkage.hpp"

namespace robshrink {

struct VIterationTrace {
  int iterations = 0;
  std::vector<double> criterion_history;
  // f at the starting point followed by f after every update.
  std::vector<double> objective_history;
};

struct VIterationStep {
  int iteration;
  double criterion;
  double objective;
};

struct VIterationConfig {
  double epsilon = 1e-10;
  int max_iter = 1000;
  // Called after every update when set.
  std::function<void(const VIterationStep &)> observer;
};

struct VIterationResult {
  Matrix v_hat;
  VIterationTrace trace;
};

class VIterationNonConvergence : public NonConvergence {
public:
  VIterationNonConvergence(const std::string &what, VIterationTrace trace,
                           Matrix last)
      : NonConvergence(what, trace.iterations,
                       trace.criterion_history.empty()
                           ? 0.0
                           : trace.criterion_history.back()),
        trace_(std::move(trace)), last_(std::move(last)) {}

  const VIterationTrace &trace() const noexcept { return trace_; }
  const Matrix &last_iterate() const noexcept { return last_; }

private:
  VIterationTrace trace_;
  Matrix last_;
};

// z_t' U Lambda0^{-1} U' z_t for every observation.
Vector angular_quadratic_forms(const AngularData &z, const Matrix &u,
                               const Lambda0 &lambda0);

SymMatrix f_map(const AngularData &z, const Matrix &u, const Lambda0 &lambda0);

double f_objective(const AngularData &z, const Matrix &u,
                   const Lambda0 &lambda0);

// Majorizer of f at v_ref:
//   g(U | V) = f(V) + (1/n) sum_t w_t(U) / w_t(V) - 1.
double surrogate_g(const Matrix &u, const Matrix &v_ref, const AngularData &z,
                   const Lambda0 &lambda0);

// ||V_prev' F(V_prev) V_prev Lambda0^{-1} - Lambda0^{-1} V_cur' F(V_cur) V_cur||_F.
// With V_prev == V_cur this is the first-order optimality residual.
double criterion(const Matrix &v_prev, const Matrix &v_cur,
                 const AngularData &z, const Lambda0 &lambda0);

// Starts from the eigenvectors of (1/n) sum z z' and updates
// V <- ascending eigenvectors of F(V) until criterion <= epsilon.
// Throws VIterationNonConvergence after max_iter updates.
VIterationResult v_iteration(const AngularData &z, const Lambda0 &lambda0,
                             const VIterationConfig &cfg = {});

// z_t / sqrt(z_t' V Lambda0^{-1} V' z_t / p).
DataMatrix standardize(const AngularData &z, const Matrix &v_hat,
                       const Lambda0 &lambda0);

// ||U1 Lambda0 U1' - U2 Lambda0 U2'||_F: zero exactly when U1 and U2 give the
// same matrix with spectrum Lambda0.
double equiv_distance(const Matrix &u1, const Matrix &u2,
                      const Lambda0 &lambda0);

enum class TraceTarget {
  dimension,    // Tr(H) = p, a dispersion estimate
  sample_trace, // Tr(H) = Tr(S), covariance scale
};

struct RnlOptions {
  std::shared_ptr<const EigenvalueShrinker> shrinker = default_shrinker();
  double epsilon = 1e-10;
  int max_iter = 1000;
  // Remove column means first; the shrinker then sees n - 1 degrees of
  // freedom. Off by default: the model has location zero.
  bool demean = false;
  TraceTarget trace_target = TraceTarget::dimension;
  std::function<void(const VIterationStep &)> observer;
};

struct RnlEstimate {
  SpdMatrix h;
  Matrix v_hat;
  Lambda0 lambda0;
  Vector lambda_r;
  VIterationTrace trace;
  // Per-column standard deviations used by the correlation-based variant.
  std::optional<Vector> column_scales;
};

RnlEstimate rnl_estimate(const DataMatrix &y, const RnlOptions &options = {});

// Standardizes columns by their sample standard deviations, runs
// rnl_estimate, and scales the result back. Throws InvalidInput naming a
// zero-variance column.
RnlEstimate rcnl_estimate(const DataMatrix &y, const RnlOptions &options = {});

// Column standard deviations under the same centering convention as the
// estimators: root mean square when demean is false, the usual n - 1
// standard deviation otherwise.
Vector column_scales(const DataMatrix &y, bool demean);

} // namespace robshrink
