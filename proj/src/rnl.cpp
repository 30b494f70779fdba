#include "robshrink/rnl.hpp"

#include <cmath>
#include <string>

namespace robshrink {

namespace {

Vector inverse_spectrum(const Lambda0 &lambda0, Index p) {
  if (lambda0.values.size() != p) {
    throw InvalidInput("Lambda0 has " + std::to_string(lambda0.values.size()) +
                       " entries, data have p=" + std::to_string(p));
  }
  return lambda0.values.cwiseInverse();
}

void check_orthogonal(const Matrix &u, Index p, const char *what) {
  if (u.rows() != p || u.cols() != p) {
    throw InvalidInput(std::string(what) + ": expected a " +
                       std::to_string(p) + "x" + std::to_string(p) +
                       " matrix");
  }
  const double err =
      (u.transpose() * u - Matrix::Identity(p, p)).cwiseAbs().maxCoeff();
  if (err > 1e-8) {
    throw InvalidInput(std::string(what) + ": matrix is not orthogonal");
  }
}

Matrix weighted_scatter(const AngularData &z, const Vector &w) {
  if (!w.allFinite() || (w.array() <= 0.0).any()) {
    throw NumericalError("f_map: non-positive quadratic form");
  }
  const Matrix weighted = z.values().array().colwise() / w.array();
  Matrix f = weighted.transpose() * z.values() / static_cast<double>(z.n());
  return 0.5 * (f + f.transpose());
}

// V' F V Lambda0^{-1} and Lambda0^{-1} V' F V share the rotated scatter.
Matrix rotated(const Matrix &v, const Matrix &f) {
  return v.transpose() * f * v;
}

double criterion_from(const Matrix &rot_prev, const Matrix &rot_cur,
                      const Vector &inv) {
  const Matrix lhs = rot_prev * inv.asDiagonal();
  const Matrix rhs = inv.asDiagonal() * rot_cur;
  return (lhs - rhs).norm();
}

} // namespace

Vector angular_quadratic_forms(const AngularData &z, const Matrix &u,
                               const Lambda0 &lambda0) {
  const Vector inv = inverse_spectrum(lambda0, z.p());
  const Matrix proj = z.values() * u;
  return (proj.array().square().rowwise() * inv.transpose().array())
      .rowwise()
      .sum();
}

SymMatrix f_map(const AngularData &z, const Matrix &u, const Lambda0 &lambda0) {
  check_orthogonal(u, z.p(), "f_map");
  return SymMatrix::symmetrized(
      weighted_scatter(z, angular_quadratic_forms(z, u, lambda0)));
}

double f_objective(const AngularData &z, const Matrix &u,
                   const Lambda0 &lambda0) {
  check_orthogonal(u, z.p(), "f_objective");
  const Vector w = angular_quadratic_forms(z, u, lambda0);
  if ((w.array() <= 0.0).any()) {
    throw NumericalError("f_objective: non-positive quadratic form");
  }
  return w.array().log().mean();
}

double surrogate_g(const Matrix &u, const Matrix &v_ref, const AngularData &z,
                   const Lambda0 &lambda0) {
  check_orthogonal(u, z.p(), "surrogate_g");
  check_orthogonal(v_ref, z.p(), "surrogate_g");
  const Vector wu = angular_quadratic_forms(z, u, lambda0);
  const Vector wv = angular_quadratic_forms(z, v_ref, lambda0);
  if ((wv.array() <= 0.0).any()) {
    throw NumericalError("surrogate_g: non-positive quadratic form");
  }
  return wv.array().log().mean() + (wu.array() / wv.array()).mean() - 1.0;
}

double criterion(const Matrix &v_prev, const Matrix &v_cur,
                 const AngularData &z, const Lambda0 &lambda0) {
  check_orthogonal(v_prev, z.p(), "criterion");
  check_orthogonal(v_cur, z.p(), "criterion");
  const Vector inv = inverse_spectrum(lambda0, z.p());
  const Matrix f_prev =
      weighted_scatter(z, angular_quadratic_forms(z, v_prev, lambda0));
  const Matrix f_cur =
      weighted_scatter(z, angular_quadratic_forms(z, v_cur, lambda0));
  return criterion_from(rotated(v_prev, f_prev), rotated(v_cur, f_cur), inv);
}

VIterationResult v_iteration(const AngularData &z, const Lambda0 &lambda0,
                             const VIterationConfig &cfg) {
  if (!(cfg.epsilon > 0.0) || cfg.max_iter < 1) {
    throw InvalidInput("v_iteration: epsilon must be positive and max_iter >= 1");
  }
  const Vector inv = inverse_spectrum(lambda0, z.p());
  const auto n = static_cast<double>(z.n());

  // Unit weights: the scatter at H = I is the plain angular covariance.
  Matrix v = eig_sym(SymMatrix::symmetrized(
                         z.values().transpose() * z.values() / n))
                 .vectors;

  VIterationTrace trace;
  Vector w = angular_quadratic_forms(z, v, lambda0);
  Matrix f = weighted_scatter(z, w);
  trace.objective_history.push_back(w.array().log().mean());

  for (int it = 1; it <= cfg.max_iter; ++it) {
    Matrix v_next = eig_sym(f).vectors;
    const Vector w_next = angular_quadratic_forms(z, v_next, lambda0);
    Matrix f_next = weighted_scatter(z, w_next);

    const double c = criterion_from(rotated(v, f), rotated(v_next, f_next), inv);
    const double objective = w_next.array().log().mean();
    trace.iterations = it;
    trace.criterion_history.push_back(c);
    trace.objective_history.push_back(objective);
    if (cfg.observer) {
      cfg.observer(VIterationStep{it, c, objective});
    }

    v = std::move(v_next);
    f = std::move(f_next);
    if (c <= cfg.epsilon) {
      return VIterationResult{std::move(v), std::move(trace)};
    }
  }
  std::string message =
      "v_iteration: criterion " + std::to_string(trace.criterion_history.back()) +
      " above epsilon " + std::to_string(cfg.epsilon) + " after " +
      std::to_string(cfg.max_iter) + " iterations";
  throw VIterationNonConvergence(message, std::move(trace), std::move(v));
}

DataMatrix standardize(const AngularData &z, const Matrix &v_hat,
                       const Lambda0 &lambda0) {
  const Vector w = angular_quadratic_forms(z, v_hat, lambda0);
  const auto p = static_cast<double>(z.p());
  if ((w.array() <= 0.0).any() || !w.allFinite()) {
    throw NumericalError("standardize: non-positive radicand");
  }
  const Vector scale = (w.array() / p).sqrt().inverse().matrix();
  return DataMatrix(z.values().array().colwise() * scale.array());
}

double equiv_distance(const Matrix &u1, const Matrix &u2,
                      const Lambda0 &lambda0) {
  return (reconstruct(u1, lambda0.values) - reconstruct(u2, lambda0.values))
      .norm();
}

Vector column_scales(const DataMatrix &y, bool demean) {
  const auto n = static_cast<double>(y.n());
  Vector scales(y.p());
  for (Index j = 0; j < y.p(); ++j) {
    const auto col = y.values().col(j).array();
    scales(j) = demean ? std::sqrt((col - col.mean()).square().sum() / (n - 1.0))
                       : std::sqrt(col.square().sum() / n);
  }
  return scales;
}

namespace {

double trace_target_value(const DataMatrix &y, const RnlOptions &options) {
  if (options.trace_target == TraceTarget::dimension) {
    return static_cast<double>(y.p());
  }
  return sample_covariance(y, options.demean).trace();
}

} // namespace

RnlEstimate rnl_estimate(const DataMatrix &y, const RnlOptions &options) {
  if (!options.shrinker) {
    throw InvalidInput("rnl_estimate: no eigenvalue shrinker supplied");
  }
  const EigenvalueShrinker &shrink = *options.shrinker;
  const Index p = y.p();
  const Index n = y.n();

  const DataMatrix centered =
      options.demean
          ? DataMatrix(y.values().rowwise() - y.values().colwise().mean())
          : y;
  const Index n_eff = options.demean ? n - 1 : n;

  const AngularData z = normalize_rows(centered);

  const SymMatrix s_z = sample_covariance(z.data(), false);
  const Vector initial = shrink(eig_sym(s_z).values, p, n_eff);
  Lambda0 lambda0 = floor_null_eigs(initial, p, n);

  VIterationConfig vcfg;
  vcfg.epsilon = options.epsilon;
  vcfg.max_iter = options.max_iter;
  vcfg.observer = options.observer;
  VIterationResult vr = v_iteration(z, lambda0, vcfg);

  const DataMatrix z_tilde = standardize(z, vr.v_hat, lambda0);
  const Vector lambda_r =
      shrink(eig_sym(sample_covariance(z_tilde, false)).values, p, n_eff);

  const double target = trace_target_value(y, options);
  Matrix h = reconstruct(vr.v_hat, lambda_r);
  h *= target / lambda_r.sum();

  return RnlEstimate{SpdMatrix(SymMatrix::symmetrized(h)), std::move(vr.v_hat),
                     std::move(lambda0), lambda_r, std::move(vr.trace),
                     std::nullopt};
}

RnlEstimate rcnl_estimate(const DataMatrix &y, const RnlOptions &options) {
  const Vector sigma = column_scales(y, options.demean);
  for (Index j = 0; j < sigma.size(); ++j) {
    if (!(sigma(j) > 0.0)) {
      throw InvalidInput("rcnl_estimate: column " + std::to_string(j) +
                         " has zero standard deviation");
    }
  }
  const DataMatrix x(y.values() * sigma.cwiseInverse().asDiagonal());

  RnlOptions inner_options = options;
  inner_options.trace_target = TraceTarget::dimension;
  RnlEstimate inner = rnl_estimate(x, inner_options);

  Matrix h = sigma.asDiagonal() * inner.h.values() * sigma.asDiagonal();
  h *= trace_target_value(y, options) / h.trace();

  inner.h = SpdMatrix(SymMatrix::symmetrized(h));
  inner.column_scales = sigma;
  return inner;
}

} // namespace robshrink
