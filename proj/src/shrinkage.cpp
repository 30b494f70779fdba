#include "robshrink/shrinkage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

namespace robshrink {

Vector EigenvalueShrinker::operator()(const Vector &eigenvalues, Index p,
                                      Index n_effective) const {
  Vector out = shrink(eigenvalues, p, n_effective);
  if (out.size() != p) {
    throw NumericalError("shrinker '" + name() + "' returned " +
                         std::to_string(out.size()) + " values, expected " +
                         std::to_string(p));
  }
  if (!out.allFinite() || (out.array() <= 0.0).any()) {
    throw NumericalError("shrinker '" + name() +
                         "' returned a non-positive or non-finite value");
  }
  std::sort(out.begin(), out.end());
  return out;
}

Vector QisShrinker::shrink(const Vector &eigenvalues, Index p,
                           Index n_effective) const {
  return qis_shrink(eigenvalues, p, n_effective);
}

Vector IdentityShrinker::shrink(const Vector &eigenvalues, Index p,
                                Index) const {
  if (eigenvalues.size() != p) {
    throw InvalidInput("identity shrinker: expected " + std::to_string(p) +
                       " eigenvalues");
  }
  return eigenvalues.cwiseMax(1e-12);
}

std::shared_ptr<const EigenvalueShrinker> default_shrinker() {
  static const auto qis = std::make_shared<const QisShrinker>();
  return qis;
}

Lambda0 make_lambda0(Vector values, bool floored) {
  if (values.size() == 0 || !values.allFinite() ||
      (values.array() <= 0.0).any()) {
    throw InvalidInput("Lambda0: values must be finite and strictly positive");
  }
  for (Index i = 1; i < values.size(); ++i) {
    if (values(i) < values(i - 1)) {
      throw InvalidInput("Lambda0: values must be non-decreasing");
    }
  }
  return Lambda0{std::move(values), floored};
}

SymMatrix sample_covariance(const DataMatrix &x, bool demean) {
  const auto n = static_cast<double>(x.n());
  if (!demean) {
    return SymMatrix::symmetrized(x.values().transpose() * x.values() / n);
  }
  const Matrix centered = x.values().rowwise() - x.values().colwise().mean();
  return SymMatrix::symmetrized(centered.transpose() * centered / (n - 1.0));
}

double ledoit_wolf_intensity(const DataMatrix &x, bool demean) {
  Matrix y = x.values();
  if (demean) {
    y.rowwise() -= y.colwise().mean();
  }
  const auto n = static_cast<double>(x.n());
  const auto p = static_cast<double>(x.p());
  const Matrix s = y.transpose() * y / n;
  const double mu = s.trace() / p;
  if (!(mu > 0.0)) {
    throw InvalidInput("linear_shrinkage: data are identically zero");
  }
  const Matrix y2 = y.array().square().matrix();
  // pi-hat: summed asymptotic variances of sqrt(n) S_ij.
  const double pi_hat =
      (y2.transpose() * y2 / n - s.array().square().matrix()).sum();
  const double gamma =
      (s - mu * Matrix::Identity(x.p(), x.p())).squaredNorm();
  if (gamma <= 0.0) {
    // S is already a multiple of the identity; any intensity leaves it fixed.
    return 0.0;
  }
  return std::clamp(pi_hat / gamma / n, 0.0, 1.0);
}

SpdMatrix linear_shrinkage(const DataMatrix &x, bool demean) {
  const double rho = ledoit_wolf_intensity(x, demean);
  Matrix y = x.values();
  if (demean) {
    y.rowwise() -= y.colwise().mean();
  }
  const Matrix s = y.transpose() * y / static_cast<double>(x.n());
  const double mu = s.trace() / static_cast<double>(x.p());
  Matrix out = (1.0 - rho) * s;
  out.diagonal().array() += rho * mu;
  return SpdMatrix(SymMatrix::symmetrized(out));
}

Vector qis_shrink(const Vector &eigenvalues, Index p, Index n_effective) {
  if (eigenvalues.size() != p || p < 1) {
    throw InvalidInput("qis_shrink: expected " + std::to_string(p) +
                       " eigenvalues, got " +
                       std::to_string(eigenvalues.size()));
  }
  if (n_effective < 1) {
    throw InvalidInput("qis_shrink: effective sample size must be positive");
  }
  if (!eigenvalues.allFinite()) {
    throw InvalidInput("qis_shrink: non-finite eigenvalue");
  }
  for (Index i = 1; i < p; ++i) {
    if (eigenvalues(i) < eigenvalues(i - 1)) {
      throw InvalidInput("qis_shrink: eigenvalues must be ascending");
    }
  }
  const double top = eigenvalues(p - 1);
  if (eigenvalues(0) < -1e-12 * std::max(1.0, std::abs(top))) {
    throw InvalidInput("qis_shrink: negative eigenvalue " +
                       std::to_string(eigenvalues(0)));
  }
  const Vector lambda = eigenvalues.cwiseMax(0.0);
  if (!(top > 0.0)) {
    throw DegenerateInput("qis_shrink: all eigenvalues are zero");
  }

  const double rank_tol = top * static_cast<double>(std::max(p, n_effective)) *
                          4.0 * std::numeric_limits<double>::epsilon();
  const Index rank = (lambda.array() > rank_tol).count();
  const Index m = std::min({p, n_effective, rank});

  const double c = static_cast<double>(p) / static_cast<double>(
                                                m == p ? n_effective : m);
  const double h = std::pow(std::min(c * c, 1.0 / (c * c)), 0.35) /
                   std::pow(static_cast<double>(p), 0.35);

  // Inverse of the m non-null eigenvalues (the largest ones).
  const Eigen::ArrayXd inv = lambda.tail(m).array().inverse();

  // Smoothed Stein shrinker theta and its conjugate, averaged over j.
  // Row i of the difference matrix holds (1/lambda_j - 1/lambda_i) over j.
  const Eigen::ArrayXXd lj = inv.transpose().replicate(m, 1);
  const Eigen::ArrayXXd lj_i = lj - lj.transpose();
  const Eigen::ArrayXXd denom = lj_i.square() + h * h * lj.square();
  const Eigen::ArrayXd theta = (lj * lj_i / denom).rowwise().mean();
  const Eigen::ArrayXd htheta = (lj * (h * lj) / denom).rowwise().mean();
  const Eigen::ArrayXd atheta2 = theta.square() + htheta.square();

  Vector delta(p);
  if (m == p) {
    delta = ((1.0 - c) * (1.0 - c) * inv + 2.0 * c * (1.0 - c) * inv * theta +
             c * c * inv * atheta2)
                .inverse()
                .matrix();
  } else {
    const double delta0 = 1.0 / ((c - 1.0) * inv.mean());
    delta.head(p - m).setConstant(delta0);
    delta.tail(m) = (inv * atheta2).inverse().matrix();
  }
  return delta * (lambda.sum() / delta.sum());
}

SpdMatrix nl_estimate(const SymMatrix &a, Index n_effective,
                      const EigenvalueShrinker &shrinker) {
  const EigenSystem es = eig_sym(a);
  const Vector shrunk = shrinker(es.values, a.dim(), n_effective);
  return SpdMatrix(SymMatrix::symmetrized(reconstruct(es.vectors, shrunk)));
}

Lambda0 floor_null_eigs(const Vector &ascending, Index p, Index n) {
  if (ascending.size() != p) {
    throw InvalidInput("floor_null_eigs: expected " + std::to_string(p) +
                       " values");
  }
  if (p < n) {
    return make_lambda0(ascending, false);
  }
  const Index k = std::min(p, p - n + 1);
  std::vector<double> block(ascending.data(), ascending.data() + k);

  // std::map iterates in ascending key order, so the first maximal count is
  // the smallest value among ties.
  std::map<double, int> counts;
  for (double v : block) {
    ++counts[v];
  }
  double representative = block.front();
  int best = 0;
  for (const auto &[value, count] : counts) {
    if (count > best) {
      best = count;
      representative = value;
    }
  }
  if (best == 1) {
    std::sort(block.begin(), block.end());
    const std::size_t mid = block.size() / 2;
    representative = block.size() % 2 == 1
                         ? block[mid]
                         : 0.5 * (block[mid - 1] + block[mid]);
  }

  Vector out = ascending;
  out.head(k).setConstant(representative);
  std::sort(out.begin(), out.end());
  return make_lambda0(std::move(out), true);
}

} // namespace robshrink
