#pragma once

#include <memory>
#include <string>

#include "robshrink/numkit.hpp"

namespace robshrink {

// Maps ascending sample eigenvalues (p of them, non-negative) and the
// effective sample size to strictly positive shrunken eigenvalues.
//
// Callers go through operator(), which validates the implementation's output
// and sorts it ascending: spectra are paired with eigenvector columns by rank.
class EigenvalueShrinker {
public:
  virtual ~EigenvalueShrinker() = default;

  Vector operator()(const Vector &eigenvalues, Index p, Index n_effective) const;

  virtual std::string name() const = 0;

private:
  virtual Vector shrink(const Vector &eigenvalues, Index p,
                        Index n_effective) const = 0;
};

// Quadratic-inverse shrinkage. Stateless.
class QisShrinker final : public EigenvalueShrinker {
public:
  std::string name() const override { return "qis"; }

private:
  Vector shrink(const Vector &eigenvalues, Index p,
                Index n_effective) const override;
};

// Leaves the spectrum alone apart from flooring at 1e-12. Lets pipeline tests
// run without depending on any particular shrinkage formula.
class IdentityShrinker final : public EigenvalueShrinker {
public:
  std::string name() const override { return "identity"; }

private:
  Vector shrink(const Vector &eigenvalues, Index p,
                Index n_effective) const override;
};

std::shared_ptr<const EigenvalueShrinker> default_shrinker();

// Fixed spectrum for the eigenvector iteration: strictly positive and
// non-decreasing. `floored` records that the p >= n tie-flooring was applied,
// in which case the smallest p - n + 1 entries are exactly equal.
struct Lambda0 {
  Vector values;
  bool floored = false;
};

// Validates positivity and ordering. Throws InvalidInput.
Lambda0 make_lambda0(Vector values, bool floored = false);

// (1/n) X'X without demeaning, (1/(n-1)) Xc'Xc with it.
SymMatrix sample_covariance(const DataMatrix &x, bool demean);

// Ledoit-Wolf intensity in [0, 1] for shrinking toward (Tr(S)/p) I. S is the
// sample covariance with divisor n, demeaned when `demean` is set.
double ledoit_wolf_intensity(const DataMatrix &x, bool demean = true);

// (1 - rho) S + rho (Tr(S)/p) I with rho = ledoit_wolf_intensity(x, demean).
SpdMatrix linear_shrinkage(const DataMatrix &x, bool demean = true);

// QIS formula applied to an ascending spectrum; see QisShrinker.
//
// Eigenvalues at or below the numerical-rank threshold count as null; when
// fewer than min(p, n_effective) are non-null, the non-null count stands in
// for the sample size so that rank-deficient inputs still shrink to a
// positive spectrum. Throws InvalidInput on negative entries or wrong length.
Vector qis_shrink(const Vector &eigenvalues, Index p, Index n_effective);

// Nonlinear shrinkage of A: keep A's eigenvectors, replace its eigenvalues.
SpdMatrix nl_estimate(const SymMatrix &a, Index n_effective,
                      const EigenvalueShrinker &shrinker);

// When p >= n, replaces the smallest p - n + 1 entries with a single
// representative: the most frequent value (exact equality, smallest on ties),
// or their median when all are distinct. Returned unchanged when p < n.
Lambda0 floor_null_eigs(const Vector &ascending, Index p, Index n);

} // namespace robshrink
