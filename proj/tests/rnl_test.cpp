#include <chrono>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracles/reference.hpp"
#include "robshrink/rnl.hpp"
#include "robshrink/simlab.hpp"

using namespace robshrink;

namespace {

DataMatrix t_data(DispersionKind kind, Index p, Index n, double nu,
                  std::uint64_t seed) {
  const Nu dof = std::isinf(nu) ? Nu::infinity() : Nu::finite(nu);
  return sample_elliptical({make_dispersion(kind, p), dof}, n, seed);
}

Matrix rotation2(double angle) {
  Matrix u(2, 2);
  u << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return u;
}

Lambda0 spectrum(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) {
    v(i++) = x;
  }
  return make_lambda0(v);
}

Lambda0 qis_lambda0(const AngularData &z) {
  const Vector eigs = eig_sym(sample_covariance(z.data(), false)).values;
  return floor_null_eigs(QisShrinker()(eigs.cwiseMax(0.0), z.p(), z.n()), z.p(),
                         z.n());
}

Lambda0 constant_lambda0(Index p, double delta) {
  return make_lambda0(Vector::Constant(p, delta));
}

} // namespace

TEST(NormalizeRows, Examples) {
  Matrix y(2, 2);
  y << 3, 4, 0.6, 0.8;
  const AngularData z = normalize_rows(DataMatrix(y));
  EXPECT_DOUBLE_EQ(z.values()(0, 0), 0.6);
  EXPECT_DOUBLE_EQ(z.values()(0, 1), 0.8);
  EXPECT_EQ(z.values().row(1), y.row(1));
  const AngularData scaled = normalize_rows(DataMatrix(Matrix(7.5 * y)));
  EXPECT_LE((scaled.values() - z.values()).cwiseAbs().maxCoeff(), 1e-16);
}

TEST(NormalizeRows, ZeroRowNamesIndex) {
  Matrix y = Matrix::Ones(4, 3);
  y.row(2).setZero();
  try {
    normalize_rows(DataMatrix(y));
    FAIL() << "expected InvalidInput";
  } catch (const InvalidInput &e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
  }
}

TEST(AngularData, RejectsNonUnitRows) {
  EXPECT_THROW(AngularData(DataMatrix(Matrix::Ones(3, 2))), InvalidInput);
}

TEST(FMap, ConstantSpectrumCollapses) {
  const AngularData z = normalize_rows(t_data(DispersionKind::A, 5, 40, 4, 1));
  const Matrix plain = z.values().transpose() * z.values() / 40.0;
  const Matrix u = random_rotation(5, 3);
  const SymMatrix f = f_map(z, u, constant_lambda0(5, 2.5));
  EXPECT_LE((f.values() - 2.5 * plain).norm(), 1e-12);
}

TEST(FMap, OneDimension) {
  Matrix y(3, 1);
  y << 1, -2, 5;
  const AngularData z = normalize_rows(DataMatrix(y));
  const SymMatrix f = f_map(z, Matrix::Identity(1, 1), constant_lambda0(1, 0.7));
  EXPECT_NEAR(f.values()(0, 0), 0.7, 1e-15);
}

TEST(FMap, HandComputedTwoByTwo) {
  // Rows (1,0), (0,1), (0.6,0.8); U = I, Lambda0 = (1, 2).
  // Quadratic forms: 1, 0.5, 0.36 + 0.32 = 0.68.
  Matrix y(3, 2);
  y << 1, 0, 0, 1, 0.6, 0.8;
  const AngularData z(DataMatrix{y});
  const SymMatrix f = f_map(z, Matrix::Identity(2, 2), spectrum({1, 2}));
  Matrix expected(2, 2);
  expected << 1.0 / 1.0 + 0.36 / 0.68, 0.48 / 0.68, 0.48 / 0.68,
      1.0 / 0.5 + 0.64 / 0.68;
  expected /= 3.0;
  EXPECT_LE((f.values() - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(FMap, RejectsNonOrthogonal) {
  const AngularData z(DataMatrix(Matrix::Identity(2, 2)));
  EXPECT_THROW(f_map(z, Matrix::Ones(2, 2), spectrum({1, 2})), InvalidInput);
}

TEST(FObjective, AnalyticValues) {
  const AngularData z = normalize_rows(t_data(DispersionKind::F, 4, 30, 5, 2));
  const Matrix u = random_rotation(4, 5);
  EXPECT_NEAR(f_objective(z, u, constant_lambda0(4, 1.0)), 0.0, 1e-14);
  EXPECT_NEAR(f_objective(z, u, constant_lambda0(4, 3.0)), -std::log(3.0), 1e-14);
}

TEST(FObjective, MatchesLoopOracleAndEquivalenceClass) {
  const AngularData z = normalize_rows(t_data(DispersionKind::A, 6, 50, 3, 4));
  const Lambda0 l0 = spectrum({0.2, 0.5, 0.9, 1.1, 1.6, 2.4});
  const Matrix u = random_rotation(6, 8);
  EXPECT_NEAR(f_objective(z, u, l0), oracle::angular_objective(z.values(), u, l0.values),
              1e-12);
  Matrix flipped = u;
  flipped.col(3) *= -1.0;
  EXPECT_NEAR(f_objective(z, flipped, l0), f_objective(z, u, l0), 1e-14);
}

TEST(Surrogate, MajorizesAndTouches) {
  const AngularData z = normalize_rows(t_data(DispersionKind::Aprime, 5, 40, 4, 6));
  const Lambda0 l0 = qis_lambda0(z);
  for (std::uint64_t s = 0; s < 30; ++s) {
    const Matrix u = random_rotation(5, 100 + s);
    const Matrix v = random_rotation(5, 200 + s);
    EXPECT_GE(surrogate_g(u, v, z, l0) - f_objective(z, u, l0), -1e-10);
    EXPECT_NEAR(surrogate_g(v, v, z, l0), f_objective(z, v, l0), 1e-10);
  }
}

TEST(Surrogate, ConstantSpectrumCollapses) {
  const AngularData z = normalize_rows(t_data(DispersionKind::I, 4, 25, 6, 7));
  const Lambda0 l0 = constant_lambda0(4, 1.7);
  const Matrix v = random_rotation(4, 1);
  for (std::uint64_t s = 0; s < 5; ++s) {
    EXPECT_NEAR(surrogate_g(random_rotation(4, 50 + s), v, z, l0),
                f_objective(z, v, l0), 1e-13);
  }
}

TEST(Surrogate, UpdateMinimizesSurrogate) {
  const AngularData z = normalize_rows(t_data(DispersionKind::A, 6, 40, 3, 9));
  const Lambda0 l0 = qis_lambda0(z);
  const Matrix v = random_rotation(6, 77);
  const Matrix next = eig_sym(f_map(z, v, l0)).vectors;
  const double g_next = surrogate_g(next, v, z, l0);
  for (std::uint64_t s = 0; s < 100; ++s) {
    EXPECT_LE(g_next, surrogate_g(random_rotation(6, 1000 + s), v, z, l0) + 1e-10);
  }
}

TEST(Criterion, ConstantSpectrumAtAngularEigenvectorsIsZero) {
  const AngularData z = normalize_rows(t_data(DispersionKind::F, 5, 30, 4, 11));
  const Matrix v =
      eig_sym(SymMatrix::symmetrized(z.values().transpose() * z.values() / 30.0))
          .vectors;
  EXPECT_LE(criterion(v, v, z, constant_lambda0(5, 2.0)), 1e-10);
}

TEST(Criterion, HandCheckedTwoByTwo) {
  Matrix y(3, 2);
  y << 1, 0, 0, 1, 0.6, 0.8;
  const AngularData z(DataMatrix{y});
  const Lambda0 l0 = spectrum({1, 2});
  const Matrix v0 = Matrix::Identity(2, 2);
  const Matrix v1 = rotation2(0.3);
  // Both terms by hand: F at each U, rotated, times diag(1, 1/2).
  auto rotated_f = [&](const Matrix &u) {
    Matrix f = Matrix::Zero(2, 2);
    for (Index t = 0; t < 3; ++t) {
      const Vector zt = y.row(t).transpose();
      const Vector proj = u.transpose() * zt;
      const double q = proj(0) * proj(0) / 1.0 + proj(1) * proj(1) / 2.0;
      f += zt * zt.transpose() / q;
    }
    return Matrix(u.transpose() * (f / 3.0) * u);
  };
  Matrix inv = Matrix::Zero(2, 2);
  inv(0, 0) = 1.0;
  inv(1, 1) = 0.5;
  const double expected = (rotated_f(v0) * inv - inv * rotated_f(v1)).norm();
  const double c = criterion(v0, v1, z, l0);
  EXPECT_NEAR(c, expected, 1e-14);
  EXPECT_GT(c, 0.0);
}

TEST(VIteration, ConstantSpectrumConvergesInOneStep) {
  const AngularData z = normalize_rows(t_data(DispersionKind::A, 8, 50, 4, 12));
  const VIterationResult r = v_iteration(z, constant_lambda0(8, 1.3));
  EXPECT_EQ(r.trace.iterations, 1);
  EXPECT_LE(r.trace.criterion_history.back(), 1e-10);
  const Matrix expected =
      eig_sym(SymMatrix::symmetrized(z.values().transpose() * z.values() / 50.0))
          .vectors;
  EXPECT_LE((r.v_hat - expected).norm(), 1e-10);
}

TEST(VIteration, ObjectiveNeverIncreases) {
  std::mt19937_64 rng(2);
  const std::vector<DispersionKind> kinds{
      DispersionKind::I,      DispersionKind::A,      DispersionKind::F,
      DispersionKind::Iprime, DispersionKind::Aprime, DispersionKind::Fprime};
  for (int k = 0; k < 24; ++k) {
    const Index p = std::vector<Index>{3, 8, 15}[static_cast<std::size_t>(k % 3)];
    const Index n = std::vector<Index>{10, 30, 60}[static_cast<std::size_t>((k / 3) % 3)];
    const AngularData z = normalize_rows(
        t_data(kinds[static_cast<std::size_t>(k % 6)], p, n, k % 2 ? 3.0 : 8.0,
               static_cast<std::uint64_t>(k)));
    const VIterationResult r = v_iteration(z, qis_lambda0(z));
    const auto &f = r.trace.objective_history;
    ASSERT_EQ(f.size(), static_cast<std::size_t>(r.trace.iterations) + 1);
    for (std::size_t l = 1; l < f.size(); ++l) {
      EXPECT_LE(f[l], f[l - 1] + 1e-12) << "p=" << p << " n=" << n << " step " << l;
    }
  }
}

TEST(VIteration, EndsAtCriticalPoint) {
  const AngularData z = normalize_rows(t_data(DispersionKind::A, 10, 40, 4, 13));
  const Lambda0 l0 = qis_lambda0(z);
  const VIterationResult r = v_iteration(z, l0);
  EXPECT_LE(r.trace.criterion_history.back(), 1e-10);
  EXPECT_LE(criterion(r.v_hat, r.v_hat, z, l0), 1e-8);
  const Matrix again = eig_sym(f_map(z, r.v_hat, l0)).vectors;
  EXPECT_LE(equiv_distance(again, r.v_hat, l0), 1e-8);
}

TEST(VIteration, TwoDimensionalGridOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const AngularData z = normalize_rows(t_data(DispersionKind::A, 2, 30, 4, 300 + seed));
    const Lambda0 l0 = qis_lambda0(z);
    const VIterationResult r = v_iteration(z, l0);
    double grid_min = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 10000; ++k) {
      const double angle = std::numbers::pi * k / 10000.0;
      grid_min = std::min(grid_min, oracle::angular_objective(z.values(), rotation2(angle),
                                                              l0.values));
    }
    EXPECT_LE(f_objective(z, r.v_hat, l0), grid_min + 1e-6);
  }
}

TEST(VIteration, RotationEquivariant) {
  const DataMatrix y = t_data(DispersionKind::A, 7, 50, 4, 14);
  const Matrix q = random_rotation(7, 15);
  const AngularData z = normalize_rows(y);
  const AngularData zr = normalize_rows(DataMatrix(Matrix(y.values() * q.transpose())));
  const Lambda0 l0 = qis_lambda0(z);
  const Matrix a = reconstruct(v_iteration(z, l0).v_hat, l0.values);
  const Matrix b = reconstruct(v_iteration(zr, l0).v_hat, l0.values);
  EXPECT_LE((b - q * a * q.transpose()).norm(), 1e-8);
}

TEST(VIteration, NonConvergenceCarriesTrace) {
  const AngularData z = normalize_rows(t_data(DispersionKind::A, 10, 30, 3, 16));
  VIterationConfig cfg;
  cfg.max_iter = 2;
  try {
    v_iteration(z, qis_lambda0(z), cfg);
    FAIL() << "expected VIterationNonConvergence";
  } catch (const VIterationNonConvergence &e) {
    EXPECT_EQ(e.trace().iterations, 2);
    EXPECT_EQ(e.trace().criterion_history.size(), 2u);
    EXPECT_EQ(e.residual(), e.trace().criterion_history.back());
    EXPECT_EQ(e.last_iterate().rows(), 10);
  }
}

TEST(VIteration, ObserverSeesEveryStep) {
  const AngularData z = normalize_rows(t_data(DispersionKind::F, 6, 30, 5, 17));
  VIterationConfig cfg;
  std::vector<int> seen;
  cfg.observer = [&](const VIterationStep &s) { seen.push_back(s.iteration); };
  const VIterationResult r = v_iteration(z, qis_lambda0(z), cfg);
  ASSERT_EQ(seen.size(), static_cast<std::size_t>(r.trace.iterations));
  EXPECT_EQ(seen.back(), r.trace.iterations);
}

TEST(VIteration, PerIterationCostScaling) {
  auto per_iteration = [](Index p) {
    const AngularData z = normalize_rows(t_data(DispersionKind::A, p, 400, 4, 18));
    const Lambda0 l0 = qis_lambda0(z);
    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 3; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      const VIterationResult r = v_iteration(z, l0);
      const double s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      best = std::min(best, s / r.trace.iterations);
    }
    return best;
  };
  const double small = per_iteration(60);
  const double large = per_iteration(120);
  EXPECT_LE(large / small, 10.0);
}

TEST(EquivDistance, Examples) {
  const Matrix u = random_rotation(5, 19);
  const Lambda0 l0 = spectrum({1, 2, 3, 4, 5});
  EXPECT_EQ(equiv_distance(u, u, l0), 0.0);
  Matrix flipped = u;
  flipped.col(1) *= -1.0;
  EXPECT_LE(equiv_distance(u, flipped, l0), 1e-14);
  EXPECT_LE(equiv_distance(u, random_rotation(5, 20), constant_lambda0(5, 2.0)), 1e-13);
  EXPECT_GT(equiv_distance(u, random_rotation(5, 20), l0), 0.1);
}

TEST(EquivDistance, SwapsInsideTiedBlockAreEquivalent) {
  const AngularData z = normalize_rows(t_data(DispersionKind::A, 8, 5, 4, 21));
  const Lambda0 l0 = qis_lambda0(z);
  ASSERT_TRUE(l0.floored);
  const VIterationResult r = v_iteration(z, l0);
  Matrix swapped = r.v_hat;
  swapped.col(0).swap(swapped.col(2));
  swapped.col(1) *= -1.0;
  EXPECT_LE(equiv_distance(r.v_hat, swapped, l0), 1e-8);
}

TEST(Standardize, UnitSpectrumScalesBySqrtP) {
  const AngularData z = normalize_rows(t_data(DispersionKind::A, 4, 20, 4, 22));
  const DataMatrix out = standardize(z, random_rotation(4, 3), constant_lambda0(4, 1.0));
  EXPECT_LE((out.values() - 2.0 * z.values()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Standardize, HandComputedScaling) {
  Matrix y(2, 2);
  y << 1, 0, 0.6, 0.8;
  const AngularData z(DataMatrix{y});
  const DataMatrix out = standardize(z, Matrix::Identity(2, 2), spectrum({1, 4}));
  // q = 1 and 0.36 + 0.64/4 = 0.52; scale = 1/sqrt(q/2).
  EXPECT_NEAR(out.values()(0, 0), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(out.values()(1, 1), 0.8 / std::sqrt(0.26), 1e-15);
}

TEST(Standardize, CovarianceIsPTimesFMapAndSharesEigenvectors) {
  const AngularData z = normalize_rows(t_data(DispersionKind::A, 6, 60, 4, 23));
  const Lambda0 l0 = qis_lambda0(z);
  const VIterationResult r = v_iteration(z, l0);
  const Matrix s = sample_covariance(standardize(z, r.v_hat, l0), false).values();
  const Matrix f = f_map(z, r.v_hat, l0).values();
  EXPECT_LE((s - 6.0 * f).norm(), 1e-12 * s.norm());
  const Matrix rotated = r.v_hat.transpose() * s * r.v_hat;
  const Matrix off = rotated - Matrix(rotated.diagonal().asDiagonal());
  EXPECT_LE(off.norm(), 1e-8 * rotated.norm());
}

TEST(RnlEstimate, StructureAndTrace) {
  const DataMatrix y = t_data(DispersionKind::Aprime, 12, 60, 4, 24);
  const RnlEstimate e = rnl_estimate(y);
  EXPECT_NEAR(e.h.trace(), 12.0, 1e-10);
  const Matrix expected = 12.0 * reconstruct(e.v_hat, e.lambda_r) / e.lambda_r.sum();
  EXPECT_LE((e.h.values() - expected).norm(), 1e-10);
  EXPECT_FALSE(e.column_scales.has_value());
}

TEST(RnlEstimate, ScaleInvariant) {
  const DataMatrix y = t_data(DispersionKind::A, 8, 40, 4, 25);
  const Matrix a = rnl_estimate(y).h.values();
  const Matrix b = rnl_estimate(DataMatrix(Matrix(1234.5 * y.values()))).h.values();
  EXPECT_LE((a - b).norm(), 1e-10);
}

TEST(RnlEstimate, RotationEquivariant) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const DataMatrix y = t_data(DispersionKind::A, 10, 40, 4, 400 + seed);
    const Matrix q = random_rotation(10, 500 + seed);
    const Matrix h = rnl_estimate(y).h.values();
    const Matrix hr = rnl_estimate(DataMatrix(Matrix(y.values() * q.transpose()))).h.values();
    EXPECT_LE((hr - q * h * q.transpose()).norm(), 1e-6 * h.norm());
  }
}

TEST(RnlEstimate, MoreVariablesThanObservations) {
  const DataMatrix y = t_data(DispersionKind::A, 30, 20, 4, 26);
  const RnlEstimate e = rnl_estimate(y);
  EXPECT_TRUE(e.lambda0.floored);
  EXPECT_GT(eig_sym(e.h.sym()).values(0), 0.0);
  EXPECT_NEAR(e.h.trace(), 30.0, 1e-9);
}

TEST(RnlEstimate, OneDimensionIsOne) {
  Matrix y(5, 1);
  y << 1, -2, 3, 0.5, 4;
  EXPECT_NEAR(rnl_estimate(DataMatrix(y)).h.values()(0, 0), 1.0, 1e-15);
}

TEST(RnlEstimate, SampleTraceTarget) {
  const DataMatrix y = t_data(DispersionKind::A, 6, 50, 5, 27);
  RnlOptions o;
  o.trace_target = TraceTarget::sample_trace;
  const RnlEstimate e = rnl_estimate(y, o);
  EXPECT_NEAR(e.h.trace(), sample_covariance(y, false).trace(), 1e-10);
}

TEST(RcnlEstimate, UnitScalesGiveRnl) {
  Matrix y = t_data(DispersionKind::A, 6, 50, 5, 28).values();
  for (Index j = 0; j < y.cols(); ++j) {
    y.col(j) /= std::sqrt(y.col(j).squaredNorm() / 50.0);
  }
  const Matrix a = rcnl_estimate(DataMatrix(y)).h.values();
  const Matrix b = rnl_estimate(DataMatrix(y)).h.values();
  EXPECT_LE((a - b).norm(), 1e-10);
}

TEST(RcnlEstimate, ColumnScalingInvariant) {
  const DataMatrix y = t_data(DispersionKind::Iprime, 10, 50, 4, 29);
  Vector d(10);
  for (Index j = 0; j < 10; ++j) {
    d(j) = 0.1 + 0.7 * static_cast<double>(j);
  }
  const Matrix a = rcnl_estimate(y).h.values();
  const Matrix b = rcnl_estimate(DataMatrix(Matrix(y.values() * d.asDiagonal()))).h.values();
  const Matrix expected = d.asDiagonal() * a * d.asDiagonal();
  EXPECT_LE((b - expected * (10.0 / expected.trace())).norm(), 1e-10);
}

TEST(RcnlEstimate, ZeroVarianceColumnNamed) {
  Matrix y = t_data(DispersionKind::I, 4, 20, 5, 30).values();
  y.col(3).setZero();
  try {
    rcnl_estimate(DataMatrix(y));
    FAIL() << "expected InvalidInput";
  } catch (const InvalidInput &e) {
    EXPECT_NE(std::string(e.what()).find("column 3"), std::string::npos) << e.what();
  }
}
