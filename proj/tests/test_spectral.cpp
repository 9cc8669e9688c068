#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "groklens/datasets.hpp"
#include "groklens/fastmath.hpp"
#include "groklens/spectral.hpp"
#include "oracles.hpp"

using namespace groklens;
using std::numbers::pi;

namespace {

Matrix column(const std::vector<double>& v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
  return m;
}

std::vector<double> projected(const Matrix& xs, const Vector& d) {
  std::vector<double> p(static_cast<std::size_t>(xs.rows()));
  for (Eigen::Index i = 0; i < xs.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < xs.cols(); ++j) s += xs(i, j) * d(j);
    p[static_cast<std::size_t>(i)] = s;
  }
  return p;
}

FrequencyGrid line_grid(double lo, double hi, int n) { return make_grid(linspace(lo, hi, n), Vector::Ones(1)); }

}  // namespace

TEST(FastMath, AgreesWithStd) {
  Rng rng(1);
  std::vector<double> x(20000), s(x.size()), c(x.size());
  for (auto& v : x) v = rng.uniform(-3000.0, 3000.0);
  x[0] = 0.0;
  x[1] = -0.0;
  x[2] = pi / 2;
  x[3] = 1e7;
  fastmath::sin(x.data(), s.data(), x.size());
  fastmath::cos(x.data(), c.data(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    ASSERT_NEAR(s[i], std::sin(x[i]), 4e-16) << x[i];
    ASSERT_NEAR(c[i], std::cos(x[i]), 4e-16) << x[i];
  }
}

TEST(Nudft, TwoPointHandExample) {
  Matrix xs(2, 1);
  xs << 0.0, pi;
  Vector ys(2);
  ys << 1.0, -1.0;
  const auto s = nudft(xs, ys, make_grid({1.0}, Vector::Ones(1)));
  EXPECT_NEAR(s.values[0].real(), 1.0, 1e-12);
  EXPECT_NEAR(s.values[0].imag(), 0.0, 1e-12);
}

TEST(Nudft, ZeroDataZeroSpectrum) {
  const auto set = gen_synth1d_uniform(40);
  const auto s = nudft(set.inputs, Vector::Zero(40), synth1d_grid());
  for (const auto& v : s.values) EXPECT_EQ(std::abs(v), 0.0);
}

TEST(Nudft, ZeroFrequencyIsMean) {
  Rng rng(3);
  Matrix xs(57, 3);
  Vector ys(57);
  for (Eigen::Index i = 0; i < xs.size(); ++i) xs.data()[i] = rng.uniform(-5, 5);
  for (Eigen::Index i = 0; i < ys.size(); ++i) ys(i) = rng.uniform(-2, 2);
  Vector d(3);
  d << 0.48, 0.6, 0.64;
  const auto s = nudft(xs, ys, make_grid({0.0, 1.0}, d));
  EXPECT_NEAR(s.values[0].real(), ys.mean(), 1e-12);
  EXPECT_EQ(s.values[0].imag(), 0.0);
}

TEST(Nudft, MatchesComplexExponentialOracle) {
  Rng rng(4);
  Matrix xs(80, 2);
  Vector ys(80);
  for (Eigen::Index i = 0; i < xs.size(); ++i) xs.data()[i] = rng.uniform(-3, 3);
  for (Eigen::Index i = 0; i < ys.size(); ++i) ys(i) = rng.uniform(-1, 1);
  Vector d(2);
  d << 0.6, -0.8;
  const auto grid = make_grid(linspace(0.0, 12.0, 97), d);
  const auto s = nudft(xs, ys, grid);
  const auto p = projected(xs, d);
  const std::vector<double> y(ys.data(), ys.data() + ys.size());
  for (std::size_t j = 0; j < grid.ks.size(); ++j)
    EXPECT_LT(std::abs(s.values[j] - oracle::nudft(p, y, grid.ks[j])), 1e-13);
}

TEST(Nudft, Linearity) {
  const auto set = gen_synth1d_nonuniform(65, 2);
  Rng rng(5);
  Vector a(65), b(65);
  for (int i = 0; i < 65; ++i) {
    a(i) = rng.uniform(-1, 1);
    b(i) = rng.uniform(-1, 1);
  }
  const auto grid = synth1d_grid();
  const auto fa = nudft(set.inputs, a, grid), fb = nudft(set.inputs, b, grid), fab = nudft(set.inputs, a + b, grid);
  for (std::size_t j = 0; j < grid.ks.size(); ++j)
    EXPECT_LT(std::abs(fab.values[j] - (fa.values[j] + fb.values[j])), 1e-12);
}

TEST(Nudft, ConjugateSymmetryWithMirroredDirection) {
  const auto set = gen_synth1d_nonuniform(100, 3);
  const Vector ys = set.targets.col(0) + 0.3 * set.inputs.col(0);
  const auto grid = synth1d_grid(200);
  const auto mirrored = make_grid(grid.ks, -Vector::Ones(1));
  const auto f = nudft(set.inputs, ys, grid), g = nudft(set.inputs, ys, mirrored);
  for (std::size_t j = 0; j < grid.ks.size(); ++j) EXPECT_LT(std::abs(g.values[j] - std::conj(f.values[j])), 1e-12);
}

TEST(Nudft, BoundedByLargestTarget) {
  const auto set = gen_synth1d_nonuniform(65, 9);
  const auto s = nudft(set.inputs, set.targets.col(0), synth1d_grid());
  const double bound = set.targets.cwiseAbs().maxCoeff();
  for (const auto& v : s.values) EXPECT_LE(std::abs(v), bound + 1e-15);
}

TEST(Nudft, AliasingOnUniformGrid) {
  const int n = 65;
  const auto set = gen_synth1d_uniform(n);
  const double delta = 2 * pi / (n - 1);
  Vector low(n), high(n);
  const double omega = 6.0;
  for (int i = 0; i < n; ++i) {
    low(i) = std::sin(omega * set.inputs(i, 0));
    high(i) = std::sin((omega + 2 * pi / delta) * set.inputs(i, 0));
  }
  const auto grid = synth1d_grid();
  const auto a = nudft(set.inputs, low, grid), b = nudft(set.inputs, high, grid);
  for (std::size_t j = 0; j < grid.ks.size(); ++j) EXPECT_LT(std::abs(a.values[j] - b.values[j]), 1e-10);
}

TEST(Nudft, Errors) {
  Matrix xs(2, 2);
  xs.setOnes();
  EXPECT_THROW(nudft(xs, Vector::Ones(2), synth1d_grid()), ShapeError);
  EXPECT_THROW(nudft(Matrix(0, 1), Vector(0), synth1d_grid()), DomainError);
  EXPECT_THROW(nudft(column({1, 2}), Vector::Ones(3), synth1d_grid()), ShapeError);
}

TEST(NudftVector, SingleChannelReducesToScalar) {
  const auto set = gen_synth1d_nonuniform(65, 1);
  const auto grid = synth1d_grid(50);
  const auto v = nudft_vector(set.inputs, set.targets, grid);
  const auto s = nudft(set.inputs, set.targets.col(0), grid);
  EXPECT_EQ(v.values, s.values);
  EXPECT_EQ(v.channels, 1);
}

TEST(NudftVector, IdenticalChannelsScaleBySqrtQ) {
  const auto set = gen_synth1d_nonuniform(65, 1);
  const auto grid = synth1d_grid(50);
  Matrix ys(65, 4);
  for (int j = 0; j < 4; ++j) ys.col(j) = set.targets.col(0);
  const auto v = nudft_vector(set.inputs, ys, grid);
  const auto s = nudft(set.inputs, set.targets.col(0), grid);
  for (std::size_t i = 0; i < grid.ks.size(); ++i) EXPECT_NEAR(std::abs(v.values[i]), 2.0 * std::abs(s.values[i]), 1e-14);
  EXPECT_EQ(v.channels, 4);
}

TEST(NudftVector, ThreePointTwoChannelByHand) {
  Matrix xs(3, 1);
  xs << -1.0, 0.5, 2.0;
  Matrix ys(3, 2);
  ys << 1.0, 0.0, -2.0, 1.0, 0.5, 3.0;
  const double k = 0.7;
  std::complex<double> f0(0, 0), f1(0, 0);
  for (int i = 0; i < 3; ++i) {
    const auto e = std::exp(std::complex<double>(0, -k * xs(i, 0)));
    f0 += ys(i, 0) * e;
    f1 += ys(i, 1) * e;
  }
  f0 /= 3.0;
  f1 /= 3.0;
  const auto v = nudft_vector(xs, ys, make_grid({k}, Vector::Ones(1)));
  EXPECT_NEAR(v.values[0].real(), std::sqrt(std::norm(f0) + std::norm(f1)), 1e-15);
  EXPECT_EQ(v.values[0].imag(), 0.0);
}

TEST(ParitySpectrum, ClosedFormExamples) {
  const auto a = exact_parity_spectrum(10, {0.0, pi / 4, pi / 2});
  EXPECT_EQ(a[0], 0.0);
  EXPECT_NEAR(a[1], 1.0 / 32.0, 1e-15);
  EXPECT_NEAR(a[2], 1.0, 1e-15);
}

TEST(ParitySpectrum, BruteForceMatchesClosedForm) {
  Rng rng(10);
  for (int m : {1, 3, 6, 10}) {
    for (int t = 0; t < 50; ++t) {
      const double k = rng.uniform(0.0, pi / 2);
      EXPECT_NEAR(std::abs(oracle::parity_transform(m, k)), exact_parity_spectrum(m, {k})[0], 1e-9);
    }
  }
}

TEST(ParitySpectrum, LibraryTransformOnDiagonalGrid) {
  const auto full = parity_enumerate(ParitySpec::full(10));
  const auto grid = parity_grid(10, 101);
  const auto s = nudft(full.inputs, full.targets.col(0), grid);
  const auto exact = exact_parity_spectrum(10, grid.ks);
  for (std::size_t i = 0; i < grid.ks.size(); ++i) {
    EXPECT_NEAR(std::abs(s.values[i]), exact[i], 1e-12);
    EXPECT_LT(std::abs(s.values[i] - oracle::parity_transform(10, grid.ks[i])), 1e-12);
  }
}

TEST(Pca, LineThroughThreeFour) {
  Matrix xs(5, 2);
  for (int i = 0; i < 5; ++i) {
    xs(i, 0) = -0.6 * (i - 2) * 1.7 + 1.0;
    xs(i, 1) = -0.8 * (i - 2) * 1.7 - 2.0;
  }
  const auto d = pca_direction(xs);
  EXPECT_NEAR(d(0), 0.6, 1e-12);
  EXPECT_NEAR(d(1), 0.8, 1e-12);
}

TEST(Pca, TwoPointSet) {
  Matrix xs(2, 2);
  xs << 1, 0, -1, 0;
  const auto d = pca_direction(xs);
  EXPECT_NEAR(d(0), 1.0, 1e-12);
  EXPECT_NEAR(d(1), 0.0, 1e-12);
}

TEST(Pca, MatchesDenseEigensolver) {
  Rng rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix xs(100, 5);
    const double scale[] = {3.0, 1.5, 1.0, 0.6, 0.3};
    for (Eigen::Index i = 0; i < 100; ++i)
      for (int j = 0; j < 5; ++j) xs(i, j) = scale[j] * rng.uniform(-1, 1);
    // Rotate so the principal axis is not a coordinate axis.
    Matrix q = Eigen::HouseholderQR<Matrix>(Matrix::NullaryExpr(5, 5, [&] { return rng.uniform(-1, 1); })).householderQ();
    xs = xs * q.transpose();
    const Matrix centered = xs.rowwise() - xs.colwise().mean();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(centered.transpose() * centered / 100.0);
    const Vector top = eig.eigenvectors().col(4);
    const Vector d = pca_direction(xs);
    EXPECT_GT(std::abs(d.dot(top)), 1.0 - 1e-8);
    EXPECT_NEAR(d.norm(), 1.0, 1e-12);
    Eigen::Index largest = 0;
    d.cwiseAbs().maxCoeff(&largest);
    EXPECT_GT(d(largest), 0.0);

    // Variance along d beats random directions.
    auto variance = [&](const Vector& u) { return (centered * u).squaredNorm(); };
    for (int r = 0; r < 100; ++r) {
      Vector u(5);
      for (int j = 0; j < 5; ++j) u(j) = rng.uniform(-1, 1);
      u.normalize();
      EXPECT_GE(variance(d), variance(u) * (1 - 1e-12));
    }
  }
}

TEST(Pca, DegenerateInput) {
  EXPECT_THROW(pca_direction(Matrix::Ones(5, 3)), DomainError);
  EXPECT_THROW(pca_direction(Matrix::Ones(1, 3)), DomainError);
}

TEST(Grids, Presets) {
  const auto s = synth1d_grid();
  EXPECT_EQ(s.ks.size(), 1000u);
  EXPECT_EQ(s.ks.front(), 0.0);
  EXPECT_EQ(s.ks.back(), 10.0);
  const auto p = parity_grid(10);
  EXPECT_EQ(p.ks.back(), pi / 2);
  EXPECT_EQ(p.projection, Projection::diagonal);
  EXPECT_NEAR(p.direction.norm(), 1.0, 1e-12);
  Vector d = Vector::Zero(784);
  d(0) = 1.0;
  const auto m = mnist_grid(d);
  EXPECT_EQ(m.ks.back(), 2 * pi);
  for (std::size_t i = 1; i < m.ks.size(); ++i) EXPECT_NEAR(m.ks[i] - m.ks[i - 1], 2 * pi / 999, 1e-14);
}

TEST(Grids, Validation) {
  EXPECT_THROW(make_grid({0.0, 0.0}, Vector::Ones(1)), DomainError);
  EXPECT_THROW(make_grid({1.0, 0.5}, Vector::Ones(1)), DomainError);
  EXPECT_THROW(make_grid({-1.0}, Vector::Ones(1)), DomainError);
  EXPECT_THROW(make_grid({1.0}, Vector::Constant(2, 1.0)), DomainError);
  EXPECT_THROW(make_grid({}, Vector::Ones(1)), DomainError);
}

TEST(SpectrumDifference, Cases) {
  const auto set = gen_synth1d_nonuniform(65, 1);
  const auto grid = synth1d_grid(100);
  const auto a = nudft(set.inputs, set.targets.col(0), grid);
  for (double d : spectrum_difference(a, a)) EXPECT_EQ(d, 0.0);
  // Disjoint support: a spectrum against zero returns its amplitudes, and back.
  const auto zero = nudft(set.inputs, Vector::Zero(65), grid);
  const auto plus = spectrum_difference(a, zero), minus = spectrum_difference(zero, a);
  for (std::size_t i = 0; i < plus.size(); ++i) {
    EXPECT_EQ(plus[i], std::abs(a.values[i]));
    EXPECT_EQ(minus[i], -std::abs(a.values[i]));
  }
  EXPECT_THROW(spectrum_difference(a, nudft(set.inputs, set.targets.col(0), synth1d_grid(50))), ShapeError);
}

TEST(SpectrumSeries, Invariants) {
  const auto set = gen_synth1d_uniform(10);
  const auto s = nudft(set.inputs, set.targets.col(0), synth1d_grid(10));
  SpectrumSeries series;
  series.add({0, DataRole::train, s, s});
  series.add({0, DataRole::test, s, s});
  series.add({5, DataRole::train, s, s});
  EXPECT_THROW(series.add({5, DataRole::train, s, s}), DomainError);
  const auto other = nudft(set.inputs, set.targets.col(0), synth1d_grid(11));
  EXPECT_THROW(series.add({9, DataRole::train, other, other}), ShapeError);
  EXPECT_EQ(series.epochs(DataRole::train), (std::vector<long>{0, 5}));
  EXPECT_NE(series.find(5, DataRole::train), nullptr);
  EXPECT_EQ(series.find(5, DataRole::test), nullptr);
}
