#pragma once

// Directional nonuniform DFT by direct summation,
//   F(k) = (1/n) sum_i y_i exp(-i k (x_i . d)),
// plus the closed-form parity spectrum and the PCA projection direction.

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "groklens/error.hpp"
#include "groklens/fastmath.hpp"
#include "groklens/nn.hpp"
#include "groklens/rng.hpp"

namespace groklens {

using Complex = std::complex<double>;

/// How a sample is reduced to the scalar multiplied by k in the phase.
enum class Projection {
  unit_direction,  // x . d
  diagonal,        // sum_j x_j, i.e. the frequency vector k * (1, ..., 1)
};

struct FrequencyGrid {
  std::string name;
  std::vector<double> ks;
  Vector direction;  // unit vector; for Projection::diagonal it is 1/sqrt(m) and recorded only
  Projection projection = Projection::unit_direction;

  Eigen::Index dim() const { return direction.size(); }

  void validate() const {
    if (ks.empty()) throw DomainError("frequency grid is empty");
    for (std::size_t i = 0; i < ks.size(); ++i) {
      if (!std::isfinite(ks[i]) || ks[i] < 0.0) throw DomainError("frequency grid values must be finite and >= 0");
      if (i > 0 && !(ks[i] > ks[i - 1])) throw DomainError("frequency grid must be strictly increasing");
    }
    if (direction.size() == 0) throw DomainError("frequency grid has no direction");
    if (std::abs(direction.norm() - 1.0) > 1e-12) throw DomainError("grid direction must have unit norm");
  }

  bool operator==(const FrequencyGrid& o) const {
    return ks == o.ks && direction.size() == o.direction.size() && direction == o.direction &&
           projection == o.projection;
  }
};

/// k values evenly spaced on [lo, hi] with both endpoints exact.
inline std::vector<double> linspace(double lo, double hi, int count) {
  if (count < 2) throw DomainError("linspace needs at least 2 points");
  std::vector<double> ks(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) ks[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
  ks.back() = hi;
  return ks;
}

inline FrequencyGrid make_grid(std::vector<double> ks, Vector direction, std::string name = {},
                               Projection projection = Projection::unit_direction) {
  FrequencyGrid g{std::move(name), std::move(ks), std::move(direction), projection};
  g.validate();
  return g;
}

struct Spectrum {
  FrequencyGrid grid;
  std::vector<Complex> values;
  // 1 for a scalar transform. For channels > 1 the values hold the Euclidean
  // norm across channels as real numbers and carry no phase.
  int channels = 1;

  std::vector<double> amplitudes() const {
    std::vector<double> a(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) a[i] = std::abs(values[i]);
    return a;
  }
};

namespace detail {

inline std::vector<double> project(const Matrix& xs, const FrequencyGrid& grid) {
  if (xs.rows() == 0) throw DomainError("nudft: empty data set");
  if (xs.cols() != grid.dim())
    throw ShapeError("nudft: data dimension " + std::to_string(xs.cols()) + " does not match direction dimension " +
                     std::to_string(grid.dim()));
  Vector p = grid.projection == Projection::diagonal ? Vector(xs.rowwise().sum()) : Vector(xs * grid.direction);
  return {p.data(), p.data() + p.size()};
}

// (1/n) sum_i y_i exp(-i k p_i) for every k, with a fixed per-k summation order.
inline std::vector<Complex> transform(const std::vector<double>& proj, const double* ys, const std::vector<double>& ks) {
  const std::size_t n = proj.size();
  std::vector<double> phase(n), c(n), s(n);
  std::vector<Complex> out(ks.size());
  for (std::size_t j = 0; j < ks.size(); ++j) {
    const double k = ks[j];
    for (std::size_t i = 0; i < n; ++i) phase[i] = k * proj[i];
    fastmath::cos(phase.data(), c.data(), n);
    fastmath::sin(phase.data(), s.data(), n);
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      re += ys[i] * c[i];
      im -= ys[i] * s[i];
    }
    out[j] = Complex(re / static_cast<double>(n), im / static_cast<double>(n));
  }
  return out;
}

}  // namespace detail

/// Scalar targets: ys has n entries.
inline Spectrum nudft(const Matrix& xs, const Vector& ys, const FrequencyGrid& grid) {
  grid.validate();
  if (ys.size() != xs.rows()) throw ShapeError("nudft: number of targets does not match number of samples");
  const auto proj = detail::project(xs, grid);
  return Spectrum{grid, detail::transform(proj, ys.data(), grid.ks), 1};
}

/// Vector targets (n x q): per-channel transforms combined as
/// sqrt(sum_j |F_j(k)|^2). For q == 1 this is the complex scalar transform.
inline Spectrum nudft_vector(const Matrix& xs, const Matrix& ys, const FrequencyGrid& grid) {
  grid.validate();
  if (ys.rows() != xs.rows()) throw ShapeError("nudft_vector: number of targets does not match number of samples");
  if (ys.cols() == 0) throw ShapeError("nudft_vector: targets have no channels");
  if (ys.cols() == 1) return nudft(xs, ys.col(0), grid);
  const auto proj = detail::project(xs, grid);
  std::vector<double> power(grid.ks.size(), 0.0);
  for (Eigen::Index j = 0; j < ys.cols(); ++j) {
    const Vector channel = ys.col(j);
    const auto f = detail::transform(proj, channel.data(), grid.ks);
    for (std::size_t i = 0; i < f.size(); ++i) power[i] += std::norm(f[i]);
  }
  Spectrum out{grid, std::vector<Complex>(grid.ks.size()), static_cast<int>(ys.cols())};
  for (std::size_t i = 0; i < power.size(); ++i) out.values[i] = Complex(std::sqrt(power[i]), 0.0);
  return out;
}

/// |sin k|^m: modulus of the exact parity spectrum (-i)^m prod_j sin(xi_j)
/// along xi = k * (1, ..., 1). Meaningful for k in [0, pi/2].
inline std::vector<double> exact_parity_spectrum(int m, const std::vector<double>& ks) {
  std::vector<double> out(ks.size());
  for (std::size_t i = 0; i < ks.size(); ++i) out[i] = std::pow(std::abs(std::sin(ks[i])), m);
  return out;
}

struct PcaOptions {
  double alignment_tolerance = 1e-12;
  int max_iterations = 10000;
  std::uint64_t start_seed = 0x5eed;
};

/// Top eigenvector of the covariance of the centered rows of xs, by power
/// iteration. Sign is chosen so the largest-magnitude component is positive.
inline Vector pca_direction(const Matrix& xs, PcaOptions opts = {}) {
  if (xs.rows() < 2) throw DomainError("pca_direction needs at least 2 points");
  const Vector mean = xs.colwise().mean().transpose();
  const Matrix centered = xs.rowwise() - mean.transpose();
  const Matrix cov = (centered.transpose() * centered) / static_cast<double>(xs.rows());
  if (!(cov.cwiseAbs().maxCoeff() > 0.0)) throw DomainError("pca_direction: data has zero covariance");

  Rng rng(opts.start_seed);
  Vector v(xs.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.uniform(-1.0, 1.0);
  v.normalize();
  for (int it = 0; it < opts.max_iterations; ++it) {
    Vector next = cov * v;
    const double norm = next.norm();
    if (!(norm > 0.0)) throw DomainError("pca_direction: power iteration collapsed");
    next /= norm;
    const double alignment = std::abs(next.dot(v));
    v = std::move(next);
    if (alignment > 1.0 - opts.alignment_tolerance) break;
  }
  Eigen::Index largest = 0;
  v.cwiseAbs().maxCoeff(&largest);
  if (v(largest) < 0.0) v = -v;
  return v;
}

inline constexpr int kDefaultGridPoints = 1000;

/// k in [0, 10] along the real line.
inline FrequencyGrid synth1d_grid(int points = kDefaultGridPoints) {
  return make_grid(linspace(0.0, 10.0, points), Vector::Ones(1), "synth1d");
}

/// k in [0, pi/2] on the diagonal xi = k * (1, ..., 1) of {-1, 1}^m.
inline FrequencyGrid parity_grid(int m, int points = kDefaultGridPoints) {
  if (m < 1) throw DomainError("parity grid needs m >= 1");
  return make_grid(linspace(0.0, std::numbers::pi / 2.0, points),
                   Vector::Constant(m, 1.0 / std::sqrt(static_cast<double>(m))), "parity", Projection::diagonal);
}

/// k in [0, 2 pi] along a principal direction.
inline FrequencyGrid mnist_grid(const Vector& direction, int points = kDefaultGridPoints) {
  return make_grid(linspace(0.0, 2.0 * std::numbers::pi, points), direction, "mnist");
}

/// |a(k)| - |b(k)| per k. Both spectra must share one grid.
inline std::vector<double> spectrum_difference(const Spectrum& a, const Spectrum& b) {
  if (!(a.grid == b.grid) || a.values.size() != b.values.size())
    throw ShapeError("spectrum_difference: spectra are on different grids");
  std::vector<double> d(a.values.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::abs(a.values[i]) - std::abs(b.values[i]);
  return d;
}

enum class DataRole { train, test, full };

inline std::string_view to_string(DataRole r) {
  switch (r) {
    case DataRole::train: return "train";
    case DataRole::test: return "test";
    case DataRole::full: return "full";
  }
  return "?";
}

struct SpectrumSnapshot {
  long epoch = 0;
  DataRole role = DataRole::train;
  Spectrum target;
  Spectrum output;
};

/// Epoch-indexed snapshots on a single grid; epochs strictly increase per role.
class SpectrumSeries {
 public:
  void add(SpectrumSnapshot snap) {
    if (!snapshots_.empty() && !(snap.target.grid == snapshots_.front().target.grid))
      throw ShapeError("spectrum series: snapshot on a different grid");
    if (!(snap.target.grid == snap.output.grid)) throw ShapeError("spectrum series: target/output grids differ");
    for (auto it = snapshots_.rbegin(); it != snapshots_.rend(); ++it) {
      if (it->role == snap.role) {
        if (snap.epoch <= it->epoch) throw DomainError("spectrum series: epochs must strictly increase");
        break;
      }
    }
    snapshots_.push_back(std::move(snap));
  }

  const std::vector<SpectrumSnapshot>& snapshots() const { return snapshots_; }

  const SpectrumSnapshot* find(long epoch, DataRole role) const {
    for (const auto& s : snapshots_)
      if (s.epoch == epoch && s.role == role) return &s;
    return nullptr;
  }

  std::vector<long> epochs(DataRole role) const {
    std::vector<long> out;
    for (const auto& s : snapshots_)
      if (s.role == role) out.push_back(s.epoch);
    return out;
  }

 private:
  std::vector<SpectrumSnapshot> snapshots_;
};

}  // namespace groklens
