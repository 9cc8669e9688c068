#pragma once

// Dense multilayer perceptron with exact reverse-mode gradients of the
// half mean-squared-error loss. Batches are row-major in the sample index:
// an n x m matrix holds n samples of dimension m.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "groklens/error.hpp"
#include "groklens/fastmath.hpp"
#include "groklens/rng.hpp"

namespace groklens {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { sin, relu, tanh };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::sin: return "sin";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
  }
  return "?";
}

inline Activation parse_activation(std::string_view s) {
  if (s == "sin") return Activation::sin;
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + std::string(s) + "'");
}

inline double activate(Activation a, double z) {
  switch (a) {
    case Activation::sin: return std::sin(z);
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::tanh: return std::tanh(z);
  }
  return z;
}

inline double activate_derivative(Activation a, double z) {
  switch (a) {
    case Activation::sin: return std::cos(z);
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

/// Weights and biases of every layer. Also used for gradients and optimizer
/// moments, which share the exact shapes of the network parameters.
struct Parameters {
  std::vector<Matrix> weights;  // weights[l] is width[l+1] x width[l]
  std::vector<Vector> biases;   // biases[l] has width[l+1] entries

  std::size_t num_layers() const { return weights.size(); }

  std::size_t size() const {
    std::size_t total = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) total += weights[l].size() + biases[l].size();
    return total;
  }

  static Parameters zeros_like(const Parameters& other) {
    Parameters p;
    for (std::size_t l = 0; l < other.num_layers(); ++l) {
      p.weights.push_back(Matrix::Zero(other.weights[l].rows(), other.weights[l].cols()));
      p.biases.push_back(Vector::Zero(other.biases[l].size()));
    }
    return p;
  }

  bool same_shape(const Parameters& other) const {
    if (num_layers() != other.num_layers()) return false;
    for (std::size_t l = 0; l < num_layers(); ++l) {
      if (weights[l].rows() != other.weights[l].rows() || weights[l].cols() != other.weights[l].cols() ||
          biases[l].size() != other.biases[l].size())
        return false;
    }
    return true;
  }

  /// Visits every scalar in canonical order: layer-major, weights (row-major)
  /// before biases. fn receives (layer, is_bias, row, col, value&).
  template <typename Fn>
  void for_each(Fn&& fn) {
    for (std::size_t l = 0; l < num_layers(); ++l) {
      for (Eigen::Index r = 0; r < weights[l].rows(); ++r)
        for (Eigen::Index c = 0; c < weights[l].cols(); ++c) fn(l, false, r, c, weights[l](r, c));
      for (Eigen::Index r = 0; r < biases[l].size(); ++r) fn(l, true, r, Eigen::Index{0}, biases[l](r));
    }
  }

  /// All scalars in canonical order.
  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(size());
    for (std::size_t l = 0; l < num_layers(); ++l) {
      for (Eigen::Index r = 0; r < weights[l].rows(); ++r)
        for (Eigen::Index c = 0; c < weights[l].cols(); ++c) out.push_back(weights[l](r, c));
      for (Eigen::Index r = 0; r < biases[l].size(); ++r) out.push_back(biases[l](r));
    }
    return out;
  }

  bool operator==(const Parameters& other) const {
    if (!same_shape(other)) return false;
    for (std::size_t l = 0; l < num_layers(); ++l)
      if (weights[l] != other.weights[l] || biases[l] != other.biases[l]) return false;
    return true;
  }
};

using Gradients = Parameters;

struct Mlp {
  std::vector<int> widths;  // input, hidden..., output
  Activation activation = Activation::sin;
  std::uint64_t init_seed = 0;
  double init_scale = 1.0;
  Parameters params;

  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }
  std::size_t num_layers() const { return params.num_layers(); }
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases, every
/// draw multiplied by alpha. Draw order is layer-major, row-major, weights
/// before biases.
inline Mlp init_mlp(const std::vector<int>& widths, Activation activation, std::uint64_t seed, double alpha) {
  if (widths.size() < 2) throw ConfigError("layer_widths needs at least 2 entries");
  if (std::any_of(widths.begin(), widths.end(), [](int w) { return w <= 0; }))
    throw ConfigError("layer_widths must all be positive");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be finite and >= 0");

  Mlp mlp;
  mlp.widths = widths;
  mlp.activation = activation;
  mlp.init_seed = seed;
  mlp.init_scale = alpha;

  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths[l]));
    Matrix w(widths[l + 1], widths[l]);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound) * alpha;
    Vector b(widths[l + 1]);
    for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = rng.uniform(-bound, bound) * alpha;
    mlp.params.weights.push_back(std::move(w));
    mlp.params.biases.push_back(std::move(b));
  }
  return mlp;
}

struct ForwardCache {
  std::vector<Matrix> pre;   // pre[l]: n x width[l+1], before activation
  std::vector<Matrix> post;  // post[0] is the input batch; post.back() the output

  const Matrix& output() const { return post.back(); }
  Eigen::Index batch_size() const { return post.empty() ? 0 : post.front().rows(); }
};

namespace detail {

inline void apply_activation(Activation a, const Matrix& z, Matrix& out) {
  out.resize(z.rows(), z.cols());
  const double* src = z.data();
  double* dst = out.data();
  const Eigen::Index count = z.size();
  switch (a) {
    case Activation::sin:
      fastmath::sin(src, dst, static_cast<std::size_t>(count));
      break;
    case Activation::relu:
      out = z.cwiseMax(0.0);
      break;
    case Activation::tanh:
      for (Eigen::Index i = 0; i < count; ++i) dst[i] = std::tanh(src[i]);
      break;
  }
}

// z = a * w^T + 1 b^T, with the bias broadcast written first and the
// product accumulated on top.
inline void affine(const Matrix& a, const Matrix& w, const Vector& b, Matrix& z) {
  z.resize(a.rows(), w.rows());
  for (Eigen::Index j = 0; j < z.cols(); ++j) z.col(j).setConstant(b(j));
  z.noalias() += a * w.transpose();
}

inline void check_input(const Mlp& mlp, const Matrix& batch) {
  if (mlp.widths.size() < 2 || mlp.num_layers() + 1 != mlp.widths.size())
    throw ShapeError("network has inconsistent layer structure");
  if (batch.cols() != mlp.input_dim())
    throw ShapeError("batch has " + std::to_string(batch.cols()) + " columns, network expects " +
                     std::to_string(mlp.input_dim()));
}

}  // namespace detail

/// Forward pass that records every intermediate for backward().
inline ForwardCache forward_cached(const Mlp& mlp, const Matrix& batch) {
  detail::check_input(mlp, batch);
  const std::size_t layers = mlp.num_layers();
  ForwardCache cache;
  cache.pre.resize(layers);
  cache.post.resize(layers + 1);
  cache.post[0] = batch;
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix& z = cache.pre[l];
    detail::affine(cache.post[l], mlp.params.weights[l], mlp.params.biases[l], z);
    if (l + 1 < layers)
      detail::apply_activation(mlp.activation, z, cache.post[l + 1]);
    else
      cache.post[l + 1] = z;
  }
  return cache;
}

/// Forward pass without keeping intermediates. Same arithmetic as
/// forward_cached, so outputs agree bit for bit.
inline Matrix forward(const Mlp& mlp, const Matrix& batch) {
  detail::check_input(mlp, batch);
  Matrix a = batch;
  Matrix z;
  for (std::size_t l = 0; l < mlp.num_layers(); ++l) {
    detail::affine(a, mlp.params.weights[l], mlp.params.biases[l], z);
    if (l + 1 < mlp.num_layers())
      detail::apply_activation(mlp.activation, z, a);
    else
      a = z;
  }
  return a;
}

/// (1/2n) * sum_i ||pred_i - target_i||^2
inline double mse_loss(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw ShapeError("mse_loss: prediction and target shapes differ");
  if (pred.rows() == 0) throw DomainError("mse_loss: empty batch");
  return (pred - target).squaredNorm() / (2.0 * static_cast<double>(pred.rows()));
}

/// Gradient of mse_loss(forward(batch), target) with respect to every parameter.
inline Gradients backward(const Mlp& mlp, const ForwardCache& cache, const Matrix& target) {
  const std::size_t layers = mlp.num_layers();
  if (cache.pre.size() != layers || cache.post.size() != layers + 1)
    throw ShapeError("backward: cache does not match network depth");
  for (std::size_t l = 0; l < layers; ++l) {
    if (cache.pre[l].cols() != mlp.widths[l + 1] || cache.post[l].cols() != mlp.widths[l] ||
        cache.pre[l].rows() != cache.batch_size())
      throw ShapeError("backward: stale cache for layer " + std::to_string(l));
  }
  const Matrix& out = cache.output();
  if (target.rows() != out.rows() || target.cols() != out.cols())
    throw ShapeError("backward: target shape does not match network output");
  if (out.rows() == 0) throw DomainError("backward: empty batch");

  Gradients grads;
  grads.weights.resize(layers);
  grads.biases.resize(layers);

  Matrix delta = (out - target) / static_cast<double>(out.rows());
  for (std::size_t l = layers; l-- > 0;) {
    grads.weights[l].noalias() = delta.transpose() * cache.post[l];
    grads.biases[l] = delta.colwise().sum().transpose();
    if (l == 0) break;
    Matrix upstream;
    upstream.noalias() = delta * mlp.params.weights[l];
    const Matrix& z = cache.pre[l - 1];
    switch (mlp.activation) {
      case Activation::sin: {
        Matrix slope(z.rows(), z.cols());
        fastmath::cos(z.data(), slope.data(), static_cast<std::size_t>(z.size()));
        delta = upstream.cwiseProduct(slope);
        break;
      }
      case Activation::relu:
        delta = (z.array() > 0.0).select(upstream, 0.0);
        break;
      case Activation::tanh: {
        const Matrix& a = cache.post[l];
        delta = upstream.array() * (1.0 - a.array().square());
        break;
      }
    }
  }
  return grads;
}

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;  // canonical parameter order
  std::size_t checked = 0;
  bool passed = true;
};

/// |a - n| / max(|a|, |n|, 1e-6).
inline double relative_discrepancy(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

/// Compares `analytic` against central differences of the loss at step h.
inline GradientCheckReport check_gradients(const Mlp& mlp, const Matrix& batch, const Matrix& target,
                                           const Gradients& analytic, double h, double tol) {
  if (!(h > 0.0) || !(tol > 0.0)) throw DomainError("check_gradients: h and tol must be positive");
  if (!analytic.same_shape(mlp.params)) throw ShapeError("check_gradients: gradient shape mismatch");
  GradientCheckReport report;
  Mlp probe = mlp;
  const std::vector<double> flat = analytic.flatten();
  std::size_t index = 0;
  probe.params.for_each([&](std::size_t, bool, Eigen::Index, Eigen::Index, double& value) {
    const double saved = value;
    value = saved + h;
    const double plus = mse_loss(forward(probe, batch), target);
    value = saved - h;
    const double minus = mse_loss(forward(probe, batch), target);
    value = saved;
    const double numeric = (plus - minus) / (2.0 * h);
    const double err = relative_discrepancy(flat[index], numeric);
    if (err > report.max_relative_error) {
      report.max_relative_error = err;
      report.worst_index = index;
    }
    ++index;
  });
  report.checked = index;
  report.passed = report.max_relative_error <= tol;
  return report;
}

inline GradientCheckReport check_gradients(const Mlp& mlp, const Matrix& batch, const Matrix& target, double h,
                                           double tol) {
  return check_gradients(mlp, batch, target, backward(mlp, forward_cached(mlp, batch), target), h, tol);
}

}  // namespace groklens
