#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "groklens/error.hpp"
#include "groklens/nn.hpp"

namespace groklens {

enum class OptimizerKind { adam, sgd };

inline std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "sgd"; }

inline OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "sgd") return OptimizerKind::sgd;
  throw ConfigError("unknown optimizer '" + std::string(s) + "'");
}

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamHyper hyper;
  std::uint64_t step = 0;
  Parameters m;
  Parameters v;

  static AdamState for_params(const Parameters& params, AdamHyper hyper = {}) {
    return AdamState{hyper, 0, Parameters::zeros_like(params), Parameters::zeros_like(params)};
  }

  bool operator==(const AdamState& o) const {
    return hyper.beta1 == o.hyper.beta1 && hyper.beta2 == o.hyper.beta2 && hyper.eps == o.hyper.eps &&
           step == o.step && m == o.m && v == o.v;
  }
};

namespace detail {

inline void require_congruent(const Parameters& params, const Parameters& grads, const char* who) {
  if (!params.same_shape(grads)) throw ShapeError(std::string(who) + ": gradients are not shape-congruent");
}

inline void require_finite(const Parameters& grads) {
  for (std::size_t l = 0; l < grads.num_layers(); ++l) {
    const Matrix& w = grads.weights[l];
    if (!w.allFinite()) {
      for (Eigen::Index r = 0; r < w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.cols(); ++c)
          if (!std::isfinite(w(r, c)))
            throw NumericalError("non-finite gradient at layer " + std::to_string(l) + " weight[" +
                                 std::to_string(r) + "," + std::to_string(c) + "]");
    }
    const Vector& b = grads.biases[l];
    if (!b.allFinite()) {
      for (Eigen::Index r = 0; r < b.size(); ++r)
        if (!std::isfinite(b(r)))
          throw NumericalError("non-finite gradient at layer " + std::to_string(l) + " bias[" + std::to_string(r) +
                               "]");
    }
  }
}

}  // namespace detail

/// params <- params - lr * grads
inline void sgd_step(Parameters& params, const Parameters& grads, double lr) {
  detail::require_congruent(params, grads, "sgd_step");
  if (!(lr > 0.0)) throw DomainError("sgd_step: learning rate must be positive");
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    params.weights[l] -= lr * grads.weights[l];
    params.biases[l] -= lr * grads.biases[l];
  }
}

/// Adam with bias correction. Updates state and params in place.
inline void adam_step(AdamState& state, Parameters& params, const Parameters& grads, double lr) {
  detail::require_congruent(params, grads, "adam_step");
  if (!state.m.same_shape(params) || !state.v.same_shape(params))
    throw ShapeError("adam_step: optimizer state does not match parameters");
  if (!(lr > 0.0)) throw DomainError("adam_step: learning rate must be positive");
  detail::require_finite(grads);

  const auto [b1, b2, eps] = state.hyper;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(b1, t);
  const double correction2 = 1.0 - std::pow(b2, t);

  auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    update(params.weights[l], state.m.weights[l], state.v.weights[l], grads.weights[l]);
    update(params.biases[l], state.m.biases[l], state.v.biases[l], grads.biases[l]);
  }
}

// Binary checkpoint of an AdamState, host byte order:
// "GLADAM01", beta1, beta2, eps, step, layer count, then per layer
// rows, cols, m weights, v weights, m biases, v biases (column-major doubles).

namespace detail {

template <typename T>
void put(std::ostream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw DataError("truncated optimizer checkpoint");
  return value;
}

inline void put_block(std::ostream& os, const double* data, Eigen::Index count) {
  os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
}

inline void get_block(std::istream& is, double* data, Eigen::Index count) {
  is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
  if (!is) throw DataError("truncated optimizer checkpoint");
}

}  // namespace detail

inline void save_adam_state(std::ostream& os, const AdamState& state) {
  os.write("GLADAM01", 8);
  detail::put(os, state.hyper.beta1);
  detail::put(os, state.hyper.beta2);
  detail::put(os, state.hyper.eps);
  detail::put(os, state.step);
  detail::put(os, static_cast<std::uint64_t>(state.m.num_layers()));
  for (std::size_t l = 0; l < state.m.num_layers(); ++l) {
    detail::put(os, static_cast<std::int64_t>(state.m.weights[l].rows()));
    detail::put(os, static_cast<std::int64_t>(state.m.weights[l].cols()));
    detail::put_block(os, state.m.weights[l].data(), state.m.weights[l].size());
    detail::put_block(os, state.v.weights[l].data(), state.v.weights[l].size());
    detail::put_block(os, state.m.biases[l].data(), state.m.biases[l].size());
    detail::put_block(os, state.v.biases[l].data(), state.v.biases[l].size());
  }
}

inline AdamState load_adam_state(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, "GLADAM01", 8) != 0) throw DataError("not an optimizer checkpoint");
  AdamState state;
  state.hyper.beta1 = detail::get<double>(is);
  state.hyper.beta2 = detail::get<double>(is);
  state.hyper.eps = detail::get<double>(is);
  state.step = detail::get<std::uint64_t>(is);
  const auto layers = detail::get<std::uint64_t>(is);
  if (layers > 4096) throw DataError("implausible layer count in optimizer checkpoint");
  for (std::uint64_t l = 0; l < layers; ++l) {
    const auto rows = detail::get<std::int64_t>(is);
    const auto cols = detail::get<std::int64_t>(is);
    if (rows <= 0 || cols <= 0 || rows > (1 << 24) || cols > (1 << 24))
      throw DataError("implausible layer shape in optimizer checkpoint");
    Matrix mw(rows, cols), vw(rows, cols);
    Vector mb(rows), vb(rows);
    detail::get_block(is, mw.data(), mw.size());
    detail::get_block(is, vw.data(), vw.size());
    detail::get_block(is, mb.data(), mb.size());
    detail::get_block(is, vb.data(), vb.size());
    state.m.weights.push_back(std::move(mw));
    state.v.weights.push_back(std::move(vw));
    state.m.biases.push_back(std::move(mb));
    state.v.biases.push_back(std::move(vb));
  }
  return state;
}

}  // namespace groklens
