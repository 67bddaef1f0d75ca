// vaereg/nn.hpp

// Copyright 2026  The vaereg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Fully connected feed-forward networks with hand-written reverse mode and an
// Adam optimizer. Samples are rows of the batch matrix.

#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "vaereg/binary_io.hpp"
#include "vaereg/error.hpp"
#include "vaereg/linalg.hpp"
#include "vaereg/rng.hpp"

namespace vaereg {

enum class Activation : std::uint8_t { kTanh = 0, kRelu = 1, kLinear = 2 };

inline const char *activation_name(Activation a) {
  switch (a) {
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
    case Activation::kLinear: return "linear";
  }
  return "?";
}

inline Activation activation_from_name(const std::string &s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "relu") return Activation::kRelu;
  if (s == "linear") return Activation::kLinear;
  fail(Errc::kInvalidArchitecture, "unknown activation '" + s + "'");
}

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
  Activation activation = Activation::kTanh;

  std::size_t in_width() const { return weight.cols(); }
  std::size_t out_width() const { return weight.rows(); }
  bool operator==(const DenseLayer &) const = default;
};

struct Mlp {
  std::vector<DenseLayer> layers;

  std::size_t input_width() const { return layers.front().in_width(); }
  std::size_t output_width() const { return layers.back().out_width(); }
  bool operator==(const Mlp &) const = default;
};

/// Pre- and post-activation values of every layer for one batch.
struct ForwardRecord {
  Matrix input;
  std::vector<Matrix> pre;
  std::vector<Matrix> post;

  const Matrix &output() const { return post.back(); }
};

struct LayerGradient {
  Matrix weight;
  Vector bias;
};

/// Parameter gradients mirroring an Mlp, plus the gradient with respect to
/// the network input (needed when networks are chained).
struct GradientSet {
  std::vector<LayerGradient> layers;
  Matrix input;
};

struct AdamState {
  std::uint64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<LayerGradient> first;
  std::vector<LayerGradient> second;
};

namespace detail {

inline double activate(Activation a, double x) {
  switch (a) {
    case Activation::kTanh: return std::tanh(x);
    case Activation::kRelu: return x > 0.0 ? x : 0.0;
    case Activation::kLinear: return x;
  }
  return x;
}

/// Derivative expressed through the pre-activation and its output.
inline double activate_grad(Activation a, double pre, double post) {
  switch (a) {
    case Activation::kTanh: return 1.0 - post * post;
    case Activation::kRelu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::kLinear: return 1.0;
  }
  return 1.0;
}

inline void validate(const Mlp &mlp) {
  if (mlp.layers.empty())
    fail(Errc::kInvalidArchitecture, "mlp has no layers");
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const auto &layer = mlp.layers[l];
    if (layer.bias.size() != layer.out_width())
      fail(Errc::kShapeMismatch, "layer " + std::to_string(l) + " bias width");
    if (l > 0 && layer.in_width() != mlp.layers[l - 1].out_width())
      fail(Errc::kShapeMismatch,
           "layer " + std::to_string(l) + " does not chain with its input");
  }
}

}  // namespace detail

/// Glorot-uniform weights, zero biases. The last layer gets `output`, all
/// others get `hidden`.
inline Mlp init_mlp(const std::vector<std::size_t> &widths, Activation hidden,
                    Activation output, std::uint64_t seed) {
  if (widths.size() < 2)
    fail(Errc::kInvalidArchitecture, "need at least input and output widths");
  for (auto w : widths)
    if (w == 0) fail(Errc::kInvalidArchitecture, "zero layer width");

  Rng rng(seed);
  Mlp mlp;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t fan_in = widths[l];
    const std::size_t fan_out = widths[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    DenseLayer layer;
    layer.weight = Matrix(fan_out, fan_in);
    for (auto &w : layer.weight.data()) w = rng.uniform(-limit, limit);
    layer.bias.assign(fan_out, 0.0);
    layer.activation = (l + 2 == widths.size()) ? output : hidden;
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

inline Mlp init_mlp(const std::vector<std::size_t> &widths, Activation hidden,
                    std::uint64_t seed) {
  return init_mlp(widths, hidden, hidden, seed);
}

inline ForwardRecord forward(const Mlp &mlp, const Matrix &batch) {
  detail::validate(mlp);
  if (batch.cols() != mlp.input_width())
    fail(Errc::kShapeMismatch, "forward: batch has " +
                                   std::to_string(batch.cols()) +
                                   " columns, network expects " +
                                   std::to_string(mlp.input_width()));
  ForwardRecord rec;
  rec.input = batch;
  const Matrix *x = &rec.input;
  for (const auto &layer : mlp.layers) {
    Matrix pre = matmul_nt(*x, layer.weight);
    Matrix post(pre.rows(), pre.cols());
    for (std::size_t i = 0; i < pre.rows(); ++i) {
      auto p = pre.row(i);
      auto q = post.row(i);
      for (std::size_t j = 0; j < p.size(); ++j) {
        p[j] += layer.bias[j];
        q[j] = detail::activate(layer.activation, p[j]);
      }
    }
    rec.pre.push_back(std::move(pre));
    rec.post.push_back(std::move(post));
    x = &rec.post.back();
  }
  return rec;
}

inline Matrix predict(const Mlp &mlp, const Matrix &batch) {
  return forward(mlp, batch).output();
}

/// Reverse-mode gradients of the scalar whose gradient with respect to the
/// network output is `upstream`.
inline GradientSet backward(const Mlp &mlp, const ForwardRecord &rec,
                            const Matrix &upstream) {
  detail::validate(mlp);
  if (rec.post.size() != mlp.layers.size())
    fail(Errc::kShapeMismatch, "backward: record does not match network");
  const Matrix &out = rec.output();
  if (upstream.rows() != out.rows() || upstream.cols() != out.cols())
    fail(Errc::kShapeMismatch, "backward: upstream gradient shape");

  GradientSet grads;
  grads.layers.resize(mlp.layers.size());
  Matrix delta = upstream;
  for (std::size_t l = mlp.layers.size(); l-- > 0;) {
    const auto &layer = mlp.layers[l];
    const Matrix &pre = rec.pre[l];
    const Matrix &post = rec.post[l];
    for (std::size_t i = 0; i < delta.rows(); ++i) {
      auto d = delta.row(i);
      auto p = pre.row(i);
      auto q = post.row(i);
      for (std::size_t j = 0; j < d.size(); ++j)
        d[j] *= detail::activate_grad(layer.activation, p[j], q[j]);
    }
    const Matrix &input = l == 0 ? rec.input : rec.post[l - 1];
    auto &g = grads.layers[l];
    g.weight = matmul_tn(delta, input);
    g.bias.assign(layer.out_width(), 0.0);
    for (std::size_t i = 0; i < delta.rows(); ++i) {
      auto d = delta.row(i);
      for (std::size_t j = 0; j < d.size(); ++j) g.bias[j] += d[j];
    }
    delta = matmul(delta, layer.weight);
  }
  grads.input = std::move(delta);
  return grads;
}

inline AdamState make_adam(const Mlp &mlp, double lr = 1e-3,
                           double beta1 = 0.9, double beta2 = 0.999,
                           double epsilon = 1e-8) {
  if (!(lr >= 0.0) || !(beta1 > 0.0 && beta1 < 1.0) ||
      !(beta2 > 0.0 && beta2 < 1.0) || !(epsilon > 0.0))
    fail(Errc::kInvalidConfig, "adam hyperparameters out of range");
  AdamState s;
  s.lr = lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  for (const auto &layer : mlp.layers) {
    LayerGradient z{Matrix(layer.weight.rows(), layer.weight.cols()),
                    Vector(layer.bias.size(), 0.0)};
    s.first.push_back(z);
    s.second.push_back(std::move(z));
  }
  return s;
}

/// One bias-corrected Adam update applied in place.
inline void adam_step(Mlp &mlp, const GradientSet &grads, AdamState &state) {
  const std::size_t n = mlp.layers.size();
  if (grads.layers.size() != n || state.first.size() != n ||
      state.second.size() != n)
    fail(Errc::kShapeMismatch, "adam_step: layer count");
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);

  auto update = [&](std::span<double> p, std::span<const double> g,
                    std::span<double> m, std::span<double> v) {
    if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size())
      fail(Errc::kShapeMismatch, "adam_step: parameter shape");
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= state.lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  };

  for (std::size_t l = 0; l < n; ++l) {
    auto &layer = mlp.layers[l];
    update(layer.weight.data(), grads.layers[l].weight.data(),
           state.first[l].weight.data(), state.second[l].weight.data());
    update(layer.bias, grads.layers[l].bias, state.first[l].bias,
           state.second[l].bias);
  }
}

// ---------------------------------------------------------------------------
// "MLP1" container: layer count, then per layer in-width, out-width,
// activation byte, row-major weights and biases as float64.

inline void write_mlp(std::ostream &os, const Mlp &mlp) {
  detail::validate(mlp);
  io::write_magic(os, "MLP1");
  io::write_u32(os, static_cast<std::uint32_t>(mlp.layers.size()));
  for (const auto &layer : mlp.layers) {
    io::write_u32(os, static_cast<std::uint32_t>(layer.in_width()));
    io::write_u32(os, static_cast<std::uint32_t>(layer.out_width()));
    io::write_u8(os, static_cast<std::uint8_t>(layer.activation));
    for (double w : layer.weight.data()) io::write_f64(os, w);
    for (double b : layer.bias) io::write_f64(os, b);
  }
}

inline Mlp read_mlp(std::istream &is) {
  io::expect_magic(is, "MLP1");
  const std::uint32_t count = io::read_u32(is);
  if (count == 0) fail(Errc::kParseError, "MLP1 with zero layers");
  Mlp mlp;
  for (std::uint32_t l = 0; l < count; ++l) {
    const std::uint32_t in = io::read_u32(is);
    const std::uint32_t out = io::read_u32(is);
    const std::uint8_t act = io::read_u8(is);
    if (act > 2) fail(Errc::kParseError, "MLP1 activation code");
    DenseLayer layer;
    layer.weight = Matrix(out, in);
    for (auto &w : layer.weight.data()) w = io::read_f64(is);
    layer.bias.resize(out);
    for (auto &b : layer.bias) b = io::read_f64(is);
    layer.activation = static_cast<Activation>(act);
    mlp.layers.push_back(std::move(layer));
  }
  detail::validate(mlp);
  return mlp;
}

}  // namespace vaereg
