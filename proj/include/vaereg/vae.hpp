// vaereg/vae.hpp

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

/**
   Variational auto-encoder regularization of embedding vectors.

   The encoder g(x) maps an input vector to the mean and log-variance of a
   diagonal Gaussian q(z|x); the decoder f(z) gives the mean of a
   unit-covariance Gaussian p(x|z). Training minimizes, per sample,

       beta * KL(q(z|x) || N(0, I))
     - alpha * E_q[ln N(x; f(z), I)]
     - lambda * ln N(mu(x); s(x), I)

   where s(x) is the mean of mu over all training utterances of the speaker of
   x. lambda = 0 gives a plain VAE; lambda > 0 the cohesive VAE. The
   expectation is estimated with reparameterized samples z = mu + sigma * eps.

   The same container also holds a deterministic auto-encoder (CodeKind
   kDeterministic) whose encoder emits the code directly.
*/

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vaereg/binary_io.hpp"
#include "vaereg/data.hpp"
#include "vaereg/error.hpp"
#include "vaereg/linalg.hpp"
#include "vaereg/nn.hpp"
#include "vaereg/rng.hpp"

namespace vaereg {

enum class CodeKind : std::uint8_t { kGaussian = 0, kDeterministic = 1 };

struct VaeModel {
  Mlp encoder;  // input_dim -> 2 * code_dim (mu, logvar), or code_dim
  Mlp decoder;  // code_dim -> input_dim
  std::size_t code_dim = 0;
  std::size_t input_dim = 0;
  CodeKind kind = CodeKind::kGaussian;
  // Encoder inputs are (x - input_offset) / input_scale and decoder outputs are
  // mapped back the same way. Either vector may be empty (0 and 1).
  Vector input_offset;
  Vector input_scale;

  bool operator==(const VaeModel &) const = default;
};

/// Layer widths. The encoder has encoder_hidden.size() hidden layers plus the
/// code head; the decoder decoder_hidden.size() hidden layers plus the output.
struct VaeArch {
  std::vector<std::size_t> encoder_hidden{64, 64, 64};
  std::vector<std::size_t> decoder_hidden{64, 64};
  std::size_t code_dim = 8;
  Activation hidden = Activation::kTanh;

  static VaeArch desk() { return {}; }
  // Widths for real x-vectors (512-dim input, 200-dim codes).
  static VaeArch full_scale() {
    return {{1800, 1800, 1800}, {1800, 1800}, 200, Activation::kTanh};
  }
  static VaeArch uniform(std::size_t hidden_width, std::size_t code_dim,
                         Activation act = Activation::kTanh) {
    return {{hidden_width, hidden_width, hidden_width},
            {hidden_width, hidden_width},
            code_dim,
            act};
  }
};

struct VaeTrainConfig {
  double kl_weight = 1.0;        // beta
  double recon_weight = 1.0;     // alpha
  double cohesive_weight = 0.0;  // lambda
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  std::size_t samples_per_input = 1;
  double learning_rate = 1e-3;
  bool center_inputs = false;
  bool scale_inputs = false;
};

inline void validate(const VaeTrainConfig &cfg) {
  if (cfg.kl_weight < 0 || cfg.recon_weight < 0 || cfg.cohesive_weight < 0)
    fail(Errc::kInvalidConfig, "loss weights must be >= 0");
  if (cfg.kl_weight == 0 && cfg.recon_weight == 0)
    fail(Errc::kInvalidConfig, "kl_weight and recon_weight are both zero");
  if (cfg.batch_size < 1) fail(Errc::kInvalidConfig, "batch_size must be >= 1");
  if (cfg.samples_per_input < 1)
    fail(Errc::kInvalidConfig, "samples_per_input must be >= 1");
  if (!(cfg.learning_rate > 0))
    fail(Errc::kInvalidConfig, "learning_rate must be > 0");
}

inline VaeModel init_vae(std::size_t input_dim, const VaeArch &arch,
                         CodeKind kind, std::uint64_t seed) {
  if (input_dim == 0 || arch.code_dim == 0)
    fail(Errc::kInvalidArchitecture, "zero input or code width");
  std::vector<std::size_t> enc{input_dim};
  enc.insert(enc.end(), arch.encoder_hidden.begin(), arch.encoder_hidden.end());
  enc.push_back(kind == CodeKind::kGaussian ? 2 * arch.code_dim : arch.code_dim);
  std::vector<std::size_t> dec{arch.code_dim};
  dec.insert(dec.end(), arch.decoder_hidden.begin(), arch.decoder_hidden.end());
  dec.push_back(input_dim);

  VaeModel m;
  m.encoder = init_mlp(enc, arch.hidden, Activation::kLinear, derive_seed(seed, 0));
  m.decoder = init_mlp(dec, arch.hidden, Activation::kLinear, derive_seed(seed, 1));
  m.code_dim = arch.code_dim;
  m.input_dim = input_dim;
  m.kind = kind;
  return m;
}

inline void check_model(const VaeModel &m) {
  const std::size_t head =
      m.kind == CodeKind::kGaussian ? 2 * m.code_dim : m.code_dim;
  if (m.encoder.layers.empty() || m.decoder.layers.empty())
    fail(Errc::kInvalidArchitecture, "empty encoder or decoder");
  if (m.encoder.input_width() != m.input_dim || m.encoder.output_width() != head)
    fail(Errc::kInvalidArchitecture, "encoder widths do not match the model");
  if (m.decoder.input_width() != m.code_dim ||
      m.decoder.output_width() != m.input_dim)
    fail(Errc::kInvalidArchitecture, "decoder widths do not match the model");
  if (!m.input_offset.empty() && m.input_offset.size() != m.input_dim)
    fail(Errc::kInvalidArchitecture, "input offset width");
  if (!m.input_scale.empty() && m.input_scale.size() != m.input_dim)
    fail(Errc::kInvalidArchitecture, "input scale width");
  for (double v : m.input_scale)
    if (!(v > 0.0) || !std::isfinite(v))
      fail(Errc::kInvalidArchitecture, "input scale must be positive");
}

// ---------------------------------------------------------------------------
// Per-vector operations.

struct Encoding {
  Vector mu;
  Vector logvar;  // empty for a deterministic code
};

namespace detail {

inline Matrix centered_rows(const VaeModel &m, const Matrix &x) {
  if (x.cols() != m.input_dim)
    fail(Errc::kShapeMismatch, "input has dim " + std::to_string(x.cols()) +
                                   ", model expects " +
                                   std::to_string(m.input_dim));
  if (m.input_offset.empty() && m.input_scale.empty()) return x;
  Matrix c = x;
  for (std::size_t i = 0; i < c.rows(); ++i) {
    auto r = c.row(i);
    if (!m.input_offset.empty())
      for (std::size_t j = 0; j < r.size(); ++j) r[j] -= m.input_offset[j];
    if (!m.input_scale.empty())
      for (std::size_t j = 0; j < r.size(); ++j) r[j] /= m.input_scale[j];
  }
  return c;
}

inline Matrix single_row(std::span<const double> v) {
  return Matrix(1, v.size(), std::vector<double>(v.begin(), v.end()));
}

}  // namespace detail

inline Encoding encode(const VaeModel &model, std::span<const double> x) {
  check_model(model);
  const Matrix out =
      predict(model.encoder, detail::centered_rows(model, detail::single_row(x)));
  auto row = out.row(0);
  Encoding e;
  e.mu.assign(row.begin(), row.begin() + model.code_dim);
  if (model.kind == CodeKind::kGaussian)
    e.logvar.assign(row.begin() + model.code_dim, row.end());
  return e;
}

/// z = mu + exp(logvar / 2) * eps
inline Vector reparameterize(std::span<const double> mu,
                             std::span<const double> logvar,
                             std::span<const double> eps) {
  if (mu.size() != logvar.size() || mu.size() != eps.size())
    fail(Errc::kShapeMismatch, "reparameterize: dims differ");
  Vector z(mu.size());
  for (std::size_t j = 0; j < z.size(); ++j)
    z[j] = mu[j] + std::exp(0.5 * logvar[j]) * eps[j];
  return z;
}

inline Vector decode(const VaeModel &model, std::span<const double> z) {
  check_model(model);
  if (z.size() != model.code_dim)
    fail(Errc::kShapeMismatch, "decode: code has dim " +
                                   std::to_string(z.size()) + ", expected " +
                                   std::to_string(model.code_dim));
  Vector xhat = predict(model.decoder, detail::single_row(z)).row_vector(0);
  if (!model.input_scale.empty())
    for (std::size_t j = 0; j < xhat.size(); ++j) xhat[j] *= model.input_scale[j];
  if (!model.input_offset.empty())
    for (std::size_t j = 0; j < xhat.size(); ++j) xhat[j] += model.input_offset[j];
  return xhat;
}

/// KL(N(mu, diag(exp(logvar))) || N(0, I)).
inline double kl_term(std::span<const double> mu, std::span<const double> logvar) {
  if (mu.size() != logvar.size()) fail(Errc::kShapeMismatch, "kl_term: dims differ");
  double s = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j)
    s += mu[j] * mu[j] + std::exp(logvar[j]) - 1.0 - logvar[j];
  return 0.5 * s;
}

/// ln N(x; xhat, I)
inline double recon_term(std::span<const double> x, std::span<const double> xhat) {
  if (x.size() != xhat.size()) fail(Errc::kShapeMismatch, "recon_term: dims differ");
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += (x[j] - xhat[j]) * (x[j] - xhat[j]);
  return -0.5 * s - 0.5 * static_cast<double>(x.size()) * kLog2Pi;
}

/// ln N(mu; speaker_mean, I)
inline double cohesive_term(std::span<const double> mu,
                            std::span<const double> speaker_mean) {
  if (mu.size() != speaker_mean.size())
    fail(Errc::kShapeMismatch, "cohesive_term: dims differ");
  return recon_term(mu, speaker_mean);
}

// ---------------------------------------------------------------------------
// Speaker means of the current codes.

struct SpeakerMeanTable {
  std::unordered_map<std::string, Vector> mean;
  std::unordered_map<std::string, std::size_t> count;

  const Vector &at(const std::string &spk) const {
    auto it = mean.find(spk);
    if (it == mean.end()) fail(Errc::kUnknownSpeaker, "no mean for speaker '" + spk + "'");
    return it->second;
  }
};

/// Encoder means for every row of `x` (n x input_dim).
inline Matrix encode_means(const VaeModel &model, const Matrix &x) {
  check_model(model);
  const Matrix out = predict(model.encoder, detail::centered_rows(model, x));
  if (model.kind == CodeKind::kDeterministic) return out;
  Matrix mu(out.rows(), model.code_dim);
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < model.code_dim; ++j) mu(i, j) = out(i, j);
  return mu;
}

inline SpeakerMeanTable speaker_means(const Matrix &codes,
                                      std::span<const std::string> speakers) {
  if (codes.rows() != speakers.size())
    fail(Errc::kShapeMismatch, "speaker_means: one speaker id per row");
  SpeakerMeanTable t;
  for (std::size_t i = 0; i < codes.rows(); ++i) {
    auto &m = t.mean[speakers[i]];
    if (m.empty()) m.assign(codes.cols(), 0.0);
    auto row = codes.row(i);
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += row[j];
    t.count[speakers[i]] += 1;
  }
  for (auto &[spk, m] : t.mean) {
    const double n = static_cast<double>(t.count[spk]);
    for (auto &v : m) v /= n;
  }
  return t;
}

inline SpeakerMeanTable compute_speaker_means(const VaeModel &model,
                                              const EmbeddingSet &data) {
  std::vector<std::string> spk;
  spk.reserve(data.size());
  for (const auto &r : data.records()) spk.push_back(r.spk);
  return speaker_means(encode_means(model, data.matrix()), spk);
}

// ---------------------------------------------------------------------------
// Batch objective and its gradient.

struct LossComponents {
  double kl = 0.0;
  double recon = 0.0;
  double cohesive = 0.0;
};

struct BatchLoss {
  double total = 0.0;
  LossComponents parts;  // unweighted sums over the batch
};

struct VaeGradients {
  GradientSet encoder;
  GradientSet decoder;
};

struct BatchLossWithGradients {
  BatchLoss loss;
  VaeGradients grads;
};

/// Loss (minimization form) and exact gradients on one batch. `x` holds one
/// input per row; `eps` holds samples_per_input standard-normal rows per input
/// (row i * samples_per_input + s) and is ignored for deterministic codes.
/// Speaker ids are only consulted when cohesive_weight > 0.
inline BatchLossWithGradients batch_loss_and_gradients(
    const VaeModel &model, const Matrix &x, std::span<const std::string> speakers,
    const SpeakerMeanTable &means, const VaeTrainConfig &cfg, const Matrix &eps) {
  check_model(model);
  const std::size_t n = x.rows();
  if (n == 0) fail(Errc::kEmptyDataset, "empty batch");
  const std::size_t d = model.code_dim;
  const std::size_t D = model.input_dim;
  const bool gaussian = model.kind == CodeKind::kGaussian;
  const std::size_t k = gaussian ? cfg.samples_per_input : 1;
  const double alpha = cfg.recon_weight;
  const double beta = gaussian ? cfg.kl_weight : 0.0;
  const double lambda = cfg.cohesive_weight;
  if (gaussian && (eps.rows() != n * k || eps.cols() != d))
    fail(Errc::kShapeMismatch, "eps must be (batch * samples_per_input) x code_dim");
  if (lambda > 0 && speakers.size() != n)
    fail(Errc::kShapeMismatch, "one speaker id per batch row is required");

  const Matrix xc = detail::centered_rows(model, x);
  const ForwardRecord enc = forward(model.encoder, xc);
  const Matrix &head = enc.output();

  // Latent samples.
  Matrix z(n * k, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t s = 0; s < k; ++s)
      for (std::size_t j = 0; j < d; ++j)
        z(i * k + s, j) =
            gaussian ? head(i, j) + std::exp(0.5 * head(i, d + j)) * eps(i * k + s, j)
                     : head(i, j);
  const ForwardRecord dec = forward(model.decoder, z);
  const Matrix &xhat = dec.output();

  BatchLoss out;
  Matrix dxhat(n * k, D);
  const double inv_k = 1.0 / static_cast<double>(k);
  // The likelihood lives in input units: residual = scale * (xhat - xc).
  Vector sc2(D, 1.0);
  if (!model.input_scale.empty())
    for (std::size_t j = 0; j < D; ++j) sc2[j] = model.input_scale[j] * model.input_scale[j];
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = xc.row(i);
    for (std::size_t s = 0; s < k; ++s) {
      auto xh = xhat.row(i * k + s);
      double sq = 0.0;
      auto g = dxhat.row(i * k + s);
      for (std::size_t j = 0; j < D; ++j) {
        const double r = xh[j] - xi[j];
        sq += sc2[j] * r * r;
        g[j] = alpha * inv_k * sc2[j] * r;
      }
      out.parts.recon += inv_k * (-0.5 * sq - 0.5 * static_cast<double>(D) * kLog2Pi);
    }
  }
  GradientSet dec_grads = backward(model.decoder, dec, dxhat);
  const Matrix &dz = dec_grads.input;

  Matrix dhead(n, head.cols());
  for (std::size_t i = 0; i < n; ++i) {
    auto h = head.row(i);
    std::span<const double> mu = h.subspan(0, d);
    if (gaussian) {
      std::span<const double> lv = h.subspan(d, d);
      out.parts.kl += kl_term(mu, lv);
      for (std::size_t j = 0; j < d; ++j) {
        const double sd = std::exp(0.5 * lv[j]);
        double gmu = beta * mu[j];
        double glv = beta * 0.5 * (std::exp(lv[j]) - 1.0);
        for (std::size_t s = 0; s < k; ++s) {
          gmu += dz(i * k + s, j);
          glv += dz(i * k + s, j) * eps(i * k + s, j) * 0.5 * sd;
        }
        dhead(i, j) = gmu;
        dhead(i, d + j) = glv;
      }
    } else {
      for (std::size_t j = 0; j < d; ++j) dhead(i, j) = dz(i, j);
    }
    if (lambda > 0) {
      const Vector &sm = means.at(speakers[i]);
      if (sm.size() != d) fail(Errc::kShapeMismatch, "speaker mean width");
      out.parts.cohesive += cohesive_term(mu, sm);
      for (std::size_t j = 0; j < d; ++j) dhead(i, j) += lambda * (mu[j] - sm[j]);
    }
  }
  GradientSet enc_grads = backward(model.encoder, enc, dhead);

  out.total = beta * out.parts.kl - alpha * out.parts.recon -
              lambda * out.parts.cohesive;
  return {out, {std::move(enc_grads), std::move(dec_grads)}};
}

inline BatchLoss batch_loss(const VaeModel &model, const Matrix &x,
                            std::span<const std::string> speakers,
                            const SpeakerMeanTable &means,
                            const VaeTrainConfig &cfg, const Matrix &eps) {
  return batch_loss_and_gradients(model, x, speakers, means, cfg, eps).loss;
}

// ---------------------------------------------------------------------------
// Training.

struct EpochStats {
  std::size_t epoch = 0;
  double total = 0.0;
  double kl = 0.0;
  double recon = 0.0;
  double cohesive = 0.0;
};

struct TrainResult {
  VaeModel model;
  std::vector<EpochStats> history;
};

inline Vector column_means(const Matrix &x) {
  Vector m(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += r[j];
  }
  for (auto &v : m) v /= static_cast<double>(x.rows());
  return m;
}

/// Population standard deviation per column; constant columns get 1.
inline Vector column_stddevs(const Matrix &x) {
  const Vector mu = column_means(x);
  Vector sd(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    for (std::size_t j = 0; j < sd.size(); ++j) sd[j] += (r[j] - mu[j]) * (r[j] - mu[j]);
  }
  for (auto &v : sd) {
    v = std::sqrt(v / static_cast<double>(x.rows()));
    if (!(v > 0.0)) v = 1.0;
  }
  return sd;
}

/// Continues training `model` on `data`. Every epoch starts by recomputing the
/// speaker means (when cohesive_weight > 0), then visits the data once in a
/// seeded random order.
inline TrainResult train_vae_from(VaeModel model, const EmbeddingSet &data,
                                  const VaeTrainConfig &cfg) {
  validate(cfg);
  check_model(model);
  if (data.empty()) fail(Errc::kEmptyDataset, "training set is empty");
  if (data.dim() != model.input_dim)
    fail(Errc::kShapeMismatch, "data dim " + std::to_string(data.dim()) +
                                   " does not match model input " +
                                   std::to_string(model.input_dim));

  const Matrix all = data.matrix();
  std::vector<std::string> spk;
  for (const auto &r : data.records()) spk.push_back(r.spk);
  if (cfg.center_inputs && model.input_offset.empty())
    model.input_offset = column_means(all);
  if (cfg.scale_inputs && model.input_scale.empty())
    model.input_scale = column_stddevs(all);

  AdamState enc_opt = make_adam(model.encoder, cfg.learning_rate);
  AdamState dec_opt = make_adam(model.decoder, cfg.learning_rate);
  Rng rng(derive_seed(cfg.seed, 2));

  const std::size_t N = data.size();
  const std::size_t d = model.code_dim;
  const bool gaussian = model.kind == CodeKind::kGaussian;
  const std::size_t k = gaussian ? cfg.samples_per_input : 1;
  const bool cohesive = cfg.cohesive_weight > 0;

  std::vector<std::size_t> order(N);
  for (std::size_t i = 0; i < N; ++i) order[i] = i;

  TrainResult result;
  SpeakerMeanTable means;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cohesive) means = speaker_means(encode_means(model, all), spk);
    for (std::size_t i = N; i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);

    EpochStats stats;
    stats.epoch = epoch;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < N; start += cfg.batch_size, ++batch_index) {
      const std::size_t stop = std::min(N, start + cfg.batch_size);
      const std::size_t n = stop - start;
      Matrix xb(n, data.dim());
      std::vector<std::string> sb;
      if (cohesive) sb.reserve(n);
      for (std::size_t b = 0; b < n; ++b) {
        xb.set_row(b, all.row(order[start + b]));
        if (cohesive) sb.push_back(spk[order[start + b]]);
      }
      Matrix eps;
      if (gaussian) {
        eps = Matrix(n * k, d);
        for (auto &e : eps.data()) e = rng.normal();
      }
      auto step = batch_loss_and_gradients(model, xb, sb, means, cfg, eps);
      if (!std::isfinite(step.loss.total))
        fail(Errc::kNonFiniteLoss, "non-finite loss at epoch " + std::to_string(epoch) +
                                       ", batch " + std::to_string(batch_index));
      adam_step(model.encoder, step.grads.encoder, enc_opt);
      adam_step(model.decoder, step.grads.decoder, dec_opt);
      stats.total += step.loss.total;
      stats.kl += step.loss.parts.kl;
      stats.recon += step.loss.parts.recon;
      stats.cohesive += step.loss.parts.cohesive;
    }
    const double inv = 1.0 / static_cast<double>(N);
    stats.total *= inv;
    stats.kl *= inv;
    stats.recon *= inv;
    stats.cohesive *= inv;
    result.history.push_back(stats);
  }
  result.model = std::move(model);
  return result;
}

inline TrainResult train_vae(const EmbeddingSet &data, const VaeArch &arch,
                             const VaeTrainConfig &cfg) {
  validate(cfg);
  if (data.empty()) fail(Errc::kEmptyDataset, "training set is empty");
  return train_vae_from(init_vae(data.dim(), arch, CodeKind::kGaussian, cfg.seed),
                        data, cfg);
}

/// Deterministic auto-encoder: reconstruction only, code layer emits the code.
inline TrainResult train_autoencoder(const EmbeddingSet &data, const VaeArch &arch,
                                     VaeTrainConfig cfg) {
  cfg.kl_weight = 0.0;
  cfg.cohesive_weight = 0.0;
  if (cfg.recon_weight == 0.0)
    fail(Errc::kInvalidConfig, "auto-encoder needs recon_weight > 0");
  validate(cfg);
  if (data.empty()) fail(Errc::kEmptyDataset, "training set is empty");
  return train_vae_from(
      init_vae(data.dim(), arch, CodeKind::kDeterministic, cfg.seed), data, cfg);
}

/// One code (the encoder mean) per input, same ids and order.
inline EmbeddingSet extract_codes(const VaeModel &model, const EmbeddingSet &data) {
  if (data.dim() != model.input_dim)
    fail(Errc::kShapeMismatch, "extract: data dim " + std::to_string(data.dim()) +
                                   " does not match model input " +
                                   std::to_string(model.input_dim));
  if (data.empty()) return EmbeddingSet(model.code_dim);
  return data.with_vectors(encode_means(model, data.matrix()));
}

// ---------------------------------------------------------------------------
// "VAE1" container: u32 code_dim, u32 input_dim, u8 kind, u32 offset length
// and offset values, u32 scale length and scale values, then the encoder and
// decoder MLP1 blobs.

inline void write_vae(std::ostream &os, const VaeModel &m) {
  check_model(m);
  io::write_magic(os, "VAE1");
  io::write_u32(os, static_cast<std::uint32_t>(m.code_dim));
  io::write_u32(os, static_cast<std::uint32_t>(m.input_dim));
  io::write_u8(os, static_cast<std::uint8_t>(m.kind));
  io::write_u32(os, static_cast<std::uint32_t>(m.input_offset.size()));
  for (double v : m.input_offset) io::write_f64(os, v);
  io::write_u32(os, static_cast<std::uint32_t>(m.input_scale.size()));
  for (double v : m.input_scale) io::write_f64(os, v);
  write_mlp(os, m.encoder);
  write_mlp(os, m.decoder);
}

inline VaeModel read_vae(std::istream &is) {
  io::expect_magic(is, "VAE1");
  VaeModel m;
  m.code_dim = io::read_u32(is);
  m.input_dim = io::read_u32(is);
  const std::uint8_t kind = io::read_u8(is);
  if (kind > 1) fail(Errc::kParseError, "VAE1 code kind");
  m.kind = static_cast<CodeKind>(kind);
  m.input_offset.resize(io::read_u32(is));
  for (auto &v : m.input_offset) v = io::read_f64(is);
  m.input_scale.resize(io::read_u32(is));
  for (auto &v : m.input_scale) v = io::read_f64(is);
  m.encoder = read_mlp(is);
  m.decoder = read_mlp(is);
  try {
    check_model(m);
  } catch (const Error &e) {
    fail(Errc::kParseError, std::string("VAE1: ") + e.what());
  }
  return m;
}

inline void save_vae(const std::string &path, const VaeModel &m) {
  auto os = io::open_out(path, true);
  write_vae(os, m);
}

inline VaeModel load_vae(const std::string &path) {
  auto is = io::open_in(path, true);
  return read_vae(is);
}

inline void write_history_csv(std::ostream &os, const std::vector<EpochStats> &h) {
  os << "epoch,total,kl,recon,cohesive\n";
  for (const auto &e : h)
    os << e.epoch << ',' << format_double(e.total) << ',' << format_double(e.kl)
       << ',' << format_double(e.recon) << ',' << format_double(e.cohesive) << '\n';
}

}  // namespace vaereg
