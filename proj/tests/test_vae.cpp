// tests/test_vae.cpp

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

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "test_util.hpp"
#include "vaereg/metrics.hpp"
#include "vaereg/vae.hpp"

namespace vaereg {
namespace {

using testing::random_matrix;
using testing::random_vector;
using testing::rel_err;

VaeModel small_model(std::uint64_t seed, CodeKind kind = CodeKind::kGaussian) {
  VaeArch arch;
  arch.encoder_hidden = {6, 5, 4};
  arch.decoder_hidden = {4, 5};
  arch.code_dim = 3;
  return init_vae(4, arch, kind, seed);
}

void zero_mlp(Mlp &m) {
  for (auto &l : m.layers) {
    std::fill(l.weight.data().begin(), l.weight.data().end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
}

// Independent evaluation of an MLP, one vector at a time.
Vector manual_mlp(const Mlp &m, Vector x) {
  for (const auto &l : m.layers) {
    Vector y(l.out_width());
    for (std::size_t i = 0; i < y.size(); ++i) {
      double s = l.bias[i];
      for (std::size_t k = 0; k < x.size(); ++k) s += l.weight(i, k) * x[k];
      switch (l.activation) {
        case Activation::kTanh: s = std::tanh(s); break;
        case Activation::kRelu: s = std::max(0.0, s); break;
        case Activation::kLinear: break;
      }
      y[i] = s;
    }
    x = std::move(y);
  }
  return x;
}

// ---------------------------------------------------------------------------

TEST(Encode, ZeroEncoderGivesStandardNormalPosterior) {
  VaeModel m = small_model(1);
  zero_mlp(m.encoder);
  const Encoding e = encode(m, Vector{1, 2, 3, 4});
  EXPECT_EQ(e.mu, Vector(3, 0.0));
  EXPECT_EQ(e.logvar, Vector(3, 0.0));
}

TEST(Encode, DeterministicAndSliceOfForward) {
  const VaeModel m = small_model(2);
  const Vector x{0.3, -1.0, 2.0, 0.1};
  const Encoding a = encode(m, x);
  const Encoding b = encode(m, x);
  EXPECT_EQ(a.mu, b.mu);
  EXPECT_EQ(a.logvar, b.logvar);
  const Matrix out = predict(m.encoder, Matrix(1, 4, x));
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(a.mu[j], out(0, j));
    EXPECT_EQ(a.logvar[j], out(0, 3 + j));
  }
}

TEST(Encode, ShapeMismatch) {
  EXPECT_THROW(encode(small_model(1), Vector{1, 2}), Error);
}

TEST(Reparameterize, Examples) {
  const Vector mu{0.5, -1.0};
  const Vector lv{0.3, -2.0};
  EXPECT_EQ(reparameterize(mu, lv, Vector{0, 0}), mu);
  EXPECT_EQ(reparameterize(Vector{0, 0}, Vector{0, 0}, Vector{1.5, -0.2}), (Vector{1.5, -0.2}));
  EXPECT_THROW(reparameterize(mu, Vector{0}, Vector{0, 0}), Error);
}

TEST(Reparameterize, MonteCarloMoments) {
  Rng rng(3);
  const double mu = 0.7, lv = -0.4;
  const int n = 100000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = reparameterize(Vector{mu}, Vector{lv}, Vector{rng.normal()})[0];
    s += z;
    s2 += z * z;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  const double sigma2 = std::exp(lv);
  EXPECT_LT(std::abs(mean - mu), 3.0 * std::sqrt(sigma2 / n));
  // SE of the sample variance of a Gaussian: sigma^2 sqrt(2 / (n - 1))
  EXPECT_LT(std::abs(var - sigma2), 3.0 * sigma2 * std::sqrt(2.0 / (n - 1)));
}

TEST(Decode, ZeroDecoderGivesZero) {
  VaeModel m = small_model(4);
  zero_mlp(m.decoder);
  EXPECT_EQ(decode(m, Vector{1, 2, 3}), Vector(4, 0.0));
}

TEST(Decode, DeterministicAndMatchesManualChain) {
  const VaeModel m = small_model(5);
  const Vector z{0.2, -0.7, 1.1};
  EXPECT_EQ(decode(m, z), decode(m, z));
  const Vector ref = manual_mlp(m.decoder, z);
  const Vector got = decode(m, z);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(got[j], ref[j], 1e-12);
}

TEST(Decode, ShapeMismatch) { EXPECT_THROW(decode(small_model(1), Vector{1}), Error); }

TEST(Decode, StandardizationIsUndoneOnOutput) {
  VaeModel m = small_model(6);
  m.input_offset = {1, 2, 3, 4};
  m.input_scale = {2, 0.5, 1, 3};
  const Vector z{0.1, 0.2, 0.3};
  const Vector raw = manual_mlp(m.decoder, z);
  const Vector got = decode(m, z);
  for (std::size_t j = 0; j < 4; ++j)
    EXPECT_NEAR(got[j], m.input_offset[j] + m.input_scale[j] * raw[j], 1e-12);
}

TEST(KlTerm, ClosedFormExamples) {
  EXPECT_EQ(kl_term(Vector{0, 0}, Vector{0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(kl_term(Vector{1}, Vector{0}), 0.5);
  EXPECT_THROW(kl_term(Vector{1}, Vector{0, 0}), Error);
}

TEST(KlTerm, NonNegativeAndZeroOnlyAtThePrior) {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const Vector mu = random_vector(rng, 3);
    const Vector lv = random_vector(rng, 3);
    EXPECT_GT(kl_term(mu, lv), 0.0);
  }
}

TEST(KlTerm, MatchesMonteCarlo) {
  // E_q[ln q(z) - ln p(z)] with z drawn from q.
  Rng rng(8);
  for (int trial = 0; trial < 3; ++trial) {
    const Vector mu = random_vector(rng, 2);
    const Vector lv = random_vector(rng, 2, 0.5);
    const int n = 100000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double v = 0.0;
      for (int j = 0; j < 2; ++j) {
        const double e = rng.normal();
        const double z = mu[j] + std::exp(0.5 * lv[j]) * e;
        v += -0.5 * lv[j] - 0.5 * e * e + 0.5 * z * z;  // the 2 pi terms cancel
      }
      s += v;
      s2 += v * v;
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    EXPECT_LT(std::abs(kl_term(mu, lv) - mean), 3.0 * se);
  }
}

TEST(ReconTerm, Examples) {
  EXPECT_NEAR(recon_term(Vector{1, 2}, Vector{1, 2}), -kLog2Pi, 1e-15);
  EXPECT_NEAR(recon_term(Vector{1, 0}, Vector{0, 0}), -0.5 - kLog2Pi, 1e-15);
  double prev = recon_term(Vector{0, 0}, Vector{0, 0});
  for (double r = 0.1; r < 5; r += 0.1) {
    const double v = recon_term(Vector{0, 0}, Vector{r, 0});
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(CohesiveTerm, Examples) {
  EXPECT_NEAR(cohesive_term(Vector{1, 2}, Vector{1, 2}), -kLog2Pi, 1e-15);
  // One-utterance speaker: the mean is the code itself.
  const Matrix codes(1, 2, std::vector<double>{0.3, -0.4});
  const std::vector<std::string> spk{"s"};
  const SpeakerMeanTable t = speaker_means(codes, spk);
  EXPECT_NEAR(cohesive_term(codes.row(0), t.at("s")), -kLog2Pi, 1e-15);
  // Two codes +a and -a: mean 0.
  const Vector a{0.5, 1.5};
  const Matrix two = Matrix::from_rows({{0.5, 1.5}, {-0.5, -1.5}});
  const std::vector<std::string> ss{"s", "s"};
  const SpeakerMeanTable t2 = speaker_means(two, ss);
  EXPECT_EQ(t2.at("s"), (Vector{0, 0}));
  const double expected = -0.5 * (0.25 + 2.25) - kLog2Pi;
  EXPECT_NEAR(cohesive_term(two.row(0), t2.at("s")), expected, 1e-15);
  EXPECT_NEAR(cohesive_term(two.row(1), t2.at("s")), expected, 1e-15);
}

// ---------------------------------------------------------------------------
// Batch objective.

struct Batch {
  Matrix x;
  std::vector<std::string> spk;
  Matrix eps;
};

Batch random_batch(Rng &rng, std::size_t n, std::size_t k = 1) {
  Batch b{random_matrix(rng, n, 4), {}, random_matrix(rng, n * k, 3)};
  for (std::size_t i = 0; i < n; ++i) b.spk.push_back(i % 2 ? "a" : "b");
  return b;
}

SpeakerMeanTable random_means(Rng &rng) {
  SpeakerMeanTable t;
  t.mean["a"] = random_vector(rng, 3);
  t.mean["b"] = random_vector(rng, 3);
  t.count["a"] = t.count["b"] = 1;
  return t;
}

TEST(BatchLoss, ComponentwiseOracle) {
  Rng rng(9);
  const VaeModel m = small_model(10);
  const Batch b = random_batch(rng, 5, 2);
  const SpeakerMeanTable means = random_means(rng);
  VaeTrainConfig cfg;
  cfg.kl_weight = 0.7;
  cfg.recon_weight = 1.3;
  cfg.cohesive_weight = 10;
  cfg.samples_per_input = 2;
  const BatchLoss loss = batch_loss(m, b.x, b.spk, means, cfg, b.eps);
  double kl = 0, rec = 0, coh = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    const Encoding e = encode(m, b.x.row(i));
    kl += kl_term(e.mu, e.logvar);
    coh += cohesive_term(e.mu, means.at(b.spk[i]));
    for (std::size_t s = 0; s < 2; ++s) {
      const Vector z = reparameterize(e.mu, e.logvar, b.eps.row(i * 2 + s));
      rec += 0.5 * recon_term(b.x.row(i), decode(m, z));
    }
  }
  EXPECT_NEAR(loss.parts.kl, kl, 1e-10);
  EXPECT_NEAR(loss.parts.recon, rec, 1e-10);
  EXPECT_NEAR(loss.parts.cohesive, coh, 1e-10);
  EXPECT_NEAR(loss.total, 0.7 * kl - 1.3 * rec - 10 * coh, 1e-10);
}

TEST(BatchLoss, UnitWeightsGiveNegatedLowerBound) {
  Rng rng(11);
  const VaeModel m = small_model(12);
  const Batch b = random_batch(rng, 4);
  VaeTrainConfig cfg;
  const BatchLoss loss = batch_loss(m, b.x, b.spk, {}, cfg, b.eps);
  EXPECT_NEAR(loss.total, loss.parts.kl - loss.parts.recon, 1e-12);
}

TEST(BatchLoss, ZeroKlAndCohesiveIsPureReconstruction) {
  Rng rng(13);
  const VaeModel m = small_model(14);
  const Batch b = random_batch(rng, 4);
  VaeTrainConfig cfg;
  cfg.kl_weight = 0;
  cfg.recon_weight = 2;
  const BatchLoss loss = batch_loss(m, b.x, b.spk, {}, cfg, b.eps);
  EXPECT_NEAR(loss.total, -2 * loss.parts.recon, 1e-12);
}

TEST(BatchLoss, UnknownSpeaker) {
  Rng rng(15);
  const VaeModel m = small_model(16);
  Batch b = random_batch(rng, 3);
  b.spk[1] = "nobody";
  VaeTrainConfig cfg;
  cfg.cohesive_weight = 10;
  try {
    batch_loss(m, b.x, b.spk, random_means(rng), cfg, b.eps);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::kUnknownSpeaker);
  }
}

// Central differences over every parameter of both networks.
void check_loss_gradients(VaeModel m, const Batch &b, const SpeakerMeanTable &means,
                          const VaeTrainConfig &cfg) {
  const auto analytic = batch_loss_and_gradients(m, b.x, b.spk, means, cfg, b.eps).grads;
  const double h = 1e-5;
  auto loss = [&] { return batch_loss(m, b.x, b.spk, means, cfg, b.eps).total; };
  auto run = [&](Mlp &net, const GradientSet &g, const char *name) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      auto probe = [&](double &p, double a, const std::string &what) {
        const double keep = p;
        p = keep + h;
        const double up = loss();
        p = keep - h;
        const double down = loss();
        p = keep;
        EXPECT_LT(rel_err(a, (up - down) / (2 * h)), 1e-4) << name << " " << what;
      };
      for (std::size_t k = 0; k < net.layers[l].weight.data().size(); ++k)
        probe(net.layers[l].weight.data()[k], g.layers[l].weight.data()[k],
              "layer " + std::to_string(l) + " w" + std::to_string(k));
      for (std::size_t k = 0; k < net.layers[l].bias.size(); ++k)
        probe(net.layers[l].bias[k], g.layers[l].bias[k],
              "layer " + std::to_string(l) + " b" + std::to_string(k));
    }
  };
  run(m.encoder, analytic.encoder, "encoder");
  run(m.decoder, analytic.decoder, "decoder");
}

TEST(BatchLoss, GradientsMatchFiniteDifferencesWithCohesiveTerm) {
  Rng rng(17);
  const Batch b = random_batch(rng, 6);
  VaeTrainConfig cfg;
  cfg.cohesive_weight = 10;
  check_loss_gradients(small_model(18), b, random_means(rng), cfg);
}

TEST(BatchLoss, GradientsMatchWithStandardizedInputsAndSeveralSamples) {
  Rng rng(19);
  const Batch b = random_batch(rng, 4, 3);
  VaeModel m = small_model(20);
  m.input_offset = {0.5, -0.5, 1.0, 0.0};
  m.input_scale = {2.0, 0.5, 1.5, 3.0};
  VaeTrainConfig cfg;
  cfg.kl_weight = 0.5;
  cfg.recon_weight = 0.1;
  cfg.cohesive_weight = 10;
  cfg.samples_per_input = 3;
  check_loss_gradients(m, b, random_means(rng), cfg);
}

TEST(BatchLoss, DeterministicCodeGradients) {
  Rng rng(21);
  Batch b = random_batch(rng, 5);
  VaeTrainConfig cfg;
  cfg.kl_weight = 0;
  check_loss_gradients(small_model(22, CodeKind::kDeterministic), b, {}, cfg);
}

// ---------------------------------------------------------------------------
// Training.

EmbeddingSet gaussian_1d(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  EmbeddingSet s(1);
  for (std::size_t i = 0; i < n; ++i)
    s.add("u" + std::to_string(i), "s" + std::to_string(i / 4), Vector{rng.normal()});
  return s;
}

EmbeddingSet clustered(std::size_t speakers, std::size_t per, std::uint64_t seed) {
  SynthConfig sc;
  sc.n_speakers = speakers;
  sc.utts_per_speaker = per;
  sc.obs_dim = 6;
  sc.latent_dim = 2;
  sc.seed = seed;
  return generate_synthetic(sc).data;
}

TEST(TrainVae, LinearNetsOnGaussianDataSettle) {
  const EmbeddingSet data = gaussian_1d(400, 1);
  VaeTrainConfig cfg;
  cfg.epochs = 60;
  cfg.batch_size = 32;
  cfg.learning_rate = 1e-2;
  const TrainResult r = train_vae(data, VaeArch::uniform(4, 1, Activation::kLinear), cfg);
  ASSERT_EQ(r.history.size(), 60u);
  for (std::size_t e = 31; e < 60; ++e) {
    const double prev = r.history[e - 1].total;
    EXPECT_LE(r.history[e].total, prev + 0.05 * std::abs(prev)) << "epoch " << e;
  }
}

TEST(TrainVae, SameSeedIsBitIdentical) {
  const EmbeddingSet data = clustered(10, 4, 2);
  VaeTrainConfig cfg;
  cfg.epochs = 3;
  cfg.cohesive_weight = 10;
  cfg.seed = 4;
  const VaeArch arch = VaeArch::uniform(8, 2);
  const TrainResult a = train_vae(data, arch, cfg);
  const TrainResult b = train_vae(data, arch, cfg);
  EXPECT_EQ(a.model, b.model);
  cfg.seed = 5;
  EXPECT_NE(train_vae(data, arch, cfg).model, a.model);
}

TEST(TrainVae, CohesiveFineTuningShrinksWithinSpeakerScatter) {
  const EmbeddingSet data = clustered(30, 6, 3);
  VaeTrainConfig cfg;
  cfg.epochs = 30;
  cfg.center_inputs = cfg.scale_inputs = true;
  const TrainResult base = train_vae(data, VaeArch::uniform(16, 3), cfg);
  VaeTrainConfig cc = cfg;
  cc.cohesive_weight = 10;
  cc.epochs = 20;
  const TrainResult tuned = train_vae_from(base.model, data, cc);
  EXPECT_LT(within_speaker_scatter(extract_codes(tuned.model, data)),
            within_speaker_scatter(extract_codes(base.model, data)));
}

TEST(TrainVae, Errors) {
  VaeTrainConfig cfg;
  try {
    train_vae(EmbeddingSet(3), VaeArch::desk(), cfg);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::kEmptyDataset);
  }
  cfg.kl_weight = cfg.recon_weight = 0;
  EXPECT_THROW(train_vae(gaussian_1d(8, 1), VaeArch::desk(), cfg), Error);
  cfg = {};
  cfg.batch_size = 0;
  EXPECT_THROW(train_vae(gaussian_1d(8, 1), VaeArch::desk(), cfg), Error);
}

TEST(TrainVae, NonFiniteLossNamesEpochAndBatch) {
  EmbeddingSet data(1);
  data.add("u0", "s", Vector{1e200});
  data.add("u1", "s", Vector{-1e200});
  VaeTrainConfig cfg;
  cfg.epochs = 2;
  try {
    train_vae(data, VaeArch::uniform(4, 1), cfg);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::kNonFiniteLoss);
    EXPECT_NE(std::string(e.what()).find("epoch 0, batch 0"), std::string::npos);
  }
}

TEST(TrainAutoencoder, DeterministicCodeLayerAndFallingReconstruction) {
  const EmbeddingSet data = clustered(20, 5, 4);
  VaeTrainConfig cfg;
  cfg.epochs = 40;
  cfg.learning_rate = 3e-3;
  const VaeArch arch = VaeArch::uniform(16, 3);
  const TrainResult r = train_autoencoder(data, arch, cfg);
  EXPECT_EQ(r.model.kind, CodeKind::kDeterministic);
  EXPECT_EQ(r.model.encoder.output_width(), 3u);
  EXPECT_TRUE(encode(r.model, data[0].vec).logvar.empty());
  for (const auto &e : r.history) EXPECT_EQ(e.kl, 0.0);
  // Reconstruction log-likelihood trends upward: compare epoch-window means.
  auto window = [&](std::size_t a, std::size_t b) {
    double s = 0;
    for (std::size_t e = a; e < b; ++e) s += r.history[e].recon;
    return s / static_cast<double>(b - a);
  };
  EXPECT_GT(window(30, 40), window(0, 10));
  EXPECT_GT(window(30, 40), window(20, 30) - 0.05 * std::abs(window(20, 30)));
  EXPECT_EQ(train_autoencoder(data, arch, cfg).model, r.model);
}

TEST(ExtractCodes, IdsOrderAndDefinition) {
  const EmbeddingSet data = clustered(5, 3, 5);
  const VaeModel m = init_vae(6, VaeArch::uniform(8, 2), CodeKind::kGaussian, 1);
  const EmbeddingSet codes = extract_codes(m, data);
  ASSERT_EQ(codes.size(), data.size());
  EXPECT_EQ(codes.dim(), 2u);
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(codes[i].utt, data[i].utt);
    EXPECT_EQ(codes[i].spk, data[i].spk);
    EXPECT_EQ(codes[i].vec, encode(m, data[i].vec).mu);
  }
}

TEST(ExtractCodes, InvariantToBatching) {
  const EmbeddingSet data = clustered(8, 3, 6);
  const VaeModel m = init_vae(6, VaeArch::uniform(8, 2), CodeKind::kGaussian, 2);
  const EmbeddingSet all = extract_codes(m, data);
  auto [first, second] = split_by_speaker(data, 3);
  const EmbeddingSet a = extract_codes(m, first);
  const EmbeddingSet b = extract_codes(m, second);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].vec, all[i].vec);
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_EQ(b[i].vec, all[a.size() + i].vec);
}

TEST(ExtractCodes, ShapeMismatch) {
  const VaeModel m = init_vae(3, VaeArch::uniform(4, 2), CodeKind::kGaussian, 1);
  EXPECT_THROW(extract_codes(m, clustered(3, 3, 1)), Error);
}

TEST(ExtractCodes, WarpedBenchmarkKurtosisAtLeastHalved) {
  SynthConfig sc;  // cubic warp, speaker-dominated spread
  sc.within_scale = 0.2;
  sc.loading_decay = 0.0;
  const EmbeddingSet data = generate_synthetic(sc).data;
  VaeTrainConfig cfg;
  cfg.epochs = 100;
  cfg.recon_weight = 0.1;
  cfg.center_inputs = cfg.scale_inputs = true;
  const TrainResult r = train_vae(data, VaeArch::desk(), cfg);
  const double raw = moments_report(data, MomentLevel::kUtterance).mean_abs_kurt;
  const double code =
      moments_report(extract_codes(r.model, data), MomentLevel::kUtterance).mean_abs_kurt;
  EXPECT_LE(code, 0.5 * raw) << "raw " << raw << " codes " << code;
}

TEST(Serialization, VaeRoundTripAndHistoryCsv) {
  VaeModel m = small_model(30);
  m.input_offset = {1, 2, 3, 4};
  m.input_scale = {1, 1, 2, 2};
  std::stringstream ss;
  write_vae(ss, m);
  EXPECT_EQ(ss.str().substr(0, 4), "VAE1");
  EXPECT_EQ(read_vae(ss), m);

  std::stringstream bad("VAE2");
  EXPECT_THROW(read_vae(bad), Error);

  std::ostringstream h;
  write_history_csv(h, {EpochStats{0, 1.5, 0.5, -1.0, 0.0}});
  EXPECT_EQ(h.str(), "epoch,total,kl,recon,cohesive\n0,1.5,0.5,-1,0\n");
}

}  // namespace
}  // namespace vaereg
