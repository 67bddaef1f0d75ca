// vaereg/pipeline.hpp

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

#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "vaereg/backend.hpp"
#include "vaereg/config.hpp"
#include "vaereg/data.hpp"
#include "vaereg/error.hpp"
#include "vaereg/metrics.hpp"
#include "vaereg/vae.hpp"

namespace vaereg {

// The "table1-synthetic" preset: synthesize warped vectors, train the three
// code extractors on the training speakers, then score held-out speakers with
// every front-end / back-end pair.

inline constexpr std::array<const char *, 4> kFrontEnds{"raw", "a", "v", "c"};
inline constexpr std::array<const char *, 5> kBackEnds{"cosine", "pca", "plda",
                                                       "l-plda", "p-plda"};

inline Schema table1_schema() {
  using V = ValueType;
  return {
      {"seed", V::kInt, std::int64_t{0}, "master seed"},
      {"train_speakers", V::kInt, std::int64_t{200}, "training speakers"},
      {"eval_speakers", V::kInt, std::int64_t{50}, "held-out speakers"},
      {"utts_per_speaker", V::kInt, std::int64_t{10}, "vectors per speaker"},
      {"obs_dim", V::kInt, std::int64_t{20}, "vector dimension"},
      {"latent_dim", V::kInt, std::int64_t{5}, "speaker subspace rank"},
      {"within_scale", V::kReal, 0.2, "within-speaker covariance scale"},
      {"loading_scale", V::kReal, 1.0, "speaker loading scale"},
      {"loading_decay", V::kReal, 0.0, "loading column k scaled by (k+1)^-decay"},
      {"warp", V::kString, std::string("cubic"), "identity|cubic|exp"},
      {"warp_strength", V::kReal, 0.2, "warp gamma"},
      {"n_target", V::kInt, std::int64_t{2000}, "target trials"},
      {"n_nontarget", V::kInt, std::int64_t{2000}, "nontarget trials"},
      {"hidden", V::kInt, std::int64_t{64}, "hidden layer width"},
      {"code_dim", V::kInt, std::int64_t{8}, "code dimension"},
      {"activation", V::kString, std::string("tanh"), "tanh|relu"},
      {"epochs", V::kInt, std::int64_t{200}, "epochs for the v- and a-models"},
      {"cohesive_epochs", V::kInt, std::int64_t{100}, "further epochs for the c-model"},
      {"batch_size", V::kInt, std::int64_t{64}, "minibatch size"},
      {"learning_rate", V::kReal, 1e-3, "Adam step size"},
      {"kl_weight", V::kReal, 1.0, "beta"},
      {"recon_weight", V::kReal, 0.1, "alpha"},
      {"cohesive_weight", V::kReal, 10.0, "lambda for the c-model"},
      {"standardize", V::kBool, true, "center and scale inputs inside the model"},
      {"projection_dim", V::kInt, std::int64_t{0}, "PCA/LDA dim, 0 = min(dim-1, 8)"},
      {"plda_iters", V::kInt, std::int64_t{10}, "PLDA EM iterations"},
  };
}

struct FrontEndMoments {
  MomentReport utterance;
  MomentReport speaker;
};

struct Table1Result {
  // eer[front-end][back-end], indices follow kFrontEnds / kBackEnds.
  std::array<std::array<double, 5>, 4> eer{};
  std::array<FrontEndMoments, 4> moments;
};

inline SynthConfig table1_synth_config(const RunConfig &cfg) {
  SynthConfig sc;
  sc.n_speakers = cfg.count("train_speakers") + cfg.count("eval_speakers");
  sc.utts_per_speaker = cfg.count("utts_per_speaker");
  sc.obs_dim = cfg.count("obs_dim");
  sc.latent_dim = cfg.count("latent_dim");
  sc.within_scale = cfg.real("within_scale");
  sc.loading_scale = cfg.real("loading_scale");
  sc.loading_decay = cfg.real("loading_decay");
  sc.warp = warp_from_name(cfg.str("warp"));
  sc.warp_strength = cfg.real("warp_strength");
  sc.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  return sc;
}

inline VaeArch table1_arch(const RunConfig &cfg) {
  const auto act = activation_from_name(cfg.str("activation"));
  if (act == Activation::kLinear)
    fail(Errc::kInvalidConfig, "hidden activation must be tanh or relu");
  return VaeArch::uniform(cfg.count("hidden"), cfg.count("code_dim"), act);
}

inline VaeTrainConfig table1_train_config(const RunConfig &cfg) {
  VaeTrainConfig tc;
  tc.kl_weight = cfg.real("kl_weight");
  tc.recon_weight = cfg.real("recon_weight");
  tc.epochs = cfg.count("epochs");
  tc.batch_size = cfg.count("batch_size");
  tc.learning_rate = cfg.real("learning_rate");
  tc.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  tc.center_inputs = tc.scale_inputs = cfg.boolean("standardize");
  return tc;
}

namespace detail {

struct BackendScores {
  std::array<ScoreSet, 5> scores;
  Projection pca, lda;
  PldaBackend plda, lplda, pplda;
};

inline BackendScores score_all_backends(const EmbeddingSet &train,
                                        const EmbeddingSet &eval,
                                        const TrialList &trials,
                                        std::size_t proj_dim, std::size_t iters) {
  BackendScores out;
  const std::size_t dim = train.dim();
  const std::size_t p = proj_dim > 0 ? std::min(proj_dim, dim)
                                     : std::min<std::size_t>(dim > 1 ? dim - 1 : 1, 8);
  out.scores[0] = cosine_score_trials(eval, eval, trials);

  out.pca = fit_pca(train, p);
  const EmbeddingSet eval_pca = project_set(out.pca, eval, true);
  out.scores[1] = cosine_score_trials(eval_pca, eval_pca, trials);

  out.plda = fit_plda_backend(train, dim, iters).backend;
  out.scores[2] = plda_backend_score_trials(out.plda, eval, eval, trials);

  out.lda = fit_lda(train, p);
  const EmbeddingSet train_lda = project_set(out.lda, train, true);
  out.lplda = fit_plda_backend(train_lda, p, iters).backend;
  const EmbeddingSet eval_lda = project_set(out.lda, eval, true);
  out.scores[3] = plda_backend_score_trials(out.lplda, eval_lda, eval_lda, trials);

  const EmbeddingSet train_pca = project_set(out.pca, train, true);
  out.pplda = fit_plda_backend(train_pca, p, iters).backend;
  out.scores[4] = plda_backend_score_trials(out.pplda, eval_pca, eval_pca, trials);
  return out;
}

}  // namespace detail

/// Runs the preset. With a non-empty `out_dir` every intermediate set, model,
/// score file and report is written there; the result is the same either way.
inline Table1Result run_table1(const RunConfig &cfg, const std::string &out_dir) {
  namespace fs = std::filesystem;
  const bool write = !out_dir.empty();
  auto path = [&](const std::string &name) { return (fs::path(out_dir) / name).string(); };
  if (write) {
    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "scores", ec);
    if (ec) fail(Errc::kIoError, "cannot create '" + out_dir + "': " + ec.message());
  }

  const SynthConfig sc = table1_synth_config(cfg);
  const std::size_t n_train = cfg.count("train_speakers");
  if (n_train == 0 || cfg.count("eval_speakers") == 0)
    fail(Errc::kInvalidConfig, "need training and held-out speakers");
  SynthResult syn = generate_synthetic(sc);
  auto [train, eval] = split_by_speaker(syn.data, n_train);
  const std::uint64_t seed = sc.seed;
  const TrialList trials = make_trials(eval, cfg.count("n_target"),
                                       cfg.count("n_nontarget"), derive_seed(seed, 3));
  if (write) {
    save_embeddings(path("train.emb"), train);
    save_embeddings(path("eval.emb"), eval);
    save_trials(path("trials.txt"), trials);
  }

  const VaeArch arch = table1_arch(cfg);
  const VaeTrainConfig tc = table1_train_config(cfg);
  const TrainResult v = train_vae(train, arch, tc);
  VaeTrainConfig cc = tc;
  cc.cohesive_weight = cfg.real("cohesive_weight");
  cc.epochs = cfg.count("cohesive_epochs");
  const TrainResult c = train_vae_from(v.model, train, cc);
  const TrainResult a = train_autoencoder(train, arch, tc);
  if (write) {
    save_vae(path("v.vae"), v.model);
    save_vae(path("c.vae"), c.model);
    save_vae(path("a.vae"), a.model);
    for (auto [name, r] : {std::pair{"v", &v}, std::pair{"c", &c}, std::pair{"a", &a}}) {
      auto os = io::open_out(path(std::string(name) + "_history.csv"), false);
      write_history_csv(os, r->history);
    }
  }

  const std::array<std::pair<EmbeddingSet, EmbeddingSet>, 4> fronts{{
      {train, eval},
      {extract_codes(a.model, train), extract_codes(a.model, eval)},
      {extract_codes(v.model, train), extract_codes(v.model, eval)},
      {extract_codes(c.model, train), extract_codes(c.model, eval)},
  }};

  Table1Result res;
  const std::size_t proj_dim = cfg.count("projection_dim");
  const std::size_t iters = cfg.count("plda_iters");
  for (std::size_t f = 0; f < fronts.size(); ++f) {
    const auto &[tr, ev] = fronts[f];
    const std::string fe = kFrontEnds[f];
    res.moments[f].utterance = moments_report(tr, MomentLevel::kUtterance);
    res.moments[f].speaker = moments_report(tr, MomentLevel::kSpeaker);
    const auto be = detail::score_all_backends(tr, ev, trials, proj_dim, iters);
    for (std::size_t b = 0; b < kBackEnds.size(); ++b) {
      res.eer[f][b] = compute_eer(be.scores[b], trials).eer;
      if (write)
        save_scores(path("scores/" + fe + "_" + kBackEnds[b] + ".txt"), trials,
                    be.scores[b]);
    }
    if (write) {
      save_projection(path(fe + "_pca.prj"), be.pca);
      save_projection(path(fe + "_lda.prj"), be.lda);
      save_plda_backend(path(fe + "_plda.pld"), be.plda);
      save_plda_backend(path(fe + "_l-plda.pld"), be.lplda);
      save_plda_backend(path(fe + "_p-plda.pld"), be.pplda);
      for (const auto *rep : {&res.moments[f].utterance, &res.moments[f].speaker}) {
        auto os = io::open_out(
            path("moments_" + fe + "_" + moment_level_name(rep->level) + ".txt"), false);
        write_moment_report(os, *rep);
      }
    }
  }

  if (write) {
    auto os = io::open_out(path("eer_grid.csv"), false);
    os << "frontend";
    for (const char *b : kBackEnds) os << ',' << b;
    os << '\n';
    char buf[32];
    for (std::size_t f = 0; f < kFrontEnds.size(); ++f) {
      os << kFrontEnds[f];
      for (double e : res.eer[f]) {
        std::snprintf(buf, sizeof(buf), ",%.2f", 100.0 * e);
        os << buf;
      }
      os << '\n';
    }
    auto cs = io::open_out(path("config.txt"), false);
    cs << format_config(cfg);
  }
  return res;
}

/// Named presets accepted by run_pipeline.
inline Schema pipeline_schema(const std::string &preset) {
  if (preset == "table1-synthetic") return table1_schema();
  fail(Errc::kInvalidConfig, "unknown preset '" + preset + "'");
}

inline Table1Result run_pipeline(const std::string &preset, const RunConfig &cfg,
                                 const std::string &out_dir) {
  pipeline_schema(preset);
  return run_table1(cfg, out_dir);
}

}  // namespace vaereg
