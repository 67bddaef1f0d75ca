// tools/vaereg.cpp

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

// Command-line front end. Every subcommand reads an optional --config file of
// `key = value` lines; any key can also be given as --key on the command line,
// which wins over the file.

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vaereg/backend.hpp"
#include "vaereg/config.hpp"
#include "vaereg/data.hpp"
#include "vaereg/metrics.hpp"
#include "vaereg/pipeline.hpp"
#include "vaereg/vae.hpp"

using namespace vaereg;

namespace {

using V = ValueType;

KeySpec req(const std::string &key, const std::string &help) {
  return {key, V::kString, std::string(), help, true};
}
KeySpec opt_path(const std::string &key, const std::string &help) {
  return {key, V::kString, std::string(), help, false};
}
KeySpec seed_key() { return {"seed", V::kInt, std::int64_t{0}, "random seed"}; }

Schema vae_keys(bool variational) {
  Schema s{
      {"hidden", V::kInt, std::int64_t{64}, "hidden layer width"},
      {"code_dim", V::kInt, std::int64_t{8}, "code dimension"},
      {"activation", V::kString, std::string("tanh"), "tanh|relu"},
      {"epochs", V::kInt, std::int64_t{100}, "training epochs"},
      {"batch_size", V::kInt, std::int64_t{64}, "minibatch size"},
      {"learning_rate", V::kReal, 1e-3, "Adam step size"},
      {"recon_weight", V::kReal, 1.0, "alpha"},
      {"standardize", V::kBool, false, "center and scale inputs inside the model"},
  };
  if (variational) {
    s.push_back({"kl_weight", V::kReal, 1.0, "beta"});
    s.push_back({"cohesive_weight", V::kReal, 0.0, "lambda"});
    s.push_back({"samples_per_input", V::kInt, std::int64_t{1}, "latent draws per input"});
    s.push_back(opt_path("init", "VAE1 model to continue from"));
  }
  return s;
}

Schema concat(Schema a, const Schema &b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

struct Command {
  CLI::App *app = nullptr;
  Schema schema;
  std::string config_path;
  std::map<std::string, std::string> given;
  std::map<std::string, CLI::Option *> options;
  std::function<std::string(const RunConfig &)> run;

  RunConfig resolve() const {
    RunConfig cfg = config_path.empty() ? RunConfig(schema) : load_config(config_path, schema);
    for (const auto &[key, opt] : options)
      if (opt->count() > 0) cfg.set_text(key, given.at(key));
    require_keys(cfg);
    return cfg;
  }
};

Command &add_command(CLI::App &root, std::vector<std::unique_ptr<Command>> &cmds,
                     const std::string &name, const std::string &desc, Schema schema,
                     std::function<std::string(const RunConfig &)> run) {
  cmds.push_back(std::make_unique<Command>());
  Command &c = *cmds.back();
  c.app = root.add_subcommand(name, desc);
  c.schema = std::move(schema);
  c.run = std::move(run);
  c.app->add_option("--config", c.config_path, "file of key = value lines");
  for (const auto &k : c.schema) {
    std::string help = k.help + " (" + value_type_name(k.type) + ")";
    if (k.required) help += " [required]";
    auto *o = c.app->add_option("--" + k.key, c.given[k.key], help);
    const std::string def = format_value(k.default_value);
    if (!def.empty()) o->default_str(def);
    c.options[k.key] = o;
  }
  return c;
}

SynthConfig synth_config(const RunConfig &cfg) {
  SynthConfig sc;
  sc.n_speakers = cfg.count("n_speakers");
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

nlohmann::json matrix_json(const Matrix &m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(m.row_vector(i));
  return rows;
}

std::string run_synth(const RunConfig &cfg) {
  const SynthConfig sc = synth_config(cfg);
  SynthResult syn = generate_synthetic(sc);
  const std::size_t n_eval = cfg.count("eval_speakers");
  if (n_eval >= sc.n_speakers)
    fail(Errc::kInvalidConfig, "eval_speakers must be below n_speakers");
  auto [train, eval] = split_by_speaker(syn.data, sc.n_speakers - n_eval);
  save_embeddings(cfg.str("out"), train);
  if (n_eval > 0) {
    if (cfg.str("eval_out").empty())
      fail(Errc::kInvalidConfig, "eval_speakers > 0 needs eval_out");
    save_embeddings(cfg.str("eval_out"), eval);
  }
  std::string summary = "synth " + std::to_string(train.size()) + " vectors";
  if (!cfg.str("trials").empty()) {
    const EmbeddingSet &pool = n_eval > 0 ? eval : train;
    const TrialList trials = make_trials(pool, cfg.count("n_target"), cfg.count("n_nontarget"),
                                         derive_seed(sc.seed, 3));
    save_trials(cfg.str("trials"), trials);
    summary += ", " + std::to_string(trials.size()) + " trials";
  }
  if (!cfg.str("truth").empty()) {
    nlohmann::json j;
    j["m"] = syn.truth.m;
    j["U"] = matrix_json(syn.truth.U);
    j["W"] = matrix_json(syn.truth.W);
    j["R"] = matrix_json(syn.truth.R);
    j["speaker_codes"] = matrix_json(syn.truth.speaker_codes);
    j["warp"] = warp_name(sc.warp);
    j["warp_strength"] = sc.warp_strength;
    j["seed"] = sc.seed;
    auto os = io::open_out(cfg.str("truth"), false);
    os << j.dump(1) << '\n';
  }
  return summary;
}

VaeTrainConfig train_config(const RunConfig &cfg, bool variational) {
  VaeTrainConfig tc;
  tc.recon_weight = cfg.real("recon_weight");
  tc.epochs = cfg.count("epochs");
  tc.batch_size = cfg.count("batch_size");
  tc.learning_rate = cfg.real("learning_rate");
  tc.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  tc.center_inputs = tc.scale_inputs = cfg.boolean("standardize");
  if (variational) {
    tc.kl_weight = cfg.real("kl_weight");
    tc.cohesive_weight = cfg.real("cohesive_weight");
    tc.samples_per_input = cfg.count("samples_per_input");
  }
  return tc;
}

VaeArch arch_config(const RunConfig &cfg) {
  const auto act = activation_from_name(cfg.str("activation"));
  if (act == Activation::kLinear)
    fail(Errc::kInvalidConfig, "hidden activation must be tanh or relu");
  return VaeArch::uniform(cfg.count("hidden"), cfg.count("code_dim"), act);
}

std::string finish_training(const RunConfig &cfg, const TrainResult &r, const char *what) {
  save_vae(cfg.str("model"), r.model);
  if (!cfg.str("history").empty()) {
    auto os = io::open_out(cfg.str("history"), false);
    write_history_csv(os, r.history);
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%s %zu epochs, final loss %.6f", what,
                r.history.size(), r.history.empty() ? 0.0 : r.history.back().total);
  return buf;
}

std::string run_train_vae(const RunConfig &cfg) {
  const EmbeddingSet data = load_embeddings(cfg.str("data"));
  const VaeTrainConfig tc = train_config(cfg, true);
  const TrainResult r = cfg.str("init").empty()
                            ? train_vae(data, arch_config(cfg), tc)
                            : train_vae_from(load_vae(cfg.str("init")), data, tc);
  return finish_training(cfg, r, "train-vae");
}

std::string run_train_ae(const RunConfig &cfg) {
  const EmbeddingSet data = load_embeddings(cfg.str("data"));
  return finish_training(
      cfg, train_autoencoder(data, arch_config(cfg), train_config(cfg, false)), "train-ae");
}

std::string run_extract(const RunConfig &cfg) {
  const VaeModel model = load_vae(cfg.str("model"));
  const EmbeddingSet codes = extract_codes(model, load_embeddings(cfg.str("data")));
  save_embeddings(cfg.str("out"), codes);
  return "extract " + std::to_string(codes.size()) + " codes of dim " +
         std::to_string(codes.dim());
}

std::size_t auto_dim(std::size_t requested, std::size_t dim) {
  if (requested > 0) return requested;
  return std::min<std::size_t>(dim > 1 ? dim - 1 : 1, 8);
}

std::string run_fit_backend(const RunConfig &cfg) {
  const EmbeddingSet data = load_embeddings(cfg.str("data"));
  const std::string type = cfg.str("type");
  const std::string out = cfg.str("out");
  if (type == "pca" || type == "lda") {
    const std::size_t dim = auto_dim(cfg.count("dim"), data.dim());
    save_projection(out, type == "pca" ? fit_pca(data, dim) : fit_lda(data, dim));
    return "fit-backend " + type + " " + std::to_string(data.dim()) + " -> " +
           std::to_string(dim);
  }
  if (type == "whiten") {
    save_projection(out, fit_whitener(data));
    return "fit-backend whiten dim " + std::to_string(data.dim());
  }
  if (type == "plda") {
    const std::size_t r = cfg.count("latent_dim") > 0 ? cfg.count("latent_dim") : data.dim();
    const auto fit = fit_plda_backend(data, r, cfg.count("iters"));
    save_plda_backend(out, fit.backend);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "fit-backend plda rank %zu, log-likelihood %.6f", r,
                  fit.log_likelihood.back());
    return buf;
  }
  fail(Errc::kInvalidConfig, "type must be pca, lda, plda or whiten, got '" + type + "'");
}

std::string run_score(const RunConfig &cfg) {
  EmbeddingSet enroll = load_embeddings(cfg.str("enroll"));
  EmbeddingSet test = cfg.str("test").empty() ? enroll : load_embeddings(cfg.str("test"));
  const TrialList trials = load_trials(cfg.str("trials"));
  if (!cfg.str("projection").empty()) {
    const Projection p = load_projection(cfg.str("projection"));
    const bool ln = cfg.boolean("length_norm");
    enroll = project_set(p, enroll, ln);
    test = project_set(p, test, ln);
  }
  const std::string type = cfg.str("type");
  ScoreSet scores;
  if (type == "cosine") {
    scores = cosine_score_trials(enroll, test, trials);
  } else if (type == "plda") {
    if (cfg.str("plda").empty()) fail(Errc::kInvalidConfig, "type plda needs --plda");
    const PldaFile f = load_plda(cfg.str("plda"));
    if (f.whitener) {
      const PldaBackend b{*f.whitener, f.model};
      scores = plda_backend_score_trials(b, enroll, test, trials);
    } else {
      scores = plda_score_trials(f.model, enroll, test, trials);
    }
  } else {
    fail(Errc::kInvalidConfig, "type must be cosine or plda, got '" + type + "'");
  }
  save_scores(cfg.str("out"), trials, scores);
  return "score " + type + " " + std::to_string(scores.size()) + " trials";
}

std::string run_eval(const RunConfig &cfg) {
  const TrialList trials = load_trials(cfg.str("trials"));
  const EvalResult r = compute_eer(load_scores(cfg.str("scores"), trials), trials);
  const std::string line = format_eer_line(r.eer);
  if (!cfg.str("det").empty()) {
    auto os = io::open_out(cfg.str("det"), false);
    write_det_csv(os, r);
  }
  if (!cfg.str("out").empty()) {
    auto os = io::open_out(cfg.str("out"), false);
    os << line << '\n';
  }
  return line;
}

std::string run_moments(const RunConfig &cfg) {
  const EmbeddingSet data = load_embeddings(cfg.str("data"));
  const std::string level = cfg.str("level");
  MomentLevel l;
  if (level == "utterance")
    l = MomentLevel::kUtterance;
  else if (level == "speaker")
    l = MomentLevel::kSpeaker;
  else
    fail(Errc::kInvalidConfig, "level must be utterance or speaker, got '" + level + "'");
  const MomentReport rep = moments_report(data, l);
  auto os = io::open_out(cfg.str("out"), false);
  write_moment_report(os, rep);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "moments %s skew %.4f kurt %.4f (|skew| %.4f |kurt| %.4f)",
                level.c_str(), rep.pooled_skew, rep.pooled_kurt, rep.mean_abs_skew,
                rep.mean_abs_kurt);
  return buf;
}

std::string run_pipeline_cmd(const RunConfig &cfg) {
  const std::string preset = cfg.str("preset");
  Schema s = pipeline_schema(preset);
  // Carry the preset keys over to the preset's own schema.
  RunConfig pc(s);
  for (const auto &k : s) pc.set(k.key, cfg.get(k.key));
  const Table1Result r = run_pipeline(preset, pc, cfg.str("out_dir"));
  char buf[96];
  std::snprintf(buf, sizeof(buf), "pipeline %s: v-vector plda EER %.2f, raw plda EER %.2f",
                preset.c_str(), 100.0 * r.eer[2][2], 100.0 * r.eer[0][2]);
  return buf;
}

int exit_code(Errc e) {
  switch (error_class(e)) {
    case ErrorClass::kUsage: return 1;
    case ErrorClass::kData: return 2;
    case ErrorClass::kNumerical: return 3;
  }
  return 2;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Gaussian regularization of embedding vectors and trial scoring"};
  app.require_subcommand(1);
  std::vector<std::unique_ptr<Command>> cmds;

  add_command(app, cmds, "synth", "generate warped synthetic embeddings",
              {req("out", "embeddings for the first speakers (.csv or binary)"),
               opt_path("eval_out", "embeddings for the last eval_speakers speakers"),
               opt_path("trials", "trial list drawn from the eval (or only) set"),
               opt_path("truth", "ground truth as JSON"),
               seed_key(),
               {"n_speakers", V::kInt, std::int64_t{200}, "speakers"},
               {"eval_speakers", V::kInt, std::int64_t{0}, "speakers held out to eval_out"},
               {"utts_per_speaker", V::kInt, std::int64_t{10}, "vectors per speaker"},
               {"obs_dim", V::kInt, std::int64_t{20}, "vector dimension"},
               {"latent_dim", V::kInt, std::int64_t{5}, "speaker subspace rank"},
               {"within_scale", V::kReal, 1.0, "within-speaker covariance scale"},
               {"loading_scale", V::kReal, 1.0, "speaker loading scale"},
               {"loading_decay", V::kReal, 1.0, "loading column k scaled by (k+1)^-decay"},
               {"warp", V::kString, std::string("cubic"), "identity|cubic|exp"},
               {"warp_strength", V::kReal, 0.2, "warp gamma"},
               {"n_target", V::kInt, std::int64_t{2000}, "target trials"},
               {"n_nontarget", V::kInt, std::int64_t{2000}, "nontarget trials"}},
              run_synth);
  add_command(app, cmds, "train-vae", "train a (cohesive) VAE",
              concat({req("data", "training embeddings"), req("model", "output VAE1 model"),
                      opt_path("history", "loss history CSV"), seed_key()},
                     vae_keys(true)),
              run_train_vae);
  add_command(app, cmds, "train-ae", "train a deterministic auto-encoder",
              concat({req("data", "training embeddings"), req("model", "output VAE1 model"),
                      opt_path("history", "loss history CSV"), seed_key()},
                     vae_keys(false)),
              run_train_ae);
  add_command(app, cmds, "extract", "encode embeddings to codes",
              {req("model", "VAE1 model"), req("data", "input embeddings"),
               req("out", "output codes"), seed_key()},
              run_extract);
  add_command(app, cmds, "fit-backend", "fit a projection or PLDA back-end",
              {{"type", V::kString, std::string("plda"), "pca|lda|plda|whiten"},
               req("data", "training embeddings"), req("out", "output PRJ1/PLD1 model"),
               {"dim", V::kInt, std::int64_t{0}, "projection dim, 0 = min(dim-1, 8)"},
               {"latent_dim", V::kInt, std::int64_t{0}, "PLDA rank, 0 = full"},
               {"iters", V::kInt, std::int64_t{10}, "PLDA EM iterations"},
               seed_key()},
              run_fit_backend);
  add_command(app, cmds, "score", "score a trial list",
              {{"type", V::kString, std::string("cosine"), "cosine|plda"},
               req("enroll", "enrollment embeddings"),
               opt_path("test", "test embeddings (default: enroll set)"),
               req("trials", "trial list"), req("out", "output score file"),
               opt_path("projection", "PRJ1 projection applied first"),
               {"length_norm", V::kBool, true, "length-normalize after the projection"},
               opt_path("plda", "PLD1 model for type plda"),
               seed_key()},
              run_score);
  add_command(app, cmds, "eval", "EER and DET curve of a score file",
              {req("scores", "score file"), req("trials", "trial list"),
               opt_path("det", "DET points CSV"), opt_path("out", "EER summary file"),
               seed_key()},
              run_eval);
  add_command(app, cmds, "moments", "skewness and kurtosis report",
              {req("data", "embeddings"), req("out", "report file"),
               {"level", V::kString, std::string("utterance"), "utterance|speaker"},
               seed_key()},
              run_moments);
  add_command(app, cmds, "pipeline", "run a named experiment preset",
              concat({{"preset", V::kString, std::string("table1-synthetic"), "preset name"},
                      req("out_dir", "directory for every artifact")},
                     table1_schema()),
              run_pipeline_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  for (const auto &c : cmds) {
    if (!c->app->parsed()) continue;
    try {
      std::cout << c->run(c->resolve()) << '\n';
      return 0;
    } catch (const Error &e) {
      std::cerr << "vaereg " << c->app->get_name() << ": " << e.what() << '\n';
      return exit_code(e.code());
    } catch (const std::exception &e) {
      std::cerr << "vaereg " << c->app->get_name() << ": " << e.what() << '\n';
      return 2;
    }
  }
  return 1;
}
