// tests/test_cli.cpp

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

// Drives the built `vaereg` binary end to end.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_util.hpp"
#include "vaereg/pipeline.hpp"

namespace vaereg {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(const std::string &args, const std::string &dir) {
  const std::string out = dir + "/stdout.txt", err = dir + "/stderr.txt";
  const std::string cmd =
      std::string(VAEREG_CLI_PATH) + " " + args + " >" + out + " 2>" + err;
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, testing::slurp(out),
          testing::slurp(err)};
}

const char *kSubcommands[] = {"synth", "train-vae", "train-ae", "extract", "fit-backend",
                              "score", "eval",      "moments",  "pipeline"};

TEST(Cli, HelpListsEveryKeyWithDefaults) {
  const std::string dir = testing::scratch_dir("cli_help");
  for (const char *sub : kSubcommands) {
    const CliRun r = run(std::string(sub) + " --help", dir);
    EXPECT_EQ(r.code, 0) << sub;
    EXPECT_NE(r.out.find("--config"), std::string::npos) << sub;
  }
  const CliRun tv = run("train-vae --help", dir);
  for (const char *key : {"--epochs", "--kl_weight", "--recon_weight", "--cohesive_weight",
                          "--hidden", "--code_dim", "--standardize", "--seed"})
    EXPECT_NE(tv.out.find(key), std::string::npos) << key;
  const CliRun pl = run("pipeline --help", dir);
  for (const auto &k : table1_schema())
    EXPECT_NE(pl.out.find("--" + k.key), std::string::npos) << k.key;
  EXPECT_NE(pl.out.find("table1-synthetic"), std::string::npos);
}

TEST(Cli, UsageErrorsExitOne) {
  const std::string dir = testing::scratch_dir("cli_usage");
  EXPECT_EQ(run("", dir).code, 1);
  EXPECT_EQ(run("frobnicate", dir).code, 1);
  EXPECT_EQ(run("synth --bogus 3", dir).code, 1);
  EXPECT_EQ(run("synth", dir).code, 1);  // required out missing
  EXPECT_EQ(run("synth --out " + dir + "/a.csv --n_speakers many", dir).code, 1);
  {
    std::ofstream(dir + "/bad.cfg") << "out = x.csv\nno_such_key = 1\n";
  }
  const CliRun r = run("synth --config " + dir + "/bad.cfg", dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("no_such_key"), std::string::npos) << r.err;
}

TEST(Cli, MissingInputNamesPathAndExitsTwo) {
  const std::string dir = testing::scratch_dir("cli_missing");
  const std::string path = dir + "/does_not_exist.csv";
  const CliRun r = run("moments --data " + path + " --out " + dir + "/m.txt", dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(path), std::string::npos) << r.err;
  const CliRun c = run("synth --config " + dir + "/nothing.cfg", dir);
  EXPECT_NE(c.code, 0);
  EXPECT_NE(c.err.find("nothing.cfg"), std::string::npos) << c.err;
}

TEST(Cli, StagesComposeAndAreRerunnable) {
  const std::string d = testing::scratch_dir("cli_stages");
  auto ok = [&](const std::string &args) {
    const CliRun r = run(args, d);
    EXPECT_EQ(r.code, 0) << args << "\n" << r.err;
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1) << r.out;
    return r;
  };
  const std::string synth = "synth --n_speakers 30 --eval_speakers 10 --utts_per_speaker 5"
                            " --obs_dim 6 --latent_dim 2 --n_target 60 --n_nontarget 100"
                            " --seed 4 --out " + d + "/train.emb --eval_out " + d +
                            "/eval.csv --trials " + d + "/trials.txt --truth " + d +
                            "/truth.json";
  ok(synth);
  const std::string first = testing::slurp(d + "/train.emb");
  ok(synth);
  EXPECT_EQ(testing::slurp(d + "/train.emb"), first);
  EXPECT_EQ(testing::slurp(d + "/train.emb").substr(0, 4), "EMB1");
  EXPECT_NE(testing::slurp(d + "/truth.json").find("\"U\""), std::string::npos);

  {
    std::ofstream(d + "/vae.cfg") << "# small model\nhidden = 8\ncode_dim = 2\nepochs = 3\n"
                                     "cohesive_weight = 10\nstandardize = true\n";
  }
  ok("train-vae --config " + d + "/vae.cfg --data " + d + "/train.emb --model " + d +
     "/c.vae --history " + d + "/c.csv --epochs 2");
  EXPECT_EQ(testing::slurp(d + "/c.csv").substr(0, 31), "epoch,total,kl,recon,cohesive\n0");
  const std::string hist = testing::slurp(d + "/c.csv");
  EXPECT_EQ(std::count(hist.begin(), hist.end(), '\n'), 3);  // flag beats config file
  ok("train-vae --data " + d + "/train.emb --model " + d + "/c2.vae --config " + d +
     "/vae.cfg --epochs 2");
  EXPECT_EQ(testing::slurp(d + "/c.vae"), testing::slurp(d + "/c2.vae"));
  ok("train-ae --data " + d + "/train.emb --model " + d + "/a.vae --hidden 8 --code_dim 2"
     " --epochs 2");

  for (const char *split : {"train", "eval"}) {
    const std::string ext = std::string(split) == "train" ? ".emb" : ".csv";
    ok("extract --model " + d + "/c.vae --data " + d + "/" + split + ext + " --out " + d +
       "/" + split + "_codes.emb");
  }
  ok("fit-backend --type lda --dim 1 --data " + d + "/train_codes.emb --out " + d + "/lda.prj");
  ok("fit-backend --type plda --data " + d + "/train_codes.emb --out " + d + "/plda.pld");
  EXPECT_EQ(testing::slurp(d + "/plda.pld").substr(0, 4), "PLD1");
  ok("score --type plda --plda " + d + "/plda.pld --enroll " + d + "/eval_codes.emb --trials " +
     d + "/trials.txt --out " + d + "/plda.scores");
  ok("score --type cosine --projection " + d + "/lda.prj --enroll " + d +
     "/eval_codes.emb --trials " + d + "/trials.txt --out " + d + "/cos.scores");
  const CliRun e = ok("eval --scores " + d + "/plda.scores --trials " + d + "/trials.txt --det " +
                   d + "/det.csv --out " + d + "/eer.txt");
  EXPECT_EQ(e.out.substr(0, 4), "EER ");
  EXPECT_EQ(testing::slurp(d + "/eer.txt"), e.out);
  EXPECT_EQ(testing::slurp(d + "/det.csv").substr(0, 8), "far,frr\n");
  ok("moments --level speaker --data " + d + "/eval.csv --out " + d + "/mom.txt");
  EXPECT_EQ(testing::slurp(d + "/mom.txt").substr(0, 14), "level speaker\n");
}

TEST(Cli, ScoreWithUnknownTrialIdIsDataError) {
  const std::string d = testing::scratch_dir("cli_trial");
  ASSERT_EQ(run("synth --n_speakers 4 --utts_per_speaker 3 --obs_dim 3 --latent_dim 1 --out " +
                    d + "/x.csv",
                d)
                .code,
            0);
  {
    std::ofstream(d + "/t.txt") << "spk00000-u000 ghost target\n";
  }
  const CliRun r =
      run("score --enroll " + d + "/x.csv --trials " + d + "/t.txt --out " + d + "/s.txt", d);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("ghost"), std::string::npos) << r.err;
}

TEST(Cli, PipelineGridShapeAndByteDeterminism) {
  const std::string d = testing::scratch_dir("cli_pipeline");
  const std::string small =
      " --train_speakers 30 --eval_speakers 10 --utts_per_speaker 4 --obs_dim 6"
      " --latent_dim 2 --n_target 50 --n_nontarget 80 --hidden 8 --code_dim 3"
      " --epochs 3 --cohesive_epochs 2 --seed 9";
  ASSERT_EQ(run("pipeline --out_dir " + d + "/a" + small, d).code, 0);
  ASSERT_EQ(run("pipeline --out_dir " + d + "/b" + small, d).code, 0);

  std::istringstream grid(testing::slurp(d + "/a/eer_grid.csv"));
  std::string line;
  std::getline(grid, line);
  EXPECT_EQ(line, "frontend,cosine,pca,plda,l-plda,p-plda");
  int rows = 0;
  while (std::getline(grid, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5) << line;
  }
  EXPECT_EQ(rows, 4);

  std::size_t compared = 0;
  for (const auto &entry : fs::recursive_directory_iterator(d + "/a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), d + "/a");
    EXPECT_EQ(testing::slurp(entry.path().string()),
              testing::slurp((fs::path(d + "/b") / rel).string()))
        << rel;
    ++compared;
  }
  EXPECT_GE(compared, 20u);

  EXPECT_EQ(run("pipeline --preset table9 --out_dir " + d + "/c", d).code, 1);
}

}  // namespace
}  // namespace vaereg
