// Copyright 2026 The anomseg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Drives the anomseg executable end to end and checks exit codes and files.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "anomseg/anomseg.hpp"
#include "gtest/gtest.h"
#include "oracles.hpp"

namespace anomseg {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = testutil::scratch_dir("cli");
    data_ = dir_ / "data";
    ASSERT_EQ(run("synth --out " + q(data_) +
                  " --seed 3 --images 3 --height 20 --width 24 --classes 4 --dims 8"),
              0);
  }
  void TearDown() override { fs::remove_all(dir_); }

  static std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

  int run(const std::string& args) const {
    const std::string cmd = std::string(ANOMSEG_CLI) + " " + args + " > " +
                            q(dir_ / "stdout.txt") + " 2> " + q(dir_ / "stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string stderr_text() const {
    std::ifstream in(dir_ / "stderr.txt");
    return {std::istreambuf_iterator<char>(in), {}};
  }

  fs::path dir_;
  fs::path data_;
};

TEST_F(CliTest, EvalWritesReportsMatchingTheLibrary) {
  const fs::path out = dir_ / "out";
  ASSERT_EQ(run("eval --dataset " + q(data_) + " --method max_logits --exact --out " +
                q(out)),
            0)
      << stderr_text();
  std::ifstream in(out / "report.json");
  const auto j = nlohmann::json::parse(in);
  EvalConfig cfg;
  cfg.method = ScoreMethod::kMaxLogits;
  cfg.exact = true;
  const EvalReport lib = run_eval(load_manifest(data_), cfg);
  EXPECT_EQ(j, to_json(lib));

  std::ifstream csv(out / "report.csv");
  std::string header, row;
  std::getline(csv, header);
  std::getline(csv, row);
  EXPECT_EQ(header, kCsvHeader);
  EXPECT_EQ(row, to_csv_row(lib));
}

TEST_F(CliTest, ConfigFileAndFlagOverrides) {
  const fs::path cfg = dir_ / "cfg.json";
  std::ofstream(cfg) << R"({"method": "odin", "odin_temperature": 2.0, "bins": 512})";
  ASSERT_EQ(run("eval --config " + q(cfg) + " --dataset " + q(data_) +
                " --out " + q(dir_ / "o1")),
            0)
      << stderr_text();
  std::ifstream in(dir_ / "o1" / "report.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("method"), "odin");
  EXPECT_EQ(j.at("bins"), 512);

  ASSERT_EQ(run("eval --config " + q(cfg) + " --method msp --bins 64 --dataset " +
                q(data_) + " --out " + q(dir_ / "o2")),
            0);
  std::ifstream in2(dir_ / "o2" / "report.json");
  const auto j2 = nlohmann::json::parse(in2);
  EXPECT_EQ(j2.at("method"), "msp");
  EXPECT_EQ(j2.at("bins"), 64);
}

TEST_F(CliTest, ScoreAndRenderWritePerImageFiles) {
  ASSERT_EQ(run("score --dataset " + q(data_) + " --method mmras_plus --jobs 2 --out " +
                q(dir_ / "scores")),
            0)
      << stderr_text();
  ASSERT_EQ(run("render --dataset " + q(data_) + " --method entropy --out " +
                q(dir_ / "png")),
            0);
  for (const char* id : {"img_0000", "img_0001", "img_0002"}) {
    const AnomalyScoreMap s = load_scores(dir_ / "scores" / (std::string(id) + ".npy"));
    EXPECT_EQ(s.height(), 20u);
    EXPECT_EQ(s.width(), 24u);
    EXPECT_TRUE(fs::exists(dir_ / "png" / (std::string(id) + ".png")));
  }
  ASSERT_EQ(run("render --input " + q(dir_ / "scores" / "img_0000.npy") + " --out " +
                q(dir_ / "single.png")),
            0);
  EXPECT_EQ(png::read(dir_ / "single.png").channels, 3u);
}

TEST_F(CliTest, DefaultsWritesFiveConfigs) {
  ASSERT_EQ(run("defaults --out " + q(dir_ / "defaults")), 0);
  const EvalConfig road = load_eval_config(dir_ / "defaults" / "roadanomaly.json");
  EXPECT_EQ(road.fusion.alpha, 0.99);
  EXPECT_EQ(road.ensemble.w, 0.7);
  const EvalConfig lf = load_eval_config(dir_ / "defaults" / "fs_lost_and_found.json");
  EXPECT_EQ(lf.fusion.alpha, 0.7);
  EXPECT_EQ(lf.ensemble.w, 0.9);
}

TEST_F(CliTest, ConfigErrorsExitTwo) {
  const std::string ds = " --dataset " + q(data_);
  EXPECT_EQ(run("eval" + ds + " --method maxlogit"), 2);
  EXPECT_EQ(run("eval" + ds + " --alpha 1.5"), 2);
  EXPECT_EQ(run("eval" + ds + " --projection dot"), 2);
  EXPECT_EQ(run("eval --dataset " + q(dir_ / "missing")), 2);
  EXPECT_EQ(run("eval" + ds + " --no-such-flag"), 2);
  EXPECT_EQ(run(""), 2);
  const fs::path bad = dir_ / "bad.json";
  std::ofstream(bad) << R"({"alpah": 0.5})";
  EXPECT_EQ(run("eval --config " + q(bad) + ds), 2);
  EXPECT_NE(stderr_text().find("alpah"), std::string::npos);

  // Text method on a dataset without features.
  fs::remove_all(data_ / "features");
  DatasetManifest m = load_manifest(data_);
  for (auto& r : m.records) r.features.reset();
  save_manifest(m);
  EXPECT_EQ(run("eval" + ds + " --method mmras"), 2);
  EXPECT_EQ(run("eval" + ds + " --method max_logits"), 0);
}

TEST_F(CliTest, DataErrorsExitThree) {
  const std::string ds = " --dataset " + q(data_);
  std::ofstream(data_ / "logits" / "img_0001.npy", std::ios::trunc) << "garbage";
  EXPECT_EQ(run("eval" + ds + " --method max_logits"), 3);
  EXPECT_NE(stderr_text().find("img_0001"), std::string::npos);

  fs::remove(data_ / "manifest.json");
  EXPECT_EQ(run("eval" + ds), 3);
}

}  // namespace
}  // namespace anomseg
