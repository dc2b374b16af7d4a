#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "pjfcann/corpus.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

std::string cli() {
  const char* p = std::getenv("PJFCANN_CLI");
  return p ? p : "pjfcann";
}

Result run(const std::string& args) {
  Result r;
  const std::string cmd = cli() + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("pjfcann-cli-" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    json synth = {{"num_skills", 3},       {"num_jobs", 12},
                  {"num_resumes", 30},     {"applications_per_resume", 6},
                  {"mentions_per_skill", 1}, {"seed", 3}};
    std::ofstream(dir_ / "synth.json") << synth.dump();
    json config = {{"model", {{"d", 6}, {"d2", 6}, {"word_dim", 4}, {"encoder_hidden", 3}}},
                   {"train", {{"epochs", 1}}}};
    std::ofstream(dir_ / "config.json") << config.dump();
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string small() const {
    return "--synth --synth-config " + (dir_ / "synth.json").string() + " --config " +
           (dir_ / "config.json").string() + " --out-dir " + (dir_ / "runs").string();
  }

  std::vector<fs::path> run_dirs() const {
    std::vector<fs::path> out;
    if (!fs::exists(dir_ / "runs")) return out;
    for (const auto& e : fs::directory_iterator(dir_ / "runs")) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
  }

  fs::path dir_;
};

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

}  // namespace

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("fly").code, 2);
  EXPECT_EQ(run("train --bogus").code, 2);
  EXPECT_EQ(run("train").code, 2);
  EXPECT_EQ(run("train --synth --corpus x.jsonl").code, 2);
  EXPECT_EQ(run("train --corpus " + (dir_ / "missing.jsonl").string()).code, 2);
  EXPECT_EQ(run(small() + " --sim bm25").code, 2);
  EXPECT_EQ(run("train " + small() + " --sim bm25").code, 2);
  EXPECT_EQ(run("train " + small() + " --ablate no-text").code, 2);
  EXPECT_EQ(run("train " + small() + " --ph-ratio 1").code, 2);
  EXPECT_EQ(run("train " + small() + " --global-dim-ratio 2").code, 2);
  EXPECT_EQ(run("eval " + small()).code, 2);
  EXPECT_EQ(run("sweep " + small()).code, 2);
  EXPECT_EQ(run("gradcheck --corrupt nosuchop").code, 2);
  EXPECT_EQ(run("synth").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, SynthWritesALoadableCorpus) {
  const fs::path out = dir_ / "corpus.jsonl";
  auto r = run("synth --synth-config " + (dir_ / "synth.json").string() + " --out " +
               out.string());
  ASSERT_EQ(r.code, 0) << r.output;
  auto c = pjfcann::load_corpus(out.string());
  EXPECT_EQ(c.jobs.size(), 12u);
  EXPECT_EQ(c.applications.size(), 180u);
}

TEST_F(Cli, TrainWritesRunDirectoryAndEvalReproducesIt) {
  auto r = run("train " + small() + " --seed 4");
  ASSERT_EQ(r.code, 0) << r.output;
  auto dirs = run_dirs();
  ASSERT_EQ(dirs.size(), 1u);
  EXPECT_NE(dirs[0].filename().string().find("pjfcann-seed4"), std::string::npos);
  for (const char* f : {"report.json", "metrics.csv", "checkpoint.json"})
    EXPECT_TRUE(fs::exists(dirs[0] / f)) << f;
  auto report = read_json(dirs[0] / "report.json");
  EXPECT_EQ(report["label"], "PJFCANN");
  EXPECT_EQ(report["seed"], 4);
  EXPECT_EQ(report["epochs"].size(), 1u);
  const double acc = report["test"]["accuracy"];

  auto e = run("eval " + small() + " --checkpoint " + (dirs[0] / "checkpoint.json").string());
  ASSERT_EQ(e.code, 0) << e.output;
  auto after = run_dirs();
  ASSERT_EQ(after.size(), 2u);
  const fs::path eval_dir = after[0] == dirs[0] ? after[1] : after[0];
  EXPECT_EQ(read_json(eval_dir / "report.json")["test"]["accuracy"].get<double>(), acc);
}

TEST_F(Cli, AblationAndRepeatedRunsGetSeparateDirectories) {
  ASSERT_EQ(run("train " + small() + " --ablate no-gnn").code, 0);
  ASSERT_EQ(run("train " + small() + " --ablate no-gnn").code, 0);
  auto dirs = run_dirs();
  ASSERT_EQ(dirs.size(), 2u);
  auto report = read_json(dirs[0] / "report.json");
  EXPECT_EQ(report["label"], "PJFCANN (w/o GNN)");
  EXPECT_EQ(report["config"]["model"]["global_dim_ratio"], 0.0);
  EXPECT_EQ(report["test"], read_json(dirs[1] / "report.json")["test"]);
}

TEST_F(Cli, SweepWritesGrid) {
  auto r = run("sweep " + small() + " --global-grid 0,0.5 --ph-grid 0.6");
  ASSERT_EQ(r.code, 0) << r.output;
  auto dirs = run_dirs();
  ASSERT_EQ(dirs.size(), 1u);
  std::ifstream csv(dirs[0] / "grid.csv");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(csv, line)) ++lines;
  EXPECT_EQ(lines, 3u);
  auto sweep = read_json(dirs[0] / "sweep.json");
  EXPECT_EQ(sweep["cells"].size(), 2u);
  EXPECT_EQ(sweep["cells"][0]["history_pieces"], 5);
  EXPECT_TRUE(sweep.contains("best_cell_near_reference"));
}

TEST_F(Cli, GradcheckPassesAndCatchesCorruption) {
  auto ok = run("gradcheck");
  EXPECT_EQ(ok.code, 0) << ok.output;
  auto bad = run("gradcheck --corrupt sigmoid");
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.output.find("FAIL op:sigmoid"), std::string::npos);
}
