#include "sfe/cli.h"

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sfe/dataset.h"
#include "sfe/synthgen.h"

namespace sfe::cli {
namespace {

namespace fs = std::filesystem;

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t Fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

int Cli(const std::vector<std::string>& args) { return Run(args); }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("sfe_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string P(const std::string& rel) const { return (dir_ / rel).string(); }

  void Gen(const std::string& out, int videos = 10) {
    ASSERT_EQ(Cli({"gen", "--seed", "7", "--videos", std::to_string(videos), "--frames", "4",
                   "--height", "32", "--width", "32", "--out", P(out)}),
              kExitOk);
  }

  fs::path dir_;
};

TEST_F(CliTest, GenWritesManifestAndIsRepeatable) {
  Gen("a");
  Gen("b");
  const auto recs = ReadManifest(P("a/manifest.jsonl"));
  EXPECT_EQ(recs.size(), 10u);
  EXPECT_EQ(Slurp(P("a/manifest.jsonl")), Slurp(P("b/manifest.jsonl")));
  for (const auto& r : recs) {
    for (const auto& f : r.frame_paths) EXPECT_EQ(Slurp(P("a/" + f)), Slurp(P("b/" + f)));
  }
}

TEST_F(CliTest, GenErrors) {
  { std::ofstream(P("file")) << "x"; }
  EXPECT_EQ(Cli({"gen", "--out", P("file/sub")}), kExitIo);
  EXPECT_FALSE(fs::exists(P("file/sub/manifest.jsonl")));
  EXPECT_EQ(Cli({"gen", "--out", P("x"), "--frames", "1"}), kExitConfig);
  EXPECT_EQ(Cli({"gen", "--out", P("x"), "--mix", "0.5,0.5"}), kExitConfig);
  EXPECT_EQ(Cli({"gen", "--out", P("x"), "--bogus"}), kExitConfig);
  EXPECT_EQ(Cli({"gen"}), kExitConfig);
  EXPECT_EQ(Cli({}), kExitConfig);
  EXPECT_EQ(Cli({"gen", "--help"}), kExitOk);
}

TEST_F(CliTest, ConfigFileWithOverrides) {
  {
    std::ofstream cfg(P("gen.toml"));
    cfg << "[gen]\nvideos = 4\nframes = 2\nheight = 16\nwidth = 16\n";
  }
  ASSERT_EQ(Cli({"--config", P("gen.toml"), "gen", "--out", P("d"), "--videos", "6"}), kExitOk);
  const auto recs = ReadManifest(P("d/manifest.jsonl"));
  EXPECT_EQ(recs.size(), 6u);
  EXPECT_EQ(recs[0].frame_paths.size(), 2u);
  {
    std::ofstream cfg(P("bad.toml"));
    cfg << "[gen]\nvidoes = 4\n";
  }
  EXPECT_EQ(Cli({"--config", P("bad.toml"), "gen", "--out", P("e")}), kExitConfig);
}

TEST_F(CliTest, ExtractRowsAndDeterminism) {
  Gen("d");
  ASSERT_EQ(Cli({"extract", "--manifest", P("d/manifest.jsonl"), "--out", P("f1.csv")}), kExitOk);
  ASSERT_EQ(Cli({"extract", "--manifest", P("d/manifest.jsonl"), "--out", P("f2.csv"), "--jobs",
                 "3"}),
            kExitOk);
  const std::string csv = Slurp(P("f1.csv"));
  EXPECT_EQ(csv, Slurp(P("f2.csv")));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 41);
}

TEST_F(CliTest, ExtractReportsMissingFrames) {
  Gen("d");
  fs::remove(P("d/v0002/f001.ppm"));
  fs::remove(P("d/v0005/f003.ppm"));
  testing::internal::CaptureStderr();
  EXPECT_EQ(Cli({"extract", "--manifest", P("d/manifest.jsonl"), "--out", P("f.csv")}), kExitIo);
  const std::string err = testing::internal::GetCapturedStderr();
  EXPECT_NE(err.find("v0002 frame 1"), std::string::npos);
  EXPECT_NE(err.find("v0005 frame 3"), std::string::npos);
  EXPECT_FALSE(fs::exists(P("f.csv")));
  EXPECT_EQ(Cli({"extract", "--manifest", P("none.jsonl"), "--out", P("f.csv")}), kExitIo);
}

TEST_F(CliTest, DumpMapsOfConstantFrame) {
  fs::create_directories(P("c/v0000"));
  WritePnm(ImageTensor(16, 16, 3, 0.5), P("c/v0000/f000.ppm"));
  WriteManifest({{"v0000", 0, std::nullopt, {"v0000/f000.ppm"}, std::nullopt}},
                P("c/manifest.jsonl"));
  ASSERT_EQ(Cli({"extract", "--manifest", P("c/manifest.jsonl"), "--out", P("out/f.csv"),
                 "--dump-maps"}),
            kExitOk);
  for (const char* name : {"moop_gradient", "moop_residual"}) {
    const ImageTensor m = ReadPnm(P(std::string("out/maps/v0000_f000_") + name + ".pgm"));
    for (int y = 1; y < 15; ++y) {
      for (int x = 1; x < 15; ++x) EXPECT_EQ(m.at(y, x), 0.0) << name;
    }
  }
  EXPECT_TRUE(fs::exists(P("out/maps/v0000_f000_hifr.pgm")));
  EXPECT_TRUE(fs::exists(P("out/maps/v0000_f000_comr.pgm")));
}

TEST_F(CliTest, TrainGoldenCheckpoint) {
  Gen("d");
  ASSERT_EQ(Cli({"extract", "--manifest", P("d/manifest.jsonl"), "--out", P("f.csv")}), kExitOk);
  const std::vector<std::string> train = {"train", "--manifest", P("d/manifest.jsonl"),
                                          "--features", P("f.csv"), "--epochs", "15",
                                          "--hidden", "4", "--seed", "3", "--split", "all"};
  auto with_out = [&](const std::string& out) {
    auto a = train;
    a.push_back("--out");
    a.push_back(P(out));
    return a;
  };
  ASSERT_EQ(Cli(with_out("m1")), kExitOk);
  ASSERT_EQ(Cli(with_out("m2")), kExitOk);
  const std::string ckpt = Slurp(P("m1/model.ckpt"));
  EXPECT_EQ(ckpt, Slurp(P("m2/model.ckpt")));
  EXPECT_EQ(Fnv1a(ckpt), 0x28d20d723f8baa49ull) << std::hex << Fnv1a(ckpt);
  const std::string loss = Slurp(P("m1/loss.csv"));
  EXPECT_EQ(std::count(loss.begin(), loss.end(), '\n'), 16);
  // Features recomputed from the manifest give the same checkpoint.
  auto no_features = with_out("m3");
  no_features.erase(no_features.begin() + 3, no_features.begin() + 5);
  ASSERT_EQ(Cli(no_features), kExitOk);
  EXPECT_EQ(Slurp(P("m3/model.ckpt")), ckpt);
}

TEST_F(CliTest, TrainZeroEpochsIsInitialization) {
  Gen("d");
  ASSERT_EQ(Cli({"train", "--manifest", P("d/manifest.jsonl"), "--out", P("m"), "--epochs", "0",
                 "--hidden", "4", "--seed", "5"}),
            kExitOk);
  const net::SfeModel m = net::LoadCheckpoint(P("m/model.ckpt"));
  net::TrainConfig cfg;
  cfg.hidden = 4;
  cfg.seed = 5;
  const net::SfeModel init = net::InitModel(m.spec(), cfg.seed, cfg.init_scale);
  for (std::size_t i = 0; i < m.params().size(); ++i) EXPECT_EQ(m.params()[i], init.params()[i]);
}

TEST_F(CliTest, TrainRejectsSingleClass) {
  Gen("d");
  auto recs = ReadManifest(P("d/manifest.jsonl"));
  std::erase_if(recs, [](const ManifestRecord& r) { return r.label == 1; });
  WriteManifest(recs, P("d/real.jsonl"));
  testing::internal::CaptureStderr();
  EXPECT_EQ(Cli({"train", "--manifest", P("d/real.jsonl"), "--out", P("m"), "--epochs", "1"}),
            kExitConfig);
  EXPECT_NE(testing::internal::GetCapturedStderr().find("Real and Fake"), std::string::npos);
  EXPECT_EQ(Cli({"train", "--manifest", P("d/manifest.jsonl"), "--out", P("m"), "--streams",
                 "Text,Nope"}),
            kExitConfig);
}

TEST_F(CliTest, EvalPerfectScoresFixture) {
  {
    std::ofstream s(P("scores.csv"));
    s << "id,video_id,label,score\n"
      << "a#000,a,1,0.9\na#001,a,1,0.8\nb#000,b,0,0.2\nb#001,b,0,0.1\n"
      << "c#000,c,1,0.7\nd#000,d,0,0.3\n";
  }
  testing::internal::CaptureStdout();
  ASSERT_EQ(Cli({"eval", "--scores", P("scores.csv"), "--out", P("r")}), kExitOk);
  const std::string table = testing::internal::GetCapturedStdout();
  EXPECT_NE(table.find("frame_auc"), std::string::npos);
  EXPECT_EQ(Slurp(P("r/report.csv")),
            "metric,value\nframe_auc,1\nvideo_auc,1\nap,1\neer,0\nn_pos,3\nn_neg,3\n");
  EXPECT_TRUE(fs::exists(P("r/roc.csv")));
}

TEST_F(CliTest, EvalTrainedModelOnHeldOutSplit) {
  Gen("d", 20);
  ASSERT_EQ(Cli({"extract", "--manifest", P("d/manifest.jsonl"), "--out", P("f.csv")}), kExitOk);
  ASSERT_EQ(Cli({"train", "--manifest", P("d/manifest.jsonl"), "--features", P("f.csv"), "--out",
                 P("m"), "--epochs", "30", "--hidden", "4"}),
            kExitOk);
  testing::internal::CaptureStdout();
  ASSERT_EQ(Cli({"eval", "--checkpoint", P("m/model.ckpt"), "--manifest", P("d/manifest.jsonl"),
                 "--features", P("f.csv"), "--out", P("e")}),
            kExitOk);
  testing::internal::GetCapturedStdout();
  // 30% of 10 real + 10 fake videos, 4 frames each.
  const auto scores = ReadScoresCsv(P("e/scores.csv"));
  EXPECT_EQ(scores.size(), 24u);
  // Re-evaluating the written scores reproduces the report.
  ASSERT_EQ(Cli({"eval", "--scores", P("e/scores.csv"), "--out", P("e2")}), kExitOk);
  EXPECT_EQ(Slurp(P("e/report.csv")), Slurp(P("e2/report.csv")));
  EXPECT_EQ(Cli({"eval", "--out", P("e3")}), kExitConfig);
  EXPECT_EQ(Cli({"eval", "--checkpoint", P("none.ckpt"), "--manifest", P("d/manifest.jsonl"),
                 "--out", P("e3")}),
            kExitIo);
}

TEST(SplitMaskTest, StratifiedAndDeterministic) {
  std::vector<int> labels;
  for (int i = 0; i < 20; ++i) labels.push_back(i % 2);
  const auto a = SplitMask(labels, 0.7, 9);
  EXPECT_EQ(a, SplitMask(labels, 0.7, 9));
  int train_pos = 0, train_neg = 0;
  for (int i = 0; i < 20; ++i) {
    if (a[i]) (labels[i] ? train_pos : train_neg)++;
  }
  EXPECT_EQ(train_pos, 7);
  EXPECT_EQ(train_neg, 7);
  EXPECT_THROW(SplitMask(labels, 1.5, 0), std::invalid_argument);
}

std::string RunBinary(const std::string& args, int* status) {
  const char* bin = std::getenv("SFE_CLI");
  if (bin == nullptr) return "";
  FILE* pipe = popen((std::string(bin) + " " + args + " 2>&1").c_str(), "r");
  std::string out;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof(buf), pipe)) out.append(buf, n);
  *status = WEXITSTATUS(pclose(pipe));
  return out;
}

TEST(CliBinaryTest, HelpListsEveryFlagWithDefault) {
  if (std::getenv("SFE_CLI") == nullptr) GTEST_SKIP() << "SFE_CLI not set";
  const std::map<std::string, std::vector<std::string>> flags = {
      {"gen", {"--seed", "--videos", "--frames", "--height", "--width", "--severity", "--mix",
               "--landmarks", "--jobs", "--out"}},
      {"extract", {"--manifest", "--out", "--grid", "--quality", "--hp-radius", "--dump-maps",
                   "--jobs"}},
      {"train", {"--manifest", "--features", "--grid", "--quality", "--hp-radius", "--split",
                 "--train-frac", "--seed", "--jobs", "--out", "--hidden", "--lr", "--momentum",
                 "--epochs", "--init-scale", "--clip-norm", "--landmarks", "--gating",
                 "--objective", "--streams"}},
      {"eval", {"--manifest", "--features", "--grid", "--quality", "--hp-radius", "--split",
                "--train-frac", "--seed", "--jobs", "--checkpoint", "--scores", "--out"}}};
  for (const auto& [cmd, names] : flags) {
    int status = -1;
    const std::string help = RunBinary(cmd + " --help", &status);
    EXPECT_EQ(status, 0);
    std::istringstream lines(help);
    std::string line;
    std::map<std::string, std::string> by_flag;
    while (std::getline(lines, line)) {
      for (const auto& n : names) {
        if (line.find(n + " ") != std::string::npos || line.ends_with(n)) by_flag[n] = line;
      }
    }
    for (const auto& n : names) {
      ASSERT_TRUE(by_flag.count(n)) << cmd << " " << n;
      const std::string& l = by_flag[n];
      // Switches and optional input paths have no default to show.
      const bool no_default = n == "--dump-maps" || n == "--features" || n == "--checkpoint" ||
                              n == "--scores" || (n == "--landmarks" && cmd == "train") ||
                              (n == "--manifest" && cmd == "eval");
      if (l.find("REQUIRED") == std::string::npos && !no_default) {
        EXPECT_NE(l.find('['), std::string::npos) << cmd << ": " << l;
      }
    }
  }
  int status = -1;
  RunBinary("frobnicate", &status);
  EXPECT_EQ(status, 2);
}

}  // namespace
}  // namespace sfe::cli
