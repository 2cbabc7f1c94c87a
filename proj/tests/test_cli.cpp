#include <gtest/gtest.h>
#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "drowsy/mesh.hpp"
#include "drowsy/synth.hpp"

namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("drowsy_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  Outcome drowsy(const std::string& args, const std::string& stdin_file = "") const {
    std::string cmd = "cd '" + dir_.string() + "' && '" DROWSY_CLI_PATH "' " + args;
    cmd += stdin_file.empty() ? " < /dev/null" : " < '" + stdin_file + "'";
    cmd += " > out.txt 2> err.txt";
    const int status = std::system(cmd.c_str());
    Outcome o;
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    o.out = slurp(path("out.txt"));
    o.err = slurp(path("err.txt"));
    return o;
  }

  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  fs::path dir_;
};

TEST_F(Cli, RunOnStdin) {
  ASSERT_EQ(drowsy("gen --out s.jsonl").code, 0);
  const Outcome o = drowsy("run --source stdin --fast --alert none", path("s.jsonl").string());
  EXPECT_EQ(o.code, 0) << o.err;
  std::istringstream lines(o.out);
  std::string line;
  int onsets = 0, total = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    onsets += j.at("type") == "drowsy_onset";
    ++total;
  }
  EXPECT_EQ(onsets, 1);
  EXPECT_GT(total, 3);
  EXPECT_EQ(nlohmann::json::parse(o.err).at("frames").get<int>(), 500);
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(drowsy("run --source tcp:127.0.0.1:99999 --fast").code, 2);
  EXPECT_EQ(drowsy("run --source carrier-pigeon").code, 2);
  EXPECT_EQ(drowsy("run --ear-threshold 1.5 --fast").code, 2);
  EXPECT_EQ(drowsy("run --ear-threshold 0.3 --ear-open-threshold 0.28 --fast").code, 2);
  EXPECT_EQ(drowsy("run --alert siren --fast").code, 2);
  EXPECT_EQ(drowsy("replay missing.jsonl --fast").code, 2);
  EXPECT_EQ(drowsy("").code, 2);
  EXPECT_EQ(drowsy("frobnicate").code, 2);
  EXPECT_EQ(drowsy("eval only-one.jsonl").code, 2);
  write("bad.json", R"({"duration_ms":1000,"wobble":1})");
  EXPECT_EQ(drowsy("gen bad.json --out s.jsonl").code, 2);
}

TEST_F(Cli, CorruptStreamExitsOneWithLineNumber) {
  std::string text;
  for (int i = 0; i < 3; ++i) text += drowsy::serialize_frame(drowsy::MeshFrame::without_face(i * 40, 640, 480)) + "\n";
  for (int i = 0; i < 4; ++i) text += "{not json\n";
  write("bad.jsonl", text);
  const Outcome o = drowsy("replay bad.jsonl --fast --bad-line-budget 2");
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("line 6"), std::string::npos) << o.err;
  EXPECT_EQ(drowsy("replay bad.jsonl --fast --bad-line-budget 4").code, 0);
}

TEST_F(Cli, GenThenEvalIsPerfectWithoutNoise) {
  ASSERT_EQ(drowsy("gen --out a.jsonl --labels a.json").code, 0);
  drowsy::Scenario sc = drowsy::make_corpus_scenario(4, 60000, 2, 0.0);
  write("sc.json", drowsy::scenario_to_json(sc));
  const Outcome g = drowsy("gen sc.json --out b.jsonl");
  ASSERT_EQ(g.code, 0) << g.err;
  EXPECT_EQ(nlohmann::json::parse(g.out).at("frames").get<int>(), 1500);
  const Outcome o = drowsy("eval a.jsonl a.json b.jsonl b.jsonl.labels.json --report r.json");
  ASSERT_EQ(o.code, 0) << o.err;
  const auto r = nlohmann::json::parse(slurp(path("r.json")));
  EXPECT_EQ(r.at("pooled").at("drowsy_recall").get<double>(), 1.0);
  EXPECT_EQ(r.at("pooled").at("false_alerts").get<int>(), 0);
  EXPECT_EQ(r.at("sessions").size(), 2u);
  EXPECT_NE(o.out.find("macro recall 1.000"), std::string::npos) << o.out;
}

TEST_F(Cli, GenOverridesSeedAndNoise) {
  ASSERT_EQ(drowsy("gen --out a.jsonl --seed 5 --noise-sigma 0.02").code, 0);
  ASSERT_EQ(drowsy("gen --out b.jsonl --seed 5 --noise-sigma 0.02").code, 0);
  ASSERT_EQ(drowsy("gen --out c.jsonl --seed 6 --noise-sigma 0.02").code, 0);
  EXPECT_EQ(slurp(path("a.jsonl")), slurp(path("b.jsonl")));
  EXPECT_NE(slurp(path("a.jsonl")), slurp(path("c.jsonl")));
}

TEST_F(Cli, BenchWithNoFrames) {
  const Outcome o = drowsy("bench --frames 0");
  EXPECT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(nlohmann::json::parse(o.out).at("frames").get<int>(), 0);
}

TEST_F(Cli, BenchReportsThroughput) {
  const Outcome o = drowsy("bench --frames 2000 --seed 3");
  ASSERT_EQ(o.code, 0) << o.err;
  const auto j = nlohmann::json::parse(o.out);
  EXPECT_EQ(j.at("frames").get<int>(), 2000);
  EXPECT_GT(j.at("frames_per_second").get<double>(), 0.0);
}

TEST_F(Cli, PrintConfigPrecedence) {
  write("d.conf", "# tuned\nconsec_frames = 30\near_close_threshold = 0.22\n");
  const Outcome file_only = drowsy("run --config d.conf --print-config");
  ASSERT_EQ(file_only.code, 0) << file_only.err;
  EXPECT_NE(file_only.out.find("consec_frames = 30\n"), std::string::npos);
  EXPECT_NE(file_only.out.find("ear_close_threshold = 0.22\n"), std::string::npos);
  const Outcome flag = drowsy("run --config d.conf --consec-frames 12 --print-config");
  EXPECT_NE(flag.out.find("consec_frames = 12\n"), std::string::npos);
  EXPECT_NE(flag.out.find("ear_close_threshold = 0.22\n"), std::string::npos);
  const Outcome defaults = drowsy("bench --print-config");
  EXPECT_NE(defaults.out.find("consec_frames = 20\n"), std::string::npos);
  write("broken.conf", "consec_frames == 3\n");
  EXPECT_EQ(drowsy("run --config broken.conf --print-config").code, 2);
  EXPECT_EQ(drowsy("run --config nowhere.conf --print-config").code, 2);
}

TEST_F(Cli, ReplayMatchesRun) {
  ASSERT_EQ(drowsy("gen --out s.jsonl --noise-sigma 0.01").code, 0);
  const Outcome a = drowsy("replay s.jsonl --fast --alert none");
  const Outcome b = drowsy("run --source file:s.jsonl --fast --alert none");
  const Outcome c = drowsy("run --source stdin --fast --alert none", path("s.jsonl").string());
  ASSERT_EQ(a.code, 0);
  EXPECT_FALSE(a.out.empty());
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, c.out);
}

TEST_F(Cli, ExecAlertRunsCommand) {
  ASSERT_EQ(drowsy("gen --out s.jsonl").code, 0);
  const Outcome o = drowsy("replay s.jsonl --fast --alert 'exec:cat >> alarms.txt'");
  ASSERT_EQ(o.code, 0) << o.err;
  std::istringstream lines(slurp(path("alarms.txt")));
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    EXPECT_EQ(nlohmann::json::parse(line).at("type"), "drowsy_onset");
    ++n;
  }
  EXPECT_EQ(n, 1);
}

}  // namespace
