// Drives the command-line tool through a full crash round trip and checks
// its exit codes.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "deltapad/collector.h"
#include "deltapad/progmodel.h"

namespace fs = std::filesystem;

namespace {

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("deltapad_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Exit status of the tool with `args`; stdout goes to dir_/stdout.txt.
  int Run(const std::string& args) {
    const std::string cmd = std::string(DELTAPAD_CLI) + " " + args + " > " +
                            (dir_ / "stdout.txt").string() + " 2> " +
                            (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string Out() { return Slurp(dir_ / "stdout.txt"); }
  std::string P(const std::string& rel) { return (dir_ / rel).string(); }

  // gen, build, diversify, delta and crash for program 0.
  void Pipeline(const std::string& key_arg) {
    ASSERT_EQ(Run("gen --seed 7 --n 2 --out " + P("corpus")), 0);
    const std::string model = P("corpus/prog_000.model");
    ASSERT_TRUE(fs::exists(model));
    ASSERT_EQ(Run("build --model " + model + " --out " + P("def")), 0);
    ASSERT_EQ(Run("diversify --model " + model + " --seeds 1,2,3 --out " + P("div")), 0);
    ASSERT_EQ(Run("delta --default-sym " + P("def/symbols.sym") + " --opplog " +
                  P("def/opportunity.log") + " --div-sym " + P("div/symbols.sym") +
                  " --seeds 1,2,3 --out " + P("dd.dbpd") + key_arg + " --embed " +
                  P("div/image.dimg")),
              0);
    const deltapad::ProgramModel m = deltapad::ParseModel(Slurp(model));
    chain_ = deltapad::FormatChain(deltapad::RandomChain(m, 3, 5));
    ASSERT_EQ(Run("crash --image " + P("div/image.dimg") + " --model " + model +
                  " --chain " + chain_ + " --out " + P("crash.dmp")),
              0);
  }
  std::string ReportArgs(const std::string& delta) {
    return "report --dump " + P("crash.dmp") + " --delta " + delta + " --default-sym " +
           P("def/symbols.sym") + " --opplog " + P("def/opportunity.log");
  }

  fs::path dir_;
  std::string chain_;
};

TEST_F(CliTest, CrashRoundTripWithKey) {
  Pipeline(" --key 00ff00ff");
  ASSERT_EQ(Run(ReportArgs(P("dd.dbpd")) + " --key 00ff00ff"), 0);
  const std::string trace = Out();
  EXPECT_NE(trace.find("#0 "), std::string::npos) << trace;
  EXPECT_NE(trace.find("stop: "), std::string::npos) << trace;
  // The Δdata embedded in the image gives the same trace.
  ASSERT_EQ(Run(ReportArgs(P("div/image.dimg")) + " --key 00ff00ff"), 0);
  EXPECT_EQ(Out(), trace);
}

TEST_F(CliTest, AuthenticationFailuresExitWithThree) {
  Pipeline(" --key 00ff00ff");
  EXPECT_EQ(Run(ReportArgs(P("dd.dbpd")) + " --key 01ff00ff"), 3);
  EXPECT_EQ(Run(ReportArgs(P("dd.dbpd"))), 3);
}

TEST_F(CliTest, CorruptPatchExitsWithFour) {
  Pipeline("");
  // A Δdata built against program 1 does not fit program 0's default file.
  const std::string other = P("corpus/prog_001.model");
  ASSERT_EQ(Run("build --model " + other + " --out " + P("def1")), 0);
  ASSERT_EQ(Run("diversify --model " + other + " --seeds 1,2,3 --out " + P("div1")), 0);
  ASSERT_EQ(Run("delta --default-sym " + P("def1/symbols.sym") + " --opplog " +
                P("def1/opportunity.log") + " --div-sym " + P("div1/symbols.sym") +
                " --seeds 1,2,3 --out " + P("foreign.dbpd")),
            0);
  EXPECT_EQ(Run(ReportArgs(P("foreign.dbpd"))), 4);
}

TEST_F(CliTest, InputErrorsExitWithTwo) {
  EXPECT_EQ(Run(""), 2);
  EXPECT_EQ(Run("frobnicate"), 2);
  EXPECT_EQ(Run("build --model " + P("missing.model") + " --out " + P("x")), 2);
  EXPECT_EQ(Run("gen --seed 1 --n 1 --class huge --out " + P("c")), 2);
  EXPECT_EQ(Run("--help"), 0);
}

TEST_F(CliTest, MetricsWritesAReport) {
  ASSERT_EQ(Run("gen --seed 9 --n 2 --out " + P("corpus")), 0);
  std::ofstream(P("seeds.txt")) << "# two tuples\n1,2,3\n4,5,6\n";
  ASSERT_EQ(Run("metrics --corpus " + P("corpus") + " --seeds-file " + P("seeds.txt") +
                " --out " + P("metrics.txt")),
            0);
  const std::string report = Slurp(P("metrics.txt"));
  EXPECT_NE(report.find("prog_000"), std::string::npos) << report;
  EXPECT_NE(report.find("prog_001"), std::string::npos) << report;
}

}  // namespace
