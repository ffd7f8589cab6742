#include <qkd/keystore.hpp>
#include <qkd/report.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path& work() {
  static const fs::path d = [] {
    auto p = fs::temp_directory_path() / "qkd_cli_test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return d;
}

int run(const std::string& args) {
  const std::string cmd = std::string(QKD_DISTILL_BIN) + " " + args + " > " + (work() / "out.txt").string() + " 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string p(const char* name) { return (work() / name).string(); }

const std::string& key_file() {
  static const std::string k = [] {
    const auto path = p("k.qkdk");
    EXPECT_EQ(run("run --protocol bb84 --input-bits 120000 --qber 0.02 --pa-block 200000 -q --key " + path +
                  " --metrics " + p("m.csv")),
              0);
    return path;
  }();
  return k;
}

}  // namespace

TEST(Cli, RunWritesKeyAndMetrics) {
  const auto kf = qkd::read_key_file(key_file());
  EXPECT_GT(kf.bits.size(), 0u);
  EXPECT_NE(kf.metadata.find("\"metrics\""), std::string::npos);
  const auto rows = qkd::report::read_csv(p("m.csv"));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].key_bits, kf.bits.size());
  EXPECT_EQ(rows[0].input_bits, 120000u);
}

TEST(Cli, EncryptDecryptRoundTrip) {
  fs::remove(key_file() + ".ledger");
  {
    std::ofstream f(p("plain.bin"), std::ios::binary);
    for (int i = 0; i < 5000; ++i) f.put(static_cast<char>(i * 31));
  }
  ASSERT_EQ(run("encrypt --key " + key_file() + " --in " + p("plain.bin") + " --out " + p("c.qkde")), 0);
  ASSERT_EQ(run("decrypt --key " + key_file() + " --in " + p("c.qkde") + " --out " + p("back.bin") + " --constant-time"),
            0);
  std::ifstream a(p("plain.bin"), std::ios::binary), b(p("back.bin"), std::ios::binary);
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}), std::string(std::istreambuf_iterator<char>(b), {}));
  EXPECT_TRUE(fs::exists(key_file() + ".ledger"));
}

TEST(Cli, KeyExhaustionExitsFour) {
  qkd::KeyFile k;
  k.bits = qkd::BitBlock(100);
  qkd::write_key_file(p("tiny.qkdk"), k);
  std::ofstream(p("msg.txt")) << "hello";
  EXPECT_EQ(run("encrypt --key " + p("tiny.qkdk") + " --in " + p("msg.txt") + " --out " + p("x.qkde")), 4);
}

TEST(Cli, ConfigAndUsageErrorsExitTwo) {
  EXPECT_EQ(run("run --bogus-flag"), 2);
  EXPECT_EQ(run("run --config /nonexistent/config.json"), 2);
  EXPECT_EQ(run("run --protocol e91 --input-bits 1000"), 2);
  EXPECT_EQ(run("run --protocol bb84 --input-bits 1000 --qber 0.9"), 2);
  EXPECT_EQ(run("report " + p("missing.csv")), 2);
}

TEST(Cli, SessionAbortExitsThreeAndStillWritesMetrics) {
  fs::remove(p("abort.csv"));
  EXPECT_EQ(run("run --protocol bb84 --input-bits 60000 --qber 0.3 -q --metrics " + p("abort.csv")), 3);
  const auto rows = qkd::report::read_csv(p("abort.csv"));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].key_bits, 0u);
}

TEST(Cli, SimulateThenDistillSavedSession) {
  ASSERT_EQ(run("simulate --protocol cow --pulses 400000 --qber 0.02 --emit-session " + p("s.qkds")), 0);
  EXPECT_EQ(run("run --session " + p("s.qkds") + " --input-bits 60000 --pa-block 100000 -q"), 0);
}

TEST(Cli, ReportMergesCsvFiles) {
  key_file();
  ASSERT_EQ(run("report " + p("m.csv") + " " + p("m.csv") + " --csv " + p("merged.csv")), 0);
  EXPECT_EQ(qkd::report::read_csv(p("merged.csv")).size(), 2u);
}
