// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

struct Run {
  int code = -1;
  std::string out;  // stdout and stderr together
};

Run run(const std::string& args) {
  const std::string command = std::string(DROBAS_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(command.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf{};
  while (const auto n = fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in{p, std::ios::binary};
  return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("drobas_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

const std::string small_grid = " --seeds 3 --budget 25 --eps-count 4 --no-timing";
const std::string small_sweep = small_grid + " --workers 2";

TEST_F(CliTest, SolveReportsEpsilonMin) {
  const auto r = run("solve --epsilon 0.5");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("epsilon_min     0.0468808656"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("x_star"), std::string::npos);
  EXPECT_NE(r.out.find("gamma_star"), std::string::npos);
  EXPECT_NE(r.out.find("epsilon_star"), std::string::npos);
}

TEST_F(CliTest, SolveRefusesEpsilonBelowMinimum) {
  const auto r = run("solve --epsilon 0.01");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("below epsilon_min"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("ambiguity set is empty"), std::string::npos) << r.out;
}

TEST_F(CliTest, SolveDispatchesBdro) {
  const auto r = run("solve --method bdro --n-theta 5 --n-xi 5 --record " + path("rec.json"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("bdro (N_theta = 5, N_xi = 5)"), std::string::npos) << r.out;
  EXPECT_NE(slurp(path("rec.json")).find("\"gammas\""), std::string::npos);
}

TEST_F(CliTest, SolveReadsDataFile) {
  std::ofstream{path("data.txt")} << "# demand\n1.5, 2.0\n0.5\n3\n";
  const auto r = run("solve --model exp-gamma --data " + path("data.txt") + " --epsilon eps-star");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("plug-in from data"), std::string::npos) << r.out;
  std::ofstream{path("bad.txt")} << "1.0 abc\n";
  EXPECT_EQ(run("solve --data " + path("bad.txt")).code, 2);
  EXPECT_EQ(run("solve --data " + path("missing.txt")).code, 3);
}

TEST_F(CliTest, SweepWritesBothCsvsAndResumes) {
  const auto out = path("sweep");
  const auto first = run("sweep --out " + out + small_sweep);
  ASSERT_EQ(first.code, 0) << first.out;
  const auto results = slurp(fs::path{out} / "results.csv");
  const auto aggregate = slurp(fs::path{out} / "aggregate.csv");
  EXPECT_EQ(results.rfind("method,seed,epsilon,N,x_star,oos_mean,oos_var,solve_seconds,status\n", 0), 0u);
  EXPECT_EQ(aggregate.rfind("method,epsilon,N,m,v\n", 0), 0u);
  EXPECT_EQ(std::count(results.begin(), results.end(), '\n'), 1 + 2 * 3 * 4);

  const auto second = run("sweep --out " + out + small_sweep);
  EXPECT_EQ(second.code, 0);
  EXPECT_NE(second.out.find("computed        0"), std::string::npos) << second.out;
  EXPECT_EQ(slurp(fs::path{out} / "results.csv"), results);
  EXPECT_EQ(slurp(fs::path{out} / "aggregate.csv"), aggregate);
}

TEST_F(CliTest, SweepIsByteReproducible) {
  ASSERT_EQ(run("sweep --out " + path("a") + small_sweep).code, 0);
  ASSERT_EQ(run("sweep --out " + path("b") + small_grid + " --workers 1").code, 0);
  EXPECT_EQ(slurp(path("a") + "/results.csv"), slurp(path("b") + "/results.csv"));
  EXPECT_EQ(slurp(path("a") + "/aggregate.csv"), slurp(path("b") + "/aggregate.csv"));
}

TEST_F(CliTest, SweepRecoversFromTornCheckpoint) {
  ASSERT_EQ(run("sweep --out " + path("full") + small_sweep).code, 0);
  const auto full = slurp(path("full") + "/results.csv");
  fs::create_directories(path("torn"));
  fs::copy_file(path("full") + "/manifest.json", path("torn") + "/manifest.json");
  // Keep the header, five rows and half of the sixth.
  std::size_t cut = 0;
  for (int i = 0; i < 6; ++i) cut = full.find('\n', cut) + 1;
  std::ofstream{path("torn") + "/results.csv", std::ios::binary} << full.substr(0, cut + 20);
  const auto r = run("sweep --out " + path("torn") + small_sweep);
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("reused          5"), std::string::npos) << r.out;
  EXPECT_EQ(slurp(path("torn") + "/results.csv"), full);
}

TEST_F(CliTest, SweepRejectsMismatchedOutputAndBadConfig) {
  ASSERT_EQ(run("sweep --out " + path("s") + small_sweep).code, 0);
  const auto mismatch = run("sweep --out " + path("s") + small_sweep + " --b 5");
  EXPECT_EQ(mismatch.code, 2);
  EXPECT_NE(mismatch.out.find("different configuration"), std::string::npos);

  std::ofstream{path("bad.json")} << R"({"seeds": 3, "sedes": 4})";
  const auto unknown = run("sweep --config " + path("bad.json") + " --out " + path("t"));
  EXPECT_EQ(unknown.code, 2);
  EXPECT_NE(unknown.out.find("unknown option 'sedes'"), std::string::npos) << unknown.out;

  std::ofstream{path("broken.json")} << R"({"seeds": )";
  EXPECT_EQ(run("sweep --config " + path("broken.json") + " --out " + path("t")).code, 2);
  EXPECT_EQ(run("sweep --budget 24 --out " + path("t")).code, 2);
  EXPECT_EQ(run("sweep --epsilon-grid 1,0.5 --out " + path("t")).code, 2);
  EXPECT_EQ(run("sweep --method nope").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
  std::ofstream{path("cfg.json")} << R"({"seeds": 2, "budget": [25], "eps-count": 2, "no-timing": true, "method": "bdro"})";
  const auto r = run("sweep --config " + path("cfg.json") + " --seeds 3 --out " + path("o"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto results = slurp(path("o") + "/results.csv");
  EXPECT_EQ(std::count(results.begin(), results.end(), '\n'), 1 + 3 * 2);
  EXPECT_EQ(results.find("dro-bas"), std::string::npos);
}

TEST_F(CliTest, AggregateSubcommandMatchesSweepOutput) {
  ASSERT_EQ(run("sweep --out " + path("s") + small_sweep).code, 0);
  const auto r = run("aggregate --in " + path("s") + "/results.csv --out " + path("agg.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(slurp(path("agg.csv")), slurp(path("s") + "/aggregate.csv"));
}

TEST_F(CliTest, VerifyQuickPassesAndCanaryFails) {
  const auto ok = run("verify --quick");
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_NE(ok.out.find("all checks passed"), std::string::npos);
  const auto bad = run("verify --quick --flip-exp-gamma-gap");
  EXPECT_EQ(bad.code, 4);
  EXPECT_NE(bad.out.find("FAIL  identity residual (exp-gamma)"), std::string::npos) << bad.out;
}

}  // namespace
