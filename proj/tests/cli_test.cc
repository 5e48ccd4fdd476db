#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "lmh/io.h"
#include "zoo.h"

namespace lmh {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("lmh_cli_test_") +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the CLI with `args`; returns its exit status.
  int run(const std::string& args) const {
    const std::string command = std::string(LMH_CLI_PATH) + " " + args + " > " +
                                (dir_ / "stdout.txt").string() + " 2> " +
                                (dir_ / "stderr.txt").string();
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string output() const { return read_text(dir_ / "stdout.txt"); }
  std::string errors() const { return read_text(dir_ / "stderr.txt"); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, PipelineComposesThroughFiles) {
  write_text(dir_ / "gen.json",
             R"({"model": {"generator": "ising", "rows": 3, "cols": 3, "coupling": 0.4,
                 "field": 0.1, "field_spread": 0.05, "field_seed": 4}})");
  ASSERT_EQ(run("generate --config " + path("gen.json") + " --out " + path("model.json")), 0)
      << errors();
  EXPECT_EQ(read_model(dir_ / "model.json").num_variables(), 9);

  ASSERT_EQ(run("symmetrize --model " + path("model.json") + " --out " + path("sym") +
                " --osa zero-unary"),
            0)
      << errors();
  EXPECT_FALSE(read_groups(dir_ / "sym" / "groups.json").empty());

  write_marginals_csv(dir_ / "truth.csv", enumerate_exact_marginals(read_model(dir_ / "model.json")));
  ASSERT_EQ(run("sample --model " + path("model.json") + " --groups " + path("sym/groups.json") +
                " --truth " + path("truth.csv") + " --method lmh --seeds 1,2 --iterations 20000 " +
                "--out " + path("samples")),
            0)
      << errors();
  EXPECT_TRUE(fs::exists(dir_ / "samples" / "trace_lmh_chain1.csv"));
  EXPECT_NE(output().find("acceptance"), std::string::npos);

  ASSERT_EQ(run("evaluate --truth " + path("truth.csv") + " --estimate " +
                path("samples/marginals_lmh_chain0.csv")),
            0)
      << errors();
  EXPECT_NE(output().find("estimate,avg_kl,epsilon"), std::string::npos);
}

TEST_F(CliTest, SampleWithoutGroupsEqualsGibbs) {
  write_model(dir_ / "model.json", testing::random_binary(6, 21));
  ASSERT_EQ(run("sample --model " + path("model.json") +
                " --method gibbs --seeds 3 --iterations 5000 --out " + path("g")),
            0);
  ASSERT_EQ(run("sample --model " + path("model.json") +
                " --method lifted-mcmc --seeds 3 --iterations 5000 --out " + path("l")),
            0);
  EXPECT_EQ(read_text(dir_ / "g" / "marginals_gibbs_chain0.csv"),
            read_text(dir_ / "l" / "marginals_lifted-mcmc_chain0.csv"));
}

TEST_F(CliTest, RunWritesExperiment) {
  write_text(dir_ / "config.json", R"({
    "model": {"generator": "ising", "rows": 2, "cols": 3, "coupling": 0.3, "field": 0.2},
    "schedule": {"iterations": 2000},
    "seeds": [1]
  })");
  ASSERT_EQ(run("run --config " + path("config.json") + " --out " + path("out") +
                " --method gibbs,lmh --alpha 0.5 --iterations 3000 --seeds 4,5"),
            0)
      << errors();
  EXPECT_TRUE(fs::exists(dir_ / "out" / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "trace_lmh_chain1.csv"));
  EXPECT_NE(output().find("truth: exact"), std::string::npos);
}

TEST_F(CliTest, InvalidConfigFailsCleanly) {
  write_text(dir_ / "config.json", R"({"model": {"generator": "ising", "rows": 2, "cols": 2},
                                      "schedule": {"iterations": 100}, "seeds": [1],
                                      "methods": ["mcsat"]})");
  EXPECT_NE(run("run --config " + path("config.json") + " --out " + path("out")), 0);
  EXPECT_FALSE(errors().empty());
  EXPECT_FALSE(fs::exists(dir_ / "out") && !fs::is_empty(dir_ / "out"));
  EXPECT_NE(run("sample --model " + path("missing.json") + " --out " + path("o")), 0);
  EXPECT_NE(run("frobnicate"), 0);
}

}  // namespace
}  // namespace lmh
