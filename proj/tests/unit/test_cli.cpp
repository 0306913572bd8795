#include <gtest/gtest.h>

#include <sstream>

#include "cli.hpp"
#include "dgfl/config.hpp"
#include "dgfl/metrics.hpp"
#include "dgfl/tudata.hpp"
#include "support/temp_dir.hpp"

using namespace dgfl;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "dgfl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

const std::string kSmall = R"(rounds = 3
seed = 2
[data]
n_clients = 3
test_fraction = 0.2
[synthetic]
family_a_count = 25
family_a_nodes = 8
family_b_count = 25
family_b_nodes = 8
[model]
hidden = 8
layers = 1
[train]
local_epochs = 1
batch_size = 32
)";

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  const Result help = invoke({"--help"});
  EXPECT_EQ(help.code, cli::kExitOk);
  EXPECT_NE(help.out.find("inspect"), std::string::npos);
  EXPECT_EQ(invoke({}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"run"}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"run", "--config", "/nonexistent.toml"}).code, cli::kExitUsage);
}

TEST(Cli, RunWritesOutputs) {
  dgfl::testing::TempDir dir;
  dir.write("c.toml", kSmall);
  const Result r = invoke({"run", "--config", (dir / "c.toml").string(), "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("method dgfl"), std::string::npos);
  EXPECT_NE(r.err.find("round 3/3"), std::string::npos);
  const std::string csv = dgfl::testing::read_file(dir / "out" / "metrics.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 3 * 3);
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "summary.json"));
  const ExperimentConfig saved = load_config(dir / "out" / "config.toml");
  EXPECT_EQ(saved.output_dir, (dir / "out").string());
  EXPECT_EQ(saved.rounds, 3);
}

TEST(Cli, SeedOverrideChangesRun) {
  dgfl::testing::TempDir dir;
  dir.write("c.toml", kSmall);
  ASSERT_EQ(invoke({"run", "--config", (dir / "c.toml").string(), "--out", (dir / "a").string()}).code, 0);
  ASSERT_EQ(invoke({"run", "--config", (dir / "c.toml").string(), "--out", (dir / "b").string()}).code, 0);
  ASSERT_EQ(invoke({"run", "--config", (dir / "c.toml").string(), "--out", (dir / "c").string(), "--seed", "9"}).code, 0);
  EXPECT_EQ(dgfl::testing::read_file(dir / "a" / "metrics.csv"), dgfl::testing::read_file(dir / "b" / "metrics.csv"));
  EXPECT_NE(dgfl::testing::read_file(dir / "a" / "metrics.csv"), dgfl::testing::read_file(dir / "c" / "metrics.csv"));
}

TEST(Cli, RuntimeErrorsExitTwo) {
  dgfl::testing::TempDir dir;
  dir.write("bad.toml", "rounds = -3\n");
  const Result r = invoke({"run", "--config", (dir / "bad.toml").string()});
  EXPECT_EQ(r.code, cli::kExitRuntime);
  EXPECT_NE(r.err.find("error: rounds"), std::string::npos);
  EXPECT_EQ(invoke({"inspect", "--data", (dir / "none").string(), "--name", "X"}).code, cli::kExitRuntime);
}

TEST(Cli, GenSynthThenInspect) {
  dgfl::testing::TempDir dir;
  dir.write("c.toml", kSmall);
  const Result gen = invoke({"gen-synth", "--spec", (dir / "c.toml").string(), "--out", (dir / "synth").string()});
  ASSERT_EQ(gen.code, 0) << gen.err;
  const GraphDataset expected = gen_synthetic(load_config(dir / "c.toml").synthetic, 2);
  const Result info = invoke({"inspect", "--data", (dir / "synth").string(), "--name", expected.name});
  ASSERT_EQ(info.code, 0) << info.err;
  EXPECT_NE(info.out.find("graphs       50\n"), std::string::npos) << info.out;
  EXPECT_NE(info.out.find("classes      2\n"), std::string::npos) << info.out;
}

TEST(Cli, InspectMutag) {
  const Result r = invoke({"inspect", "--data", std::string(DGFL_TEST_DATA_DIR) + "/MUTAG", "--name", "MUTAG"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("graphs       188\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("avg_nodes    17.93\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("avg_edges    19.79\n"), std::string::npos) << r.out;
}

TEST(Cli, CompareRunsMethodsOnSharedSetup) {
  dgfl::testing::TempDir dir;
  dir.write("dgfl.toml", kSmall);
  dir.write("fedavg.toml", "method = \"fedavg\"\n" + kSmall);
  dir.write("fedavg2.toml", "method = \"fedavg\"\n" + kSmall);
  const Result r = invoke({"compare", "--configs", (dir / "dgfl.toml").string(), (dir / "fedavg.toml").string(),
                        (dir / "fedavg2.toml").string(), "--out", (dir / "cmp").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("fedavg-fedavg2"), std::string::npos);
  const std::string csv = dgfl::testing::read_file(dir / "cmp" / "compare.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), std::string("method,") + kMetricsHeader);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 3 * 3 * 3);
  EXPECT_EQ(dgfl::testing::read_file(dir / "cmp" / "fedavg" / "metrics.csv"),
            dgfl::testing::read_file(dir / "cmp" / "fedavg-fedavg2" / "metrics.csv"));

  dir.write("other.toml", "seed = 5\n" + kSmall.substr(kSmall.find("[data]")));
  EXPECT_EQ(invoke({"compare", "--configs", (dir / "dgfl.toml").string(), (dir / "other.toml").string()}).code,
            cli::kExitRuntime);
}
