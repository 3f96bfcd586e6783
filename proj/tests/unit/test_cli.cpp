#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>
#include <json.hpp>

namespace {

namespace fs = std::filesystem;

int run_cli(const std::string& args) {
  std::string cmd = std::string(AQUAD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "aquad_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

TEST(Cli, UnknownSubcommandIsConfigError) { EXPECT_EQ(run_cli("frobnicate"), 2); }

TEST(Cli, MissingSeedIsConfigError) { EXPECT_EQ(run_cli("gen-rv --planets 1 -o /tmp/x.csv"), 2); }

TEST(Cli, MalformedConfigIsConfigError) {
  auto cfg = scratch("bad.json");
  std::ofstream(cfg) << "{\"T\": \"many\"}";
  EXPECT_EQ(run_cli("run --target banana -c " + cfg.string() + " --seed 1"), 2);
}

TEST(Cli, MissingTruthIsConfigError) {
  auto cfg = scratch("exp.json");
  std::ofstream(cfg) << R"({"methods":["is-uniform"],"E":[10],"seeds":1,"seed":1,"truth":"/nonexistent.json"})";
  EXPECT_EQ(run_cli("benchmark -c " + cfg.string() + " --seed 1"), 2);
}

TEST(Cli, CoincidentNodesAreNumericFailure) {
  auto nodes = scratch("dup.csv");
  std::ofstream(nodes) << "x0,x1\n0,0\n0,0\n1,1\n";
  EXPECT_EQ(run_cli("tune --target banana --nodes " + nodes.string()), 3);
}

TEST(Cli, RunWritesReport) {
  auto cfg = scratch("ok.json");
  auto rep = scratch("report.json");
  std::ofstream(cfg) << R"({"n0":5,"T":3,"kernel":{"type":"nn"},"M":1000,
    "search":{"starts":16,"perturbations":4,"refine_top":1,"refine_steps":10}})";
  ASSERT_EQ(run_cli("run --target banana -c " + cfg.string() + " --seed 3 --report " + rep.string()), 0);
  std::ifstream in(rep);
  auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("eval_count").get<int>(), 8);
}

TEST(Cli, GenRvRoundTrips) {
  auto out = scratch("rv.csv");
  ASSERT_EQ(run_cli("gen-rv --planets 2 --seed 5 -o " + out.string()), 0);
  std::ifstream in(out);
  std::string header;
  std::getline(in, header);
  int rows = 0;
  for (std::string l; std::getline(in, l);) ++rows;
  EXPECT_EQ(rows, 60);
}

}  // namespace
