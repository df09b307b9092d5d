#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Invocation {
  int code = -1;
  std::string out;
};

Invocation run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" QESFORGE_BIN "\" " + args + " 2>/dev/null";
  Invocation r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.out += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string problem(const std::string& name) {
  return "\"" + std::string(QESFORGE_SOURCE_DIR) + "/problems/" + name + "\"";
}

fs::path scratch() {
  const fs::path p = fs::temp_directory_path() / "qesforge-cli-test";
  fs::create_directories(p);
  return p;
}

json read(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, CatalogListAndShow) {
  const Invocation list = run("catalog list");
  EXPECT_EQ(list.code, 0);
  EXPECT_NE(list.out.find("kuliy-tkachuk"), std::string::npos);
  const fs::path f = scratch() / "show.json";
  EXPECT_EQ(run("catalog show flagship --out \"" + f.string() + "\"").code, 0);
  EXPECT_EQ(read(f).at("id"), "flagship");
  EXPECT_EQ(run("catalog show nothing-here").code, 2);
}

TEST(Cli, CatalogVerifyAll) { EXPECT_EQ(run("catalog verify --all").code, 0); }

TEST(Cli, TamperedFixtureFailsVerification) {
  const fs::path dir = scratch() / "tampered";
  fs::create_directories(dir);
  json j = read(fs::path(QESFORGE_SOURCE_DIR) / "fixtures" / "kuliy-tkachuk.json");
  j["states"][2]["energy"] = json::array({2.6, 0.0});
  std::ofstream(dir / "kuliy-tkachuk.json") << j.dump();
  EXPECT_EQ(run("verify kuliy-tkachuk", "QESFORGE_FIXTURES=\"" + dir.string() + "\"").code, 4);
  EXPECT_EQ(run("verify kuliy-tkachuk").code, 0);
}

TEST(Cli, BuildPinnedProblem) {
  const Invocation r = run("build " + problem("flagship-pinned.json"));
  ASSERT_EQ(r.code, 0);
  const json j = json::parse(r.out);
  EXPECT_TRUE(j.contains("potential"));
}

TEST(Cli, ValidationErrors) {
  EXPECT_EQ(run("build " + problem("malformed.json")).code, 2);
  EXPECT_EQ(run("solve " + problem("no-such-file.json")).code, 2);
  EXPECT_EQ(run("solve " + problem("flagship-pinned.json")).code, 2);
  EXPECT_EQ(run("solve " + problem("kt-search.json") + " --starts 0").code, 2);
  EXPECT_EQ(run("").code, 2);
}

TEST(Cli, InfeasibleProblemDoesNotConverge) {
  EXPECT_EQ(run("solve " + problem("infeasible-four-state.json")).code, 3);
}

TEST(Cli, SolveIsReproducibleAndVerifies) {
  const fs::path a = scratch() / "a.json", b = scratch() / "b.json", c = scratch() / "c.json";
  const std::string base = "solve " + problem("kt-search.json") + " --starts 60 --seed 7 ";
  ASSERT_EQ(run(base + "--out \"" + a.string() + "\"").code, 0);
  ASSERT_EQ(run(base + "--out \"" + b.string() + "\"").code, 0);
  ASSERT_EQ(run(base + "--jobs 2 --out \"" + c.string() + "\"").code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_EQ(read(a).at("solutions"), read(c).at("solutions"));
  EXPECT_FALSE(read(a).at("solutions").empty());
  EXPECT_EQ(run("verify \"" + a.string() + "\"").code, 0);
}

TEST(Cli, SusyFromParabola) {
  const Invocation tuned = run("susy --u \"c*x^2\" --energies 0,1,2");
  ASSERT_EQ(tuned.code, 0);
  EXPECT_TRUE(json::parse(tuned.out).at("physical").get<bool>());
  const Invocation steep = run("susy --u \"3*x^2\" --energies 0,3,4");
  ASSERT_EQ(steep.code, 0);
  EXPECT_FALSE(json::parse(steep.out).at("physical").get<bool>());
  EXPECT_EQ(run("susy --u \"x^2\" --energies 0,1,2 --grid -2,2,41").code, 5);
}

TEST(Cli, SusyOfEntry) {
  const Invocation r = run("susy flagship");
  ASSERT_EQ(r.code, 0);
  const json j = json::parse(r.out);
  EXPECT_FALSE(j.at("classification").at("admissible").get<bool>());
}
