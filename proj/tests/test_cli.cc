#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "sgeit/cli.h"
#include "sgeit/inversion.h"

using namespace sgeit;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sgeit");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / ("sgeit_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string operator()(const std::string& name) const { return (dir / name).string(); }
};

int shell_status(const std::string& cmd) {
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

}  // namespace

TEST_CASE("help and usage errors") {
  const Run top = cli({"--help"});
  CHECK(top.code == 0);
  for (const char* sub : {"precompute", "simulate", "reconstruct", "render", "fixture"})
    CHECK(top.out.find(sub) != std::string::npos);
  const Run pre = cli({"precompute", "--help"});
  CHECK(pre.code == 0);
  for (const char* flag : {"--mesh", "--seeds", "--order", "--zeta-min", "--zeta-max", "--dry-run", "--solver"})
    CHECK(pre.out.find(flag) != std::string::npos);
  CHECK(cli({"precompute", "--no-such-flag"}).code == 2);
  CHECK(cli({}).code == 2);
  CHECK(cli({"render", "--mesh", "/nonexistent.json"}).code == 2);
}

TEST_CASE("installed binary") {
  const std::string bin = SGEIT_CLI_PATH;
  CHECK(shell_status(bin + " --help > /dev/null") == 0);
  CHECK(shell_status(bin + " reconstruct --bogus > /dev/null 2>&1") == 2);
}

TEST_CASE("pipeline") {
  const Workspace ws;
  REQUIRE(cli({"fixture", "--rings", "4", "--sectors", "32", "--out", ws("mesh.json"), "--seeds-out",
               ws("seeds.json")})
              .code == 0);
  REQUIRE(cli({"fixture", "--rings", "8", "--sectors", "64", "--out", ws("fine.json")}).code == 0);
  {
    std::ofstream ph(ws("phantom.json"));
    ph << R"({"background": 1.1, "inclusions": [{"center": [0.4, 0.2], "radius": 0.3, "sigma": 0.25}], "zeta": 100})";
  }

  SUBCASE("dry run reports dimensions") {
    const Run r = cli({"precompute", "--mesh", ws("mesh.json"), "--seeds", ws("seeds.json"), "--dry-run"});
    CHECK(r.code == 0);
    CHECK(r.out.find("N_gamma = 231") != std::string::npos);
  }
  SUBCASE("order two surrogate") {
    const Run r = cli({"precompute", "--mesh", ws("mesh.json"), "--seeds", ws("seeds.json"), "--out", ws("s2.sgs")});
    CHECK(r.code == 0);
    CHECK(r.out.find("N_gamma = 231") != std::string::npos);
    CHECK(load_surrogate(ws("s2.sgs")).indices().size() == 231);
  }
  SUBCASE("order zero surrogate has one basis function") {
    REQUIRE(cli({"precompute", "--mesh", ws("mesh.json"), "--seeds", ws("seeds.json"), "--order", "0", "--out",
                 ws("s0.sgs")})
                .code == 0);
    CHECK(load_surrogate(ws("s0.sgs")).indices().size() == 1);
  }
  SUBCASE("simulate, reconstruct, render") {
    REQUIRE(cli({"precompute", "--mesh", ws("mesh.json"), "--seeds", ws("seeds.json"), "--order", "1", "--out",
                 ws("s1.sgs")})
                .code == 0);
    const Run sim = cli({"simulate", "--mesh", ws("fine.json"), "--phantom", ws("phantom.json"), "--noise-pct",
                         "0.1", "--seed", "3", "--out", ws("data.json")});
    REQUIRE(sim.code == 0);
    const auto data = load_measurements(ws("data.json"));
    CHECK(data.patterns.size() == 7);
    CHECK(data.noise_std > 0.0);

    const Run map = cli({"reconstruct", "--surrogate", ws("s1.sgs"), "--data", ws("data.json"), "--noise-pct",
                         "0.1", "--corr-length", "0.3", "--out", ws("map.json")});
    REQUIRE(map.code == 0);
    const auto mj = nlohmann::json::parse(read(ws("map.json")));
    CHECK(mj.contains("sigma_map"));
    CHECK(mj.contains("zeta_map"));
    CHECK(!mj.contains("sigma_cm"));
    CHECK(!mj.contains("sigma_sd"));

    // Paper-default chain settings, given verbatim.
    const Run full = cli({"reconstruct", "--surrogate", ws("s1.sgs"), "--data", ws("data.json"), "--noise-pct",
                          "0.1", "--corr-length", "0.3", "--burn-in", "50000", "--thin", "5", "--samples",
                          "400000", "--proposal-std", "0.07", "--out", ws("cm.json")});
    REQUIRE(full.code == 0);
    const auto cj = nlohmann::json::parse(read(ws("cm.json")));
    CHECK(cj.at("sigma_cm").size() == 12);
    CHECK(cj.at("diagnostics").at("n") == 400000);

    const Run svg = cli({"render", "--mesh", ws("mesh.json"), "--seeds", ws("seeds.json"), "--estimates",
                         ws("cm.json"), "--field", "sigma_sd", "--out", ws("sd.svg")});
    CHECK(svg.code == 0);
    CHECK(read(ws("sd.svg")).rfind("<svg", 0) == 0);
    CHECK(cli({"render", "--mesh", ws("mesh.json"), "--seeds", ws("seeds.json"), "--estimates", ws("map.json"),
               "--field", "sigma_cm", "--out", ws("x.svg")})
              .code == 2);
  }
  SUBCASE("data with a different electrode count is rejected") {
    REQUIRE(cli({"precompute", "--mesh", ws("mesh.json"), "--seeds", ws("seeds.json"), "--order", "1", "--out",
                 ws("s1.sgs")})
                .code == 0);
    REQUIRE(cli({"fixture", "--rings", "4", "--sectors", "36", "--electrodes", "6", "--out", ws("m6.json")}).code ==
            0);
    REQUIRE(cli({"simulate", "--mesh", ws("m6.json"), "--phantom", ws("phantom.json"), "--noise-std", "0.01",
                 "--out", ws("d6.json")})
                .code == 0);
    const Run r = cli({"reconstruct", "--surrogate", ws("s1.sgs"), "--data", ws("d6.json"), "--out", ws("bad.json")});
    CHECK(r.code != 0);
    CHECK(!r.err.empty());
  }
}
