#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace hoopnet::cli;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome hoop(std::initializer_list<std::string> args) {
  std::vector<std::string> owned{"hoop"};
  owned.insert(owned.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : owned) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Outcome o;
  o.code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("hoop_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(hoop({}).code == kExitInputError);
  CHECK(hoop({"--help"}).code == kExitOk);
  CHECK(hoop({"gradcheck"}).code == kExitOk);

  const auto bad = hoop({"gradcheck", "--corrupt", "layer0.fwd.W_hi"});
  CHECK(bad.code == kExitCheckFailed);
  CHECK(bad.out.find("layer0.fwd.W_hi[") != std::string::npos);

  const auto dir = scratch("codes");
  CHECK(hoop({"synth", "--out", dir.string(), "--set", "bogus.key=1"}).code == kExitInputError);
  CHECK(hoop({"train", "--out", dir.string(), "--data",
              std::string(HOOPNET_TEST_DATA_DIR) + "/nan_row.csv"})
            .code == kExitInputError);
}

TEST_CASE("divergence maps to its own exit code") {
  const auto dir = scratch("diverge");
  REQUIRE(hoop({"synth", "--out", dir.string(), "--n-shots", "200"}).code == kExitOk);
  const auto r = hoop({"train", "--out", (dir / "t").string(), "--data", (dir / "shots.csv").string(),
                       "--epochs", "3", "--set", "train.lr=1e300", "--set", "train.clip_norm=0",
                       "--set", "model.units=8"});
  CHECK(r.code == kExitDiverged);
}

TEST_CASE("synth output is byte-identical per seed") {
  const auto a = scratch("synth_a"), b = scratch("synth_b"), c = scratch("synth_c");
  REQUIRE(hoop({"synth", "--out", a.string(), "--n-shots", "300", "--seed", "7"}).code == kExitOk);
  REQUIRE(hoop({"synth", "--out", b.string(), "--n-shots", "300", "--seed", "7"}).code == kExitOk);
  REQUIRE(hoop({"synth", "--out", c.string(), "--n-shots", "300", "--seed", "8"}).code == kExitOk);
  CHECK(slurp(a / "shots.csv") == slurp(b / "shots.csv"));
  CHECK(slurp(a / "shots.csv") != slurp(c / "shots.csv"));
}

TEST_CASE("a resolved config reproduces the run") {
  const auto dir = scratch("rerun");
  REQUIRE(hoop({"synth", "--out", dir.string(), "--n-shots", "200"}).code == kExitOk);
  const auto data = (dir / "shots.csv").string();
  const auto first = dir / "first", second = dir / "second";
  REQUIRE(hoop({"train", "--out", first.string(), "--data", data, "--epochs", "2", "--set",
                "model.units=8", "--seed", "11"})
              .code == kExitOk);
  REQUIRE(hoop({"train", "--config", (first / "resolved_config.txt").string(), "--out",
                second.string(), "--data", data})
              .code == kExitOk);
  CHECK(slurp(first / kTrainReportFile).size() > 0);
  CHECK(slurp(first / kTrainReportFile) == slurp(second / kTrainReportFile));
  CHECK(slurp(first / "model.bin") == slurp(second / "model.bin"));

  SUBCASE("generate from the checkpoint") {
    const auto g = dir / "gen";
    REQUIRE(hoop({"generate", "--out", g.string(), "--checkpoint", first.string(), "--prefix", data,
                  "--prefix-frames", "9", "-K", "2", "-S", "3"})
                .code == kExitOk);
    std::ifstream in(g / "trajectories.csv");
    std::string line;
    std::size_t generated = 0;
    while (std::getline(in, line)) generated += line.ends_with(",generated");
    CHECK(generated == 8 * 3);
  }
}

TEST_CASE("RunConfig write/apply round trip") {
  RunConfig a;
  a.set("train.lr", "0.0025");
  a.set("model.units", "32");
  a.set("seed", "42");
  a.resolve();
  std::ostringstream first;
  a.write(first);

  RunConfig b;
  std::istringstream in(first.str());
  b.apply(in);
  b.resolve();
  std::ostringstream second;
  b.write(second);
  CHECK(first.str() == second.str());
  CHECK(b.model.units == 32);

  CHECK_THROWS(a.set("no.such.key", "1"));
  CHECK(RunConfig::describe_keys().find("train.lr") != std::string::npos);
}
