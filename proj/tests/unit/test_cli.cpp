#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <json.hpp>

#include "test_support.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Result {
  int code = -1;
  std::string output;
};

Result cli(const fs::path& scratch, const std::string& args) {
  const auto log = scratch / "cli.log";
  const std::string cmd = std::string("'") + LEVELSEQ_CLI_PATH + "' " + args + " > '" + log.string() + "' 2>&1";
  const int rc = std::system(cmd.c_str());
  return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, slurp(log)};
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("exit codes") {
  auto dir = testing::scratch_dir("cli_codes");
  CHECK(cli(dir, "--help").code == 0);
  CHECK(cli(dir, "--version").code == 0);
  CHECK(cli(dir, "").code == 2);
  CHECK(cli(dir, "ingest --no-such-flag").code == 2);
  CHECK(cli(dir, "encode --snaking X --out " + q(dir / "e")).code == 2);

  // a corpus holding one level with an unknown character
  fs::create_directories(dir / "bad");
  {
    std::ofstream f(dir / "bad" / "broken.txt");
    for (int r = 0; r < 16; ++r) f << (r == 3 ? "--@-\n" : "----\n");
  }
  auto r = cli(dir, "ingest --corpus " + q(dir / "bad"));
  CHECK(r.code == 1);
  CHECK(r.output.find("levelseq: error") != std::string::npos);
}

TEST_CASE("ingest reports the corpus and writes a manifest") {
  auto dir = testing::scratch_dir("cli_ingest");
  auto r = cli(dir, "ingest --corpus " + q(testing::data_dir() / "corpus") + " --out " + q(dir / "out"));
  REQUIRE(r.code == 0);
  CHECK(r.output.find("levels") != std::string::npos);
  auto stats = nlohmann::json::parse(slurp(dir / "out" / "stats.json"));
  CHECK(stats.at("levels").get<int>() > 0);
  auto manifest = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
  CHECK(manifest.at("command") == "ingest");
  CHECK(manifest.contains("config_hash"));
  CHECK(manifest.at("argv").at(0) == "ingest");
}

TEST_CASE("replay of an encode run is byte-identical") {
  auto dir = testing::scratch_dir("cli_replay");
  const auto corpus = testing::data_dir() / "corpus";
  REQUIRE(cli(dir, "encode --corpus " + q(corpus) + " --snaking Y --paths Y --out " + q(dir / "a")).code == 0);
  REQUIRE(cli(dir, "replay --manifest " + q(dir / "a" / "manifest.json") + " --out " + q(dir / "b")).code == 0);
  int compared = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    if (e.path().filename() == "manifest.json") continue;
    CAPTURE(e.path());
    CHECK(slurp(e.path()) == slurp(dir / "b" / e.path().filename()));
    ++compared;
  }
  CHECK(compared > 1);
  // the replayed run records its own replayable manifest
  CHECK(cli(dir, "replay --manifest " + q(dir / "b" / "manifest.json")).code == 0);
}
