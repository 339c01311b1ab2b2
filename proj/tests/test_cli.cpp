#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wsiflow/cli.hpp"

using namespace wsiflow;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag)
      : path_(fs::temp_directory_path() / ("wsiflow_cli_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  std::string str(const std::string& leaf = "") const { return (path_ / leaf).string(); }

 private:
  fs::path path_;
};

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    lines.push_back(line);
  }
  return lines;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

}  // namespace

TEST_CASE("help and bad flags") {
  CHECK(run({"--help"}).code == kExitOk);
  const auto help = run({"pipeline", "--help"});
  CHECK(help.code == kExitOk);
  CHECK(help.out.find("--input-dir") != std::string::npos);
  CHECK(run({"pipeline", "--no-such-flag"}).code == kExitUsage);
  CHECK(run({"simulate", "--policy", "lottery"}).code == kExitUsage);
  CHECK(run({"profile", "--preset", "nonexistent"}).code == kExitUsage);
  CHECK(run({"profile"}).code == kExitUsage);
}

TEST_CASE("pipeline input errors") {
  TempDir dir("input");
  const auto missing = run({"pipeline", "--input-dir", dir.str("nope"), "--out", dir.str("out")});
  CHECK(missing.code == kExitUsage);
  CHECK(missing.err.find(dir.str("nope")) != std::string::npos);

  fs::create_directories(dir.path() / "tiles");
  write_file(dir.path() / "tiles" / "a.ppm", "P6\n4 4\n255\nxx");
  const auto corrupt = run({"pipeline", "--input-dir", dir.str("tiles"), "--out", dir.str("out")});
  CHECK(corrupt.code == kExitFailure);
  CHECK_FALSE(corrupt.err.empty());
}

TEST_CASE("pipeline writes features and timing") {
  TempDir dir("pipeline");
  const auto r = run({"pipeline", "--tiles", "2", "--tile-size", "64", "--objects", "2", "--workers", "2", "--out",
                      dir.str()});
  REQUIRE(r.code == kExitOk);
  CHECK(fs::exists(dir.path() / "features_tile_0000.csv"));
  CHECK(fs::exists(dir.path() / "features_tile_0001.csv"));
  CHECK(lines_of(dir.path() / "features_tile_0000.csv").size() == 3);
  CHECK(lines_of(dir.path() / "timing.csv").size() == 12);
}

TEST_CASE("config files override flags") {
  TempDir dir("config");
  write_file(dir.path() / "cfg.json", R"({"tiles": 1, "tile-size": 48, "objects": 1})");
  const auto r = run({"pipeline", "--tiles", "3", "--config", dir.str("cfg.json"), "--out", dir.str("out")});
  REQUIRE(r.code == kExitOk);
  CHECK(fs::exists(dir.path() / "out" / "features_tile_0000.csv"));
  CHECK_FALSE(fs::exists(dir.path() / "out" / "features_tile_0001.csv"));

  write_file(dir.path() / "bad.json", R"({"tilez": 1})");
  const auto bad = run({"pipeline", "--config", dir.str("bad.json"), "--out", dir.str("out")});
  CHECK(bad.code == kExitUsage);
  CHECK(bad.err.find("tilez") != std::string::npos);
  CHECK(run({"pipeline", "--config", dir.str("absent.json")}).code == kExitUsage);
}

TEST_CASE("bench suites append") {
  TempDir dir("bench");
  const std::vector<std::string> args = {"bench", "--suite", "all", "--workers", "2", "--ops", "5000", "--matrix-dim",
                                         "64", "--stream-bytes", "65536", "--out", dir.str()};
  const auto first = run(args);
  REQUIRE(first.code == kExitOk);
  for (const char* section : {"[random]", "[atomic]", "[stream]"}) {
    CHECK(first.out.find(section) != std::string::npos);
  }
  const auto file = dir.path() / "bench.jsonl";
  const auto once = lines_of(file).size();
  CHECK(once == 5);
  REQUIRE(run(args).code == kExitOk);
  const auto twice = lines_of(file);
  CHECK(twice.size() == 2 * once);
  for (const auto& line : twice) {
    CHECK(nlohmann::json::parse(line).contains("median"));
  }
  CHECK(run({"bench", "--suite", "disk", "--out", dir.str()}).code == kExitUsage);
  CHECK(run({"bench", "--suite", "atomic", "--repetitions", "2", "--out", dir.str()}).code == kExitUsage);
}

TEST_CASE("simulate with a homogeneous profile") {
  TempDir dir("simulate");
  const auto r =
      run({"simulate", "--preset", "homogeneous", "--tiles", "20", "--nodes", "1,2", "--out", dir.str()});
  REQUIRE(r.code == kExitOk);
  const auto rows = lines_of(dir.path() / "simulate.csv");
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::stringstream row(rows[i]);
    std::string cell;
    for (int c = 0; c < 5; ++c) {
      std::getline(row, cell, ',');
    }
    CHECK(std::stod(cell) == 1.0);
  }
  CHECK(run({"simulate", "--profile", dir.str("missing.json"), "--out", dir.str()}).code == kExitUsage);
}

TEST_CASE("profile presets round-trip") {
  TempDir dir("profile");
  const auto r = run({"profile", "--preset", "bimodal", "--out", dir.str("p.json")});
  REQUIRE(r.code == kExitOk);
  std::ifstream in(dir.path() / "p.json");
  const auto doc = nlohmann::json::parse(in);
  CHECK(doc.is_object());
  const auto sim = run({"simulate", "--profile", dir.str("p.json"), "--tiles", "8", "--nodes", "1", "--out", dir.str()});
  CHECK(sim.code == kExitOk);
}
