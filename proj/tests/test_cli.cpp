#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gbs/cli.hpp"
#include "gbs/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome gbs_run(std::vector<std::string> args) {
  args.insert(args.begin(), "gbs");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = gbs::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("gbs_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string path(const std::string& name) { return (scratch_dir() / name).string(); }

std::string slurp(const std::string& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void spit(const std::string& p, const std::string& text) { std::ofstream(p) << text; }

std::vector<std::string> split(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> cells;
  for (std::string c; ss >> c;) cells.push_back(c);
  return cells;
}

const std::vector<std::string> kSample = {"sample", "--n", "6", "--xi", "1,0.3,0.8", "--beta", "100",
                                          "--seed", "0", "--count"};

Outcome sample_to(const std::string& out, int count, std::vector<std::string> extra = {}) {
  auto args = kSample;
  args.push_back(std::to_string(count));
  args.push_back("--out");
  args.push_back(out);
  args.insert(args.end(), extra.begin(), extra.end());
  return gbs_run(args);
}

}  // namespace

TEST_CASE("sample writes a CSV batch that reads back bit for bit") {
  const auto csv = path("s.csv");
  REQUIRE(sample_to(csv, 20).code == 0);
  const std::string text = slurp(csv);
  CHECK(text.rfind("t11,t12,t22\n", 0) == 0);
  const auto batch = gbs::read_batch(csv);
  CHECK(batch.count() == 20);
  CHECK(batch.m == 2);
  std::ostringstream again;
  gbs::write_batch_csv(batch, again);
  CHECK(again.str() == text);
}

TEST_CASE("same seed gives byte-identical output") {
  REQUIRE(sample_to(path("a.csv"), 15).code == 0);
  REQUIRE(sample_to(path("b.csv"), 15).code == 0);
  REQUIRE(sample_to(path("c.csv"), 15, {"--family", "kotz", "--q", "2", "--r", "1", "--s", "1"}).code == 0);
  CHECK(slurp(path("a.csv")) == slurp(path("b.csv")));
  CHECK(slurp(path("a.csv")) != slurp(path("c.csv")));
  auto stdout_run = kSample;
  stdout_run.push_back("15");
  CHECK(gbs_run(stdout_run).out == slurp(path("a.csv")));
}

TEST_CASE("JSON batches are detected by extension") {
  const auto json = path("s.json");
  REQUIRE(sample_to(json, 10).code == 0);
  CHECK(slurp(json).find("\"matrices\"") != std::string::npos);
  const auto from_json = gbs::read_batch(json);
  REQUIRE(sample_to(path("s10.csv"), 10).code == 0);
  const auto from_csv = gbs::read_batch(path("s10.csv"));
  for (std::size_t i = 0; i < 10; ++i) CHECK(from_json.matrices[i] == from_csv.matrices[i]);
  const auto fit = gbs_run({"fit", "--data", json, "--n", "6"});
  CHECK(fit.code == 0);
}

TEST_CASE("fit on the recovery fixture") {
  const auto csv = path("fixture.csv");
  REQUIRE(sample_to(csv, 200).code == 0);
  const auto res = gbs_run({"fit", "--data", csv, "--n", "6", "--family", "gaussian", "--out", path("fit.json")});
  REQUIRE(res.code == 0);
  const std::string json = slurp(path("fit.json"));
  CHECK(json.find("\"beta\"") != std::string::npos);
  CHECK(json.find("\"bic_star\"") != std::string::npos);
  const auto text = gbs_run({"fit", "--data", csv, "--n", "6"});
  CHECK(text.code == 0);
  CHECK(text.out.find("beta") != std::string::npos);
}

TEST_CASE("compare prints the baseline plus one row per s") {
  const auto csv = path("cmp.csv");
  REQUIRE(sample_to(csv, 20, {"--family", "kotz", "--q", "22", "--r", "7.5", "--s", "1"}).code == 0);
  const auto res = gbs_run({"compare", "--data", csv, "--n", "6", "--s-grid", "0.5,1,2", "--jobs", "2"});
  REQUIRE(res.code == 0);
  std::istringstream lines(res.out);
  std::vector<std::vector<std::string>> table;
  bool in_table = false;
  for (std::string line; std::getline(lines, line);) {
    const auto cells = split(line);
    if (!cells.empty() && cells[0] == "s" && cells.size() == 8) {
      in_table = true;
      continue;
    }
    if (in_table) {
      if (cells.empty()) break;
      table.push_back(cells);
    }
  }
  REQUIRE(table.size() == 4);
  CHECK(table[0][0] == "gaussian");
  CHECK(table[1][0] == "0.5");
  CHECK(table[2][0] == "1");
  CHECK(table[3][0] == "2");
  for (const auto& row : table) CHECK(row.size() == 8);
  int graded = 0;
  for (const char* g : {"Weak", "Positive", "Strong", "Very strong"}) {
    for (auto at = res.out.find(g); at != std::string::npos; at = res.out.find(g, at + 1)) ++graded;
  }
  CHECK(graded >= 3);

  const auto json = gbs_run({"compare", "--data", csv, "--n", "6", "--s-grid", "0.5,1,2", "--out", path("cmp.json")});
  CHECK(json.code == 0);
  CHECK(slurp(path("cmp.json")).find("\"grade\"") != std::string::npos);
}

TEST_CASE("density rows") {
  const auto csv = path("d.csv");
  REQUIRE(sample_to(csv, 5).code == 0);
  const auto res = gbs_run({"density", "--data", csv, "--n", "6", "--xi", "1,0.3,0.8", "--beta", "100"});
  REQUIRE(res.code == 0);
  CHECK(res.out.rfind("row,log_density,in_branch\n", 0) == 0);
  CHECK(std::count(res.out.begin(), res.out.end(), '\n') == 6);
  const auto outside = gbs_run({"density", "--data", csv, "--n", "6", "--xi", "1,0.3,0.8", "--beta", "1e6",
                                "--convention", "branch"});
  CHECK(outside.code == 0);
  CHECK(outside.out.find("-inf,0") != std::string::npos);
}

TEST_CASE("validate passes") {
  const auto res = gbs_run({"validate"});
  CHECK(res.code == 0);
  CHECK(res.out.find("FAIL") == std::string::npos);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(gbs_run({}).code == 2);
  CHECK(gbs_run({"frobnicate"}).code == 2);
  CHECK(gbs_run({"sample", "--n", "6", "--xi", "1,0.3,0.8", "--beta", "100"}).code == 2);  // no --count
  CHECK(gbs_run({"fit", "--n", "6"}).code == 2);                                             // no --data
  CHECK(gbs_run({"fit", "--data", path("s.csv"), "--n", "6", "--family", "cauchy"}).code == 2);
  CHECK(gbs_run({"compare", "--data", path("s.csv"), "--n", "6", "--s-grid", "1,x"}).code == 2);
  CHECK(gbs_run({"compare", "--data", path("s.csv"), "--n", "6", "--jobs", "0"}).code == 2);
  CHECK(gbs_run({"density", "--data", path("s.csv"), "--n", "6", "--xi", "1,0.3", "--beta", "1"}).code == 2);
  CHECK(gbs_run({"fit", "--data", path("s.csv"), "--n", "6", "--convention", "sideways"}).code == 2);
  const auto help = gbs_run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("compare") != std::string::npos);
}

TEST_CASE("data errors cite the line") {
  spit(path("bad_number.csv"), "t11,t12,t22\n1,0,1\n2,abc,2\n");
  auto res = gbs_run({"fit", "--data", path("bad_number.csv"), "--n", "6"});
  CHECK(res.code == 1);
  CHECK(res.err.find("line 3") != std::string::npos);

  spit(path("not_spd.csv"), "t11,t12,t22\n1,0,1\n2,0,2\n1,5,1\n");
  res = gbs_run({"fit", "--data", path("not_spd.csv"), "--n", "6"});
  CHECK(res.code == 1);
  CHECK(res.err.find("line 4") != std::string::npos);

  spit(path("short_row.csv"), "t11,t12,t22\n1,0\n");
  res = gbs_run({"fit", "--data", path("short_row.csv"), "--n", "6"});
  CHECK(res.code == 1);
  CHECK(res.err.find("line 2") != std::string::npos);

  res = gbs_run({"fit", "--data", path("missing.csv"), "--n", "6"});
  CHECK(res.code == 1);
}

TEST_CASE("config file fills flags and the command line wins") {
  spit(path("cfg.json"), R"({"n": 6, "xi": [1, 0.3, 0.8], "beta": 100, "seed": 0, "count": 15})");
  const auto from_cfg = gbs_run({"sample", "--config", path("cfg.json")});
  REQUIRE(from_cfg.code == 0);
  CHECK(from_cfg.out == slurp(path("a.csv")));
  const auto overridden = gbs_run({"sample", "--config", path("cfg.json"), "--seed", "1"});
  REQUIRE(overridden.code == 0);
  CHECK(overridden.out != from_cfg.out);

  spit(path("cfg_bad.json"), R"({"n": 6, "colour": "blue"})");
  CHECK(gbs_run({"sample", "--config", path("cfg_bad.json")}).code == 2);
  spit(path("cfg_broken.json"), "{");
  CHECK(gbs_run({"sample", "--config", path("cfg_broken.json")}).code == 2);
}
