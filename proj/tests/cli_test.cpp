#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

using ckm::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = ckm::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string write_tmp(const std::string& name, const std::string& text) {
  const auto p = (std::filesystem::temp_directory_path() / ("ckm_cli_" + name)).string();
  std::ofstream(p) << text;
  return p;
}

const std::string kFour = write_tmp("four.csv", "x\n0\n1\n10\n11\n");
const std::string kEight = write_tmp("eight.csv", "0,0\n0.4,0.1\n0.2,0.5\n0.1,0.3\n6,6\n6.3,5.8\n5.9,6.4\n6.2,6.1\n");

}  // namespace

TEST(Cli, SolveWritesSolution) {
  auto r = run({"solve", "--input", kFour, "--k", "2", "--epsilon", "0.5", "--constraint",
                R"({"type":"r-gather","r":2})", "--seed", "7"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = json::parse(r.out);
  EXPECT_EQ(j["schema"], 1);
  EXPECT_TRUE(j["constraint_satisfied"].get<bool>());
  EXPECT_GE(j["cost"].get<double>(), 1.0);  // the optimum of this instance
  auto again = run({"solve", "--input", kFour, "--k", "2", "--epsilon", "0.5", "--constraint",
                    R"({"type":"r-gather","r":2})", "--seed", "7", "--threads", "4"});
  EXPECT_EQ(again.out, r.out);
}

TEST(Cli, SolveCsvFormat) {
  auto r = run({"solve", "--input", kFour, "--k", "2", "--epsilon", "0.5", "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("point,cluster\n", 0), 0u);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run({"solve", "--input", kFour, "--k", "2", "--epsilon", "0.5", "--constraint",
                 R"({"type":"r-gather","r":5})"}).code, 3);
  auto missing = run({"solve", "--input", "/nonexistent/x.csv", "--k", "2", "--epsilon", "0.5"});
  EXPECT_EQ(missing.code, 4);
  EXPECT_FALSE(missing.err.empty());
  EXPECT_EQ(run({"solve", "--input", kFour, "--k", "2", "--epsilon", "1.5"}).code, 2);
  EXPECT_EQ(run({"solve", "--input", kFour, "--k", "2"}).code, 2);
  EXPECT_EQ(run({"solve", "--input", kFour, "--k", "2", "--epsilon", "0.5", "--constraint", "{bad"}).code, 2);
  EXPECT_EQ(run({"solve", "--input", kFour, "--k", "2", "--epsilon", "0.5", "--mode", "exact", "--N", "3"}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"solve", "--input", kFour, "--k", "2", "--epsilon", "0.5", "--output", "/nonexistent/dir/o.json"})
                .code,
            4);
}

TEST(Cli, ConfigFileAndOverrides) {
  const auto cfg = write_tmp("cfg.json", R"({"schema":1,"problem":"k-means","k":2,"epsilon":0.5,)"
                                         R"("mode":"practical","N":16,"M":4,"repeats":2,"subset_budget":8})");
  auto r = run({"list", "--input", kFour, "--config", cfg});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = json::parse(r.out);
  EXPECT_EQ(j["params"]["N"], 16);
  EXPECT_EQ(j["centers"].size(), 2u * 8u * 8u);
  auto o = run({"list", "--input", kFour, "--config", cfg, "--subset-budget", "2"});
  EXPECT_EQ(json::parse(o.out)["centers"].size(), 2u * 2u * 2u);
}

TEST(Cli, ListCache) {
  const auto cache = (std::filesystem::temp_directory_path() / "ckm_cli_cache.bin").string();
  auto r = run({"list", "--input", kFour, "--k", "2", "--epsilon", "0.5", "--cache", cache});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = json::parse(r.out);
  EXPECT_EQ(ckm::read_candidate_cache(cache).size(), j["centers"].size());
  std::remove(cache.c_str());
}

TEST(Cli, KMedianSolve) {
  auto r = run({"solve", "--input", kEight, "--problem", "k-median", "--k", "2", "--epsilon", "0.5", "--N", "8",
                "--M", "2", "--subset-budget", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["problem"], "k-median");
}

TEST(Cli, Verify) {
  auto r = run({"verify", "--input", kEight, "--k", "2", "--epsilon", "0.5", "--constraint",
                R"({"type":"exact-sizes","sizes":[4,4]})", "--trials", "5", "--N", "16", "--M", "4",
                "--subset-budget", "50"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = json::parse(r.out);
  EXPECT_EQ(j["success"].size(), 5u);
  EXPECT_FALSE(j["guarantee_applies"].get<bool>());
  // one data-point pair per seed never serves the target within 1%
  auto low = run({"verify", "--input", kEight, "--k", "2", "--epsilon", "0.01", "--trials", "3", "--N", "2",
                  "--M", "1", "--repeats", "1", "--subset-budget", "1", "--min-rate", "1.0",
                  "--constraint", R"({"type":"exact-sizes","sizes":[4,4]})"});
  EXPECT_EQ(low.code, 5) << low.err;
  EXPECT_FALSE(json::parse(low.out)["pass"].get<bool>());
  EXPECT_EQ(run({"verify", "--input", kEight, "--k", "2", "--epsilon", "0.5", "--min-rate", "2"}).code, 2);
}

TEST(Cli, VerifyRejectsLargeN) {
  std::string text;
  for (int i = 0; i < 15; ++i) text += std::to_string(i) + "\n";
  const auto p = write_tmp("fifteen.csv", text);
  EXPECT_EQ(run({"verify", "--input", p, "--k", "2", "--epsilon", "0.5"}).code, 2);
}

TEST(Cli, LowerBound) {
  auto r = run({"lowerbound", "--k", "2", "--epsilon", "0.0625"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = json::parse(r.out);
  EXPECT_EQ(j["m"], 4);
  EXPECT_EQ(j["counting"]["family_size"], "70");
  EXPECT_LE(j["identity_checks"]["max_residual"].get<double>(), 1e-9);
  EXPECT_TRUE(j["identity_checks"]["opt_exact"].get<bool>());
  auto csv = run({"lowerbound", "--k", "2", "--epsilon", "0.0625", "--format", "csv"});
  std::size_t lines = 0;
  for (char c : csv.out) lines += c == '\n';
  EXPECT_EQ(lines, 8u);
  auto one = run({"lowerbound", "--k", "1", "--epsilon", "0.25"});
  EXPECT_EQ(json::parse(one.out)["counting"]["family_size"], "1");
  EXPECT_EQ(run({"lowerbound", "--k", "2", "--epsilon", "1.0"}).code, 2);
  const auto inst = (std::filesystem::temp_directory_path() / "ckm_cli_inst.csv").string();
  EXPECT_EQ(run({"lowerbound", "--k", "2", "--m", "3", "--instance", inst}).code, 0);
  EXPECT_EQ(ckm::load_dataset(inst).size(), 6u);
  std::remove(inst.c_str());
}

TEST(Cli, Bench) {
  auto r = run({"bench", "--input", kEight, "--k", "2", "--epsilon", "0.5", "--N", "8", "--M", "2",
                "--budgets", "1,4,16", "--constraint", R"({"type":"r-gather","r":3})"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "N,M,subset_budget,repeats,list_size,nodes_visited,wall_seconds,best_cost,opt,ratio");
  int rows = 0;
  std::size_t prev_size = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    ASSERT_EQ(f.size(), 10u);
    EXPECT_GE(std::stod(f[9]), 1.0 - 1e-12);
    const auto size = std::stoul(f[4]);
    EXPECT_GE(size, prev_size);
    prev_size = size;
  }
  EXPECT_EQ(rows, 3);
  EXPECT_EQ(run({"bench", "--input", kEight, "--k", "2", "--epsilon", "0.5", "--budgets", "0"}).code, 2);
}
